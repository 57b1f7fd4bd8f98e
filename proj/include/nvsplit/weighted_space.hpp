#pragma once

#include "nvsplit/core.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace nvsplit {

enum class WeightFamily { Polynomial, Cosh, GaussExp };

/// Admissible weight psi(x) = rho(|x|) with rho one of
///   Polynomial: (1 + r^2)^{s/2}, s >= 2
///   Cosh:       cosh(beta r),    beta > 0
///   GaussExp:   exp(eta r^2),    eta > 0
/// where r is the dom A^l norm of x. All three satisfy psi >= 1 and are
/// nondecreasing in r.
///
/// For level l > 0 the squared norm is sum_k (sum_{i<=l} lambda_k^{2i}) x_k^2,
/// which needs the eigenvalues of the (diagonal) A. A custom squared-norm
/// function can replace the spectral one, e.g. for forward curves.
class WeightFunction {
public:
    using SquaredNorm = std::function<double(const Vector&)>;

    static WeightFunction polynomial(double s, int level = 0, std::vector<double> spectrum = {});
    static WeightFunction cosh(double beta, int level = 0, std::vector<double> spectrum = {});
    static WeightFunction gauss_exp(double eta, int level = 0, std::vector<double> spectrum = {});

    /// Same family and parameter, but r^2 is computed by `norm2`.
    WeightFunction with_squared_norm(SquaredNorm norm2) const;

    WeightFamily family() const noexcept { return family_; }
    double parameter() const noexcept { return parameter_; }
    int level() const noexcept { return level_; }
    const std::vector<double>& spectrum() const noexcept { return spectrum_; }

    double squared_norm(const Vector& x) const;
    /// rho applied to an already computed squared norm.
    double profile(double r2) const;
    double operator()(const Vector& x) const { return profile(squared_norm(x)); }

private:
    WeightFunction(WeightFamily family, double parameter, int level, std::vector<double> spectrum);

    WeightFamily family_;
    double parameter_;
    int level_;
    std::vector<double> spectrum_;
    std::vector<double> level_factors_;   // sum_{i<=l} lambda_k^{2i}
    SquaredNorm custom_norm2_;
};

double eval_weight(const WeightFunction& w, const Vector& x);

/// Membership of x in the sublevel set K_R = {psi <= R}.
bool sublevel_member(const WeightFunction& w, const Vector& x, double R);

struct WeightedSample {
    Vector x;
    double value;
};

/// max over the cloud of |f(x)| / psi(x).
double weighted_sup_norm(std::span<const WeightedSample> values, const WeightFunction& w);

/// Same supremum restricted to points outside K_R (psi(x) > R); 0 if none.
double growth_decay_ratio(std::span<const WeightedSample> values, const WeightFunction& w, double R);

} // namespace nvsplit
