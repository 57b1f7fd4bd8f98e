#pragma once

#include "nvsplit/models.hpp"
#include "nvsplit/weighted_space.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace nvsplit {

/// Forward-rate curve on the uniform maturity grid x_i = i h, i = 0..M.
struct ForwardCurve {
    double spacing = 0.0;
    Vector values;
    double alpha = 1.0; // exponential weight of the curve space

    int intervals() const noexcept { return static_cast<int>(values.size()) - 1; }
    double x_max() const noexcept { return spacing * intervals(); }
    double node(int i) const noexcept { return spacing * i; }

    /// Throws ArgumentError unless M >= 8, h > 0, alpha > 0 and values are finite.
    void validate() const;

    static ForwardCurve sample(double x_max, int intervals, double alpha, const std::function<double(double)>& fn);
};

bool same_grid(const ForwardCurve& a, const ForwardCurve& b);

/// Node-wise f(x) * (cumulative trapezoid of f over [0, x]).
ForwardCurve s_operator(const ForwardCurve& f);

using CurveVolatility = std::function<ForwardCurve(const ForwardCurve&)>;

/// sum_j S(sigma_j(h)).
ForwardCurve hjm_drift(const ForwardCurve& curve, const std::vector<CurveVolatility>& vols);

/// h(x + t) by linear interpolation, flat beyond x_max.
ForwardCurve shift_semigroup(const ForwardCurve& curve, double t);
void shift_values(double spacing, const Vector& in, double t, Vector& out);

/// (|h(0)|^2 + int |h'(x)|^2 e^{alpha x} dx)^{1/2}.
double h_alpha_norm(const ForwardCurve& curve);
/// Variant with |h(x)|^2 in the integrand.
double h_alpha_norm_values(const ForwardCurve& curve);
double h_alpha_norm_squared(double spacing, double alpha, const Vector& values);

/// sigma(h)(x) = c e^{-beta x} (state independent), or
/// sigma(h)(x) = c (1 + a tanh h(x_bar)) e^{-beta x} (scalar gain).
struct HjmVolSpec {
    enum class Kind { Exponential, ScalarGain };
    Kind kind = Kind::Exponential;
    double c = 0.5;
    double beta = 1.0;
    double gain = 0.5;
    double node_x = 1.0;
};

struct HjmSpec {
    double x_max = 20.0;
    int intervals = 256;
    double alpha = 1.0;
    double s = 2.0;
    std::vector<HjmVolSpec> vols;

    double spacing() const { return x_max / intervals; }
    void validate() const;
};

struct HjmModel {
    SplitModel model;
    WeightFunction weight; // (1 + |h|_{H_alpha}^2)^{s/2}
    HjmSpec spec;

    ForwardCurve curve(const Vector& values) const;
};

HjmModel make_hjm_model(const HjmSpec& spec);

/// exp(-int_0^tau h) with trapezoid quadrature; tau must lie in (0, x_max].
PayoffSpec bond_payoff(const HjmSpec& spec, double tau);

/// Initial curve h0(x) = long + (short - long) e^{-kappa x}; flat when short == long.
struct InitialCurveSpec {
    double short_rate = 0.05;
    double long_rate = 0.05;
    double kappa = 1.0;
};

Vector initial_curve(const HjmSpec& spec, const InitialCurveSpec& curve);

/// Rows "x,value" with a header line.
void write_curve_csv(std::ostream& out, const ForwardCurve& curve);

} // namespace nvsplit
