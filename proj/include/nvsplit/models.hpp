#pragma once

#include "nvsplit/core.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvsplit {

/// Payoff f evaluated on terminal states. The polynomial kinds act on one
/// coordinate; custom payoffs carry their own function and have no oracle.
struct PayoffSpec {
    enum class Kind { Moment1, Moment2, Poly, Custom };

    Kind kind = Kind::Moment1;
    int coordinate = 0;
    std::vector<double> coefficients;   // Poly: c_0 + c_1 y + ... + c_k y^k
    std::string id;
    std::function<double(const Vector&)> custom;

    static PayoffSpec moment1(int coordinate);
    static PayoffSpec moment2(int coordinate);
    static PayoffSpec poly(int coordinate, std::vector<double> coefficients);
    static PayoffSpec make_custom(std::string id, std::function<double(const Vector&)> fn);

    double operator()(const Vector& x) const;

    bool is_polynomial() const noexcept { return kind != Kind::Custom; }
    /// Coefficients in the monomial basis of the selected coordinate.
    std::vector<double> monomial_coefficients() const;
    int degree() const;
};

/// Expectation of a payoff of the true dynamics; nullopt when the oracle
/// does not cover the payoff.
using MomentOracle = std::function<std::optional<double>(const PayoffSpec&, double T, const Vector& x0)>;

/// Split form of dz = (Az + alpha(z)) dt + sum_j sigma_j(z) dW^j with A diagonal
/// (or an explicitly supplied linear semigroup).
struct SplitModel {
    std::string name;
    int dim = 1;
    std::vector<double> spectrum;               // eigenvalues of A, length dim
    FlowMap semigroup;                          // overrides the diagonal action when set
    VectorField drift;                          // alpha
    std::vector<VectorField> diffusions;        // sigma_j, j = 1..d
    std::vector<JacobianAction> diffusion_jacobians;
    FlowMap exact_drift_flow;                   // flow of Az + alpha_0(z), if known
    std::vector<FlowMap> exact_diffusion_flows; // entry j may be empty
    MomentOracle moment_oracle;
    bool affine = false;

    int noise_dim() const noexcept { return static_cast<int>(diffusions.size()); }
    bool has_exact_diffusion_flow(int j) const
    {
        return j < static_cast<int>(exact_diffusion_flows.size()) && static_cast<bool>(exact_diffusion_flows[j]);
    }

    /// Throws ConfigError when the fields are inconsistent.
    void validate() const;
};

/// alpha(x) - 1/2 sum_j D sigma_j(x) sigma_j(x), allocation free after construction.
class CorrectedDrift {
public:
    explicit CorrectedDrift(const SplitModel& model);
    void operator()(const Vector& x, Vector& out);

private:
    const SplitModel* model_;
    Vector sigma_;
    Vector jv_;
};

Vector stratonovich_drift(const SplitModel& m, const Vector& x);

/// exp(tA) x; t must be >= 0.
Vector apply_A_semigroup(const SplitModel& m, double t, const Vector& x);
void apply_A_semigroup_into(const SplitModel& m, double t, const Vector& x, Vector& out);

enum class BuiltinModel { OU, GBM, LinearGrowth1D, HeatSpde };

std::optional<BuiltinModel> parse_builtin(std::string_view name);
std::string_view builtin_name(BuiltinModel model);
std::vector<std::string> builtin_names();

/// Named parameters; scalars are single-element lists.
using ModelParams = std::map<std::string, std::vector<double>>;

/// OU:              theta (1), mu (0), sigma (0.5)
/// GBM:             mu (0.1), sigma (0.2)
/// LINEAR_GROWTH_1D: a (-0.5), b (0.3), c (0.2)
/// HEAT_SPDE:       modes (16), noise_modes (4), amplitudes (1.0; scalar or one per noise mode)
SplitModel make_builtin(BuiltinModel name, const ModelParams& params = {});
SplitModel make_builtin(std::string_view name, const ModelParams& params = {});

/// E[f(x(T, x0))] from the model's closed-form oracle.
double exact_expectation(const SplitModel& m, const PayoffSpec& payoff, double T, const Vector& x0);

/// E[y^k], k = 0..4, for y ~ Normal(mean, var).
double gaussian_raw_moment(int k, double mean, double var);

/// sum_k c_k E[y^k] for y ~ Normal(mean, var); requires degree <= 4.
double gaussian_polynomial_expectation(const std::vector<double>& coefficients, double mean, double var);

} // namespace nvsplit
