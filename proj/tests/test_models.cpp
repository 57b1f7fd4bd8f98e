#include "nvsplit/flows.hpp"
#include "nvsplit/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nvsplit;

namespace {

std::vector<SplitModel> all_builtins()
{
    std::vector<SplitModel> out;
    for (const auto& name : builtin_names()) out.push_back(make_builtin(name));
    return out;
}

/// alpha - 1/2 sum_j D sigma_j sigma_j with the Jacobian by central differences.
Vector fd_stratonovich(const SplitModel& m, const Vector& x)
{
    Vector out(m.dim), sigma(m.dim), plus(m.dim), minus(m.dim);
    m.drift(x, out);
    for (int j = 0; j < m.noise_dim(); ++j) {
        m.diffusions[j](x, sigma);
        const double eps = 1e-6;
        m.diffusions[j](x + eps * sigma, plus);
        m.diffusions[j](x - eps * sigma, minus);
        out -= 0.5 * (plus - minus) / (2.0 * eps);
    }
    return out;
}

SplitModel diagonal_model(std::vector<double> spectrum)
{
    SplitModel m;
    m.name = "diag";
    m.dim = static_cast<int>(spectrum.size());
    m.spectrum = std::move(spectrum);
    m.drift = [](const Vector&, Vector& out) { out.setZero(); };
    m.validate();
    return m;
}

} // namespace

TEST(StratonovichDrift, GbmAtOne)
{
    const SplitModel m = make_builtin(BuiltinModel::GBM);
    EXPECT_NEAR(stratonovich_drift(m, Vector::Constant(1, 1.0))[0], 0.08, 1e-15);
}

TEST(StratonovichDrift, AdditiveNoiseLeavesDriftUnchanged)
{
    for (auto model : {BuiltinModel::OU, BuiltinModel::HeatSpde}) {
        const SplitModel m = make_builtin(model);
        const Vector x = Vector::LinSpaced(m.dim, -1.5, 2.0);
        Vector alpha(m.dim);
        m.drift(x, alpha);
        EXPECT_EQ((stratonovich_drift(m, x) - alpha).lpNorm<Eigen::Infinity>(), 0.0);
    }
}

TEST(StratonovichDrift, ZeroModel)
{
    SplitModel m = diagonal_model({0.0, 0.0});
    m.diffusions = {[](const Vector&, Vector& out) { out.setZero(); }};
    m.diffusion_jacobians = {[](const Vector&, const Vector&, Vector& out) { out.setZero(); }};
    EXPECT_EQ(stratonovich_drift(m, Vector::Constant(2, 3.0)).norm(), 0.0);
}

TEST(StratonovichDrift, DimensionMismatchIsArgumentError)
{
    EXPECT_THROW(stratonovich_drift(make_builtin(BuiltinModel::OU), Vector::Zero(2)), ArgumentError);
}

TEST(StratonovichDrift, MatchesFiniteDifferencesOnRandomStates)
{
    std::mt19937_64 gen(7);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (const auto& m : all_builtins())
        for (int trial = 0; trial < 20; ++trial) {
            Vector x(m.dim);
            for (int i = 0; i < m.dim; ++i) x[i] = normal(gen);
            const Vector got = stratonovich_drift(m, x);
            const Vector want = fd_stratonovich(m, x);
            for (int i = 0; i < m.dim; ++i)
                EXPECT_NEAR(got[i], want[i], 1e-5 * std::max(1.0, std::abs(want[i]))) << m.name;
        }
}

TEST(ApplySemigroup, Examples)
{
    const SplitModel m = diagonal_model({-1.0, -4.0});
    const Vector x = Vector::Ones(2);
    EXPECT_EQ(apply_A_semigroup(m, 0.0, x), x);
    const Vector y = apply_A_semigroup(m, 1.0, x);
    EXPECT_NEAR(y[0], std::exp(-1.0), 1e-15);
    EXPECT_NEAR(y[1], std::exp(-4.0), 1e-15);
    EXPECT_NEAR(y[0], 0.36788, 5e-6);
    EXPECT_NEAR(y[1], 0.01832, 5e-6);

    const SplitModel sde = diagonal_model({0.0, 0.0, 0.0});
    const Vector z = Vector::LinSpaced(3, -1.0, 5.0);
    EXPECT_EQ(apply_A_semigroup(sde, 2.5, z), z);
}

TEST(ApplySemigroup, NegativeTimeIsArgumentError)
{
    EXPECT_THROW(apply_A_semigroup(diagonal_model({-1.0}), -0.1, Vector::Ones(1)), ArgumentError);
}

TEST(ApplySemigroup, SemigroupLaw)
{
    const SplitModel m = make_builtin(BuiltinModel::HeatSpde);
    const Vector x = Vector::LinSpaced(m.dim, 1.0, -1.0);
    for (double t : {0.0, 0.001, 0.02, 0.3})
        for (double s : {0.0, 0.005, 0.1}) {
            const Vector a = apply_A_semigroup(m, t + s, x);
            const Vector b = apply_A_semigroup(m, t, apply_A_semigroup(m, s, x));
            EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), 1e-12);
        }
}

TEST(MakeBuiltin, OuDefaults)
{
    const SplitModel m = make_builtin("OU");
    EXPECT_TRUE(m.affine);
    EXPECT_EQ(m.spectrum, std::vector<double>{0.0});
    Vector out(1);
    m.drift(Vector::Constant(1, 2.0), out);
    EXPECT_DOUBLE_EQ(out[0], -2.0);
    m.diffusions[0](Vector::Constant(1, 7.0), out);
    EXPECT_DOUBLE_EQ(out[0], 0.5);
}

TEST(MakeBuiltin, HeatSpectrumIsDirichlet)
{
    const SplitModel m = make_builtin(BuiltinModel::HeatSpde, {{"modes", {16}}, {"noise_modes", {4}}});
    ASSERT_EQ(m.dim, 16);
    EXPECT_EQ(m.noise_dim(), 4);
    EXPECT_NEAR(m.spectrum[0], -9.8696, 5e-5);
    for (int k = 1; k <= 16; ++k) EXPECT_DOUBLE_EQ(m.spectrum[k - 1], -std::pow(k * std::numbers::pi, 2));
    EXPECT_TRUE(m.affine);
}

TEST(MakeBuiltin, GbmExactDiffusionFlow)
{
    const SplitModel m = make_builtin(BuiltinModel::GBM, {{"mu", {0.1}}, {"sigma", {0.2}}});
    Vector out(1);
    m.exact_diffusion_flows[0](0.7, Vector::Constant(1, 1.3), out);
    EXPECT_NEAR(out[0], 1.3 * std::exp(0.2 * 0.7), 1e-15);
    EXPECT_FALSE(m.affine);
}

TEST(MakeBuiltin, UnknownNameOrParameterIsConfigError)
{
    EXPECT_THROW(make_builtin("HESTON"), ConfigError);
    EXPECT_THROW(make_builtin(BuiltinModel::OU, {{"kappa", {1.0}}}), ConfigError);
    EXPECT_THROW(make_builtin(BuiltinModel::OU, {{"theta", {-1.0}}}), ConfigError);
    EXPECT_THROW(make_builtin(BuiltinModel::HeatSpde, {{"noise_modes", {20}}}), ConfigError);
}

TEST(MakeBuiltin, RegistryNames)
{
    EXPECT_EQ(builtin_names(), (std::vector<std::string>{"OU", "GBM", "LINEAR_GROWTH_1D", "HEAT_SPDE"}));
    for (const auto& n : builtin_names()) EXPECT_EQ(builtin_name(*parse_builtin(n)), n);
}

TEST(ExactExpectation, OuExamples)
{
    const SplitModel m = make_builtin(BuiltinModel::OU);
    EXPECT_NEAR(exact_expectation(m, PayoffSpec::moment1(0), 1.0, Vector::Constant(1, 1.0)), std::exp(-1.0), 1e-15);
    const double var = 0.25 * (1.0 - std::exp(-2.0)) / 2.0;
    EXPECT_NEAR(exact_expectation(m, PayoffSpec::moment2(0), 1.0, Vector::Zero(1)), var, 1e-15);
    EXPECT_NEAR(var, 0.10808, 5e-6);
}

TEST(ExactExpectation, GbmMean)
{
    const SplitModel m = make_builtin(BuiltinModel::GBM);
    EXPECT_NEAR(exact_expectation(m, PayoffSpec::moment1(0), 2.0, Vector::Constant(1, 1.5)), 1.5 * std::exp(0.2),
                1e-14);
    // E[x^2] = x0^2 exp((2 mu + sigma^2) T)
    EXPECT_NEAR(exact_expectation(m, PayoffSpec::moment2(0), 1.0, Vector::Constant(1, 1.0)), std::exp(0.24), 1e-14);
}

TEST(ExactExpectation, UnsupportedPayoffIsCapabilityError)
{
    EXPECT_THROW(exact_expectation(make_builtin(BuiltinModel::LinearGrowth1D), PayoffSpec::moment1(0), 1.0,
                                   Vector::Zero(1)),
                 CapabilityError);
    const auto custom = PayoffSpec::make_custom("cos", [](const Vector& x) { return std::cos(x[0]); });
    EXPECT_THROW(exact_expectation(make_builtin(BuiltinModel::OU), custom, 1.0, Vector::Zero(1)), CapabilityError);
    EXPECT_THROW(exact_expectation(make_builtin(BuiltinModel::GBM), PayoffSpec::poly(0, {0, 0, 0, 0, 0, 1}), 1.0,
                                   Vector::Ones(1)),
                 CapabilityError);
}

TEST(ExactExpectation, HeatModeVariance)
{
    const SplitModel m = make_builtin(BuiltinModel::HeatSpde);
    const double lambda = -std::numbers::pi * std::numbers::pi;
    const double var = std::expm1(2.0 * lambda) / (2.0 * lambda);
    Vector x0 = Vector::Zero(m.dim);
    x0[0] = 2.0;
    const double mean = 2.0 * std::exp(lambda);
    EXPECT_NEAR(exact_expectation(m, PayoffSpec::moment2(0), 1.0, x0), mean * mean + var, 1e-15);
    // Mode 6 carries no noise: deterministic decay.
    x0[5] = 1.0;
    EXPECT_NEAR(exact_expectation(m, PayoffSpec::moment2(5), 0.01, x0), std::exp(2.0 * 36.0 * lambda * 0.01), 1e-15);
}

TEST(Payoff, PolynomialEvaluation)
{
    const PayoffSpec p = PayoffSpec::poly(1, {1.0, -2.0, 0.0, 0.5});
    Vector x(2);
    x << 10.0, 2.0;
    EXPECT_DOUBLE_EQ(p(x), 1.0 - 4.0 + 4.0);
    EXPECT_EQ(p.degree(), 3);
    EXPECT_EQ(PayoffSpec::moment2(0).monomial_coefficients(), (std::vector<double>{0.0, 0.0, 1.0}));
    EXPECT_EQ(PayoffSpec::moment1(0).degree(), 1);
}

TEST(GaussianMoments, RawMomentsAgainstClosedForms)
{
    const double m = 0.7, v = 1.3;
    EXPECT_DOUBLE_EQ(gaussian_raw_moment(0, m, v), 1.0);
    EXPECT_DOUBLE_EQ(gaussian_raw_moment(1, m, v), m);
    EXPECT_NEAR(gaussian_raw_moment(2, m, v), m * m + v, 1e-15);
    EXPECT_NEAR(gaussian_raw_moment(3, m, v), m * m * m + 3 * m * v, 1e-14);
    EXPECT_NEAR(gaussian_raw_moment(4, m, v), std::pow(m, 4) + 6 * m * m * v + 3 * v * v, 1e-14);
    EXPECT_THROW(gaussian_raw_moment(5, m, v), CapabilityError);
}

// Exact flows supplied by the models agree with the fourth-order integrator.
TEST(ModelInvariants, ExactFlowsMatchNumericalFlows)
{
    FlowConfig exact;
    FlowConfig numeric;
    numeric.use_exact_flows = false;
    numeric.substeps = 64;
    for (const auto& m : all_builtins()) {
        const Vector x = Vector::LinSpaced(m.dim, 0.5, 1.5);
        if (m.exact_drift_flow) {
            const Vector a = drift_flow(m, exact, 0.3, x);
            const Vector b = drift_flow(m, numeric, 0.3, x);
            EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), 1e-10) << m.name;
        }
        for (int j = 0; j < m.noise_dim(); ++j) {
            if (!m.has_exact_diffusion_flow(j)) continue;
            for (double w : {-0.8, 0.4}) {
                const Vector a = diffusion_flow(m, exact, j, w, x);
                const Vector b = diffusion_flow(m, numeric, j, w, x);
                EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), 1e-10) << m.name;
            }
        }
    }
}

TEST(ModelInvariants, AffineFlagMeansAffineSubsteps)
{
    const FlowConfig cfg;
    for (const auto& m : all_builtins()) {
        if (!m.affine) continue;
        const Vector x = Vector::LinSpaced(m.dim, -1.0, 2.0);
        const Vector y = Vector::LinSpaced(m.dim, 3.0, 0.5);
        const Vector zero = Vector::Zero(m.dim);
        auto check = [&](auto&& flow) {
            const Vector f0 = flow(zero);
            const Vector lhs = flow(x + y) - f0;
            const Vector rhs = (flow(x) - f0) + (flow(y) - f0);
            EXPECT_LE((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-10) << m.name;
        };
        check([&](const Vector& v) { return drift_flow(m, cfg, 0.1, v); });
        for (int j = 0; j < m.noise_dim(); ++j) check([&](const Vector& v) { return diffusion_flow(m, cfg, j, -0.3, v); });
    }
}

TEST(ModelInvariants, SpectrumLengthMatchesDimension)
{
    for (const auto& m : all_builtins()) EXPECT_EQ(m.spectrum.size(), static_cast<std::size_t>(m.dim));
    SplitModel bad = diagonal_model({-1.0});
    bad.dim = 2;
    EXPECT_THROW(bad.validate(), ConfigError);
}
