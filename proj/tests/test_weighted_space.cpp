#include "nvsplit/weighted_space.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace nvsplit;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double a : v) x[i++] = a;
    return x;
}

std::vector<WeightedSample> cloud_1d(const std::vector<double>& xs, double (*f)(double))
{
    std::vector<WeightedSample> out;
    for (double x : xs) out.push_back({vec({x}), f(x)});
    return out;
}

} // namespace

TEST(EvalWeight, PolynomialOfTwoVector) { EXPECT_DOUBLE_EQ(eval_weight(WeightFunction::polynomial(2.0), vec({1, 2})), 6.0); }

TEST(EvalWeight, CoshAtOrigin) { EXPECT_DOUBLE_EQ(eval_weight(WeightFunction::cosh(1.0), vec({0})), 1.0); }

TEST(EvalWeight, PolynomialOrderFour) { EXPECT_DOUBLE_EQ(eval_weight(WeightFunction::polynomial(4.0), vec({1})), 4.0); }

TEST(EvalWeight, GaussExp) { EXPECT_NEAR(eval_weight(WeightFunction::gauss_exp(0.5), vec({2})), std::exp(2.0), 1e-12); }

TEST(EvalWeight, SobolevLevelMatchesPowersOfA)
{
    const std::vector<double> spectrum{-1.0, -4.0, -9.0};
    const WeightFunction w = WeightFunction::polynomial(2.0, 2, spectrum);
    const Vector x = vec({0.3, -0.2, 0.1});
    // sum_{i<=2} |A^i x|^2 with A = diag(spectrum)
    const Vector a = Eigen::Map<const Vector>(spectrum.data(), 3);
    double norm2 = 0.0;
    Vector ax = x;
    for (int i = 0; i <= 2; ++i) {
        norm2 += ax.squaredNorm();
        ax = a.cwiseProduct(ax);
    }
    EXPECT_NEAR(w.squared_norm(x), norm2, 1e-12);
    EXPECT_NEAR(w(x), 1.0 + norm2, 1e-12);
}

TEST(EvalWeight, SpectrumDimensionMismatchIsConfigError)
{
    const WeightFunction w = WeightFunction::polynomial(2.0, 1, {-1.0, -4.0});
    EXPECT_THROW(eval_weight(w, vec({1, 2, 3})), ConfigError);
}

TEST(EvalWeight, InvalidParametersRejected)
{
    EXPECT_THROW(WeightFunction::polynomial(1.5), ConfigError);
    EXPECT_THROW(WeightFunction::cosh(0.0), ConfigError);
    EXPECT_THROW(WeightFunction::gauss_exp(-1.0), ConfigError);
    EXPECT_THROW(WeightFunction::polynomial(2.0, 1), ConfigError);
}

TEST(SublevelMember, Examples)
{
    const WeightFunction w = WeightFunction::polynomial(2.0);
    EXPECT_TRUE(sublevel_member(w, vec({2}), 5.0));
    EXPECT_FALSE(sublevel_member(w, vec({2}), 4.9));
    EXPECT_TRUE(sublevel_member(WeightFunction::cosh(2.0), vec({0}), 1.0));
    EXPECT_TRUE(sublevel_member(WeightFunction::gauss_exp(3.0), vec({0, 0}), 1.0));
}

TEST(SublevelMember, NonPositiveRadiusIsArgumentError)
{
    EXPECT_THROW(sublevel_member(WeightFunction::polynomial(2.0), vec({0}), 0.0), ArgumentError);
    EXPECT_THROW(sublevel_member(WeightFunction::polynomial(2.0), vec({0}), -1.0), ArgumentError);
}

TEST(WeightedSupNorm, Examples)
{
    const WeightFunction w = WeightFunction::polynomial(2.0);
    const auto linear = cloud_1d({0, 1, 2}, [](double x) { return x; });
    EXPECT_DOUBLE_EQ(weighted_sup_norm(linear, w), 0.5);

    const auto psi = cloud_1d({-3, 0.5, 7}, [](double x) { return 1 + x * x; });
    EXPECT_DOUBLE_EQ(weighted_sup_norm(psi, w), 1.0);

    const auto zero = cloud_1d({-3, 0.5, 7}, [](double) { return 0.0; });
    EXPECT_EQ(weighted_sup_norm(zero, w), 0.0);
}

TEST(WeightedSupNorm, EmptyCloudIsArgumentError)
{
    std::vector<WeightedSample> none;
    EXPECT_THROW(weighted_sup_norm(none, WeightFunction::polynomial(2.0)), ArgumentError);
}

TEST(GrowthDecayRatio, Examples)
{
    const WeightFunction w = WeightFunction::polynomial(2.0);
    std::vector<double> xs;
    for (int i = 0; i <= 10; ++i) xs.push_back(i);
    const auto linear = cloud_1d(xs, [](double x) { return x; });
    // Outside K_50: x in {8, 9, 10}; x / (1 + x^2) is largest at x = 8.
    EXPECT_NEAR(growth_decay_ratio(linear, w, 50.0), 8.0 / 65.0, 1e-15);
    EXPECT_NEAR(growth_decay_ratio(linear, w, 50.0), 0.12308, 5e-6);

    const auto psi = cloud_1d(xs, [](double x) { return 1 + x * x; });
    EXPECT_DOUBLE_EQ(growth_decay_ratio(psi, w, 10.0), 1.0);
    EXPECT_EQ(growth_decay_ratio(linear, w, 1000.0), 0.0);
}

// ---------------------------------------------------------------------------
// Properties on randomized clouds.

class WeightProperties : public ::testing::Test {
protected:
    std::mt19937_64 gen{12345};
    std::normal_distribution<double> normal{0.0, 3.0};

    Vector random_state(int dim)
    {
        Vector x(dim);
        for (int i = 0; i < dim; ++i) x[i] = normal(gen);
        return x;
    }

    std::vector<WeightFunction> weights() const
    {
        return {WeightFunction::polynomial(2.0), WeightFunction::polynomial(5.0), WeightFunction::cosh(0.7),
                WeightFunction::gauss_exp(0.05), WeightFunction::polynomial(2.0, 1, {-1.0, -2.0, -3.0})};
    }
};

TEST_F(WeightProperties, AtLeastOneEverywhere)
{
    for (const auto& w : weights())
        for (int k = 0; k < 200; ++k) EXPECT_GE(w(random_state(3)), 1.0);
}

TEST_F(WeightProperties, NondecreasingAlongRays)
{
    for (const auto& w : weights())
        for (int k = 0; k < 50; ++k) {
            const Vector x = random_state(3);
            double prev = w(0.0 * x);
            for (double t = 0.1; t <= 3.0; t += 0.1) {
                const double cur = w(t * x);
                EXPECT_GE(cur, prev);
                prev = cur;
            }
        }
}

TEST_F(WeightProperties, SupNormIsANormOnFixedClouds)
{
    const WeightFunction w = WeightFunction::polynomial(2.0);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<WeightedSample> f, g, sum, scaled;
        const double a = coef(gen), b = coef(gen), c = coef(gen);
        for (int i = 0; i < 30; ++i) {
            const Vector x = random_state(2);
            const double fx = a * x[0] + b * x[1] * x[1];
            const double gx = std::sin(c * x[0]) * x.squaredNorm();
            f.push_back({x, fx});
            g.push_back({x, gx});
            sum.push_back({x, fx + gx});
            scaled.push_back({x, c * fx});
        }
        EXPECT_LE(weighted_sup_norm(sum, w), weighted_sup_norm(f, w) + weighted_sup_norm(g, w) + 1e-12);
        EXPECT_NEAR(weighted_sup_norm(scaled, w), std::abs(c) * weighted_sup_norm(f, w), 1e-12);
    }
}

TEST_F(WeightProperties, EnlargingTheCloudNeverDecreasesTheNorm)
{
    const WeightFunction w = WeightFunction::cosh(0.5);
    std::vector<WeightedSample> cloud;
    double prev = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Vector x = random_state(2);
        cloud.push_back({x, x[0] * x[1]});
        const double cur = weighted_sup_norm(cloud, w);
        EXPECT_GE(cur, prev);
        prev = cur;
    }
}

TEST_F(WeightProperties, DecayRatioNonincreasingInRadius)
{
    const WeightFunction w = WeightFunction::polynomial(2.0);
    std::vector<WeightedSample> cloud;
    for (int i = 0; i < 200; ++i) {
        const Vector x = random_state(1);
        cloud.push_back({x, 3.0 * x[0] - 1.0});
    }
    double prev = growth_decay_ratio(cloud, w, 1.0);
    for (double R = 1.5; R < 200.0; R *= 1.5) {
        const double cur = growth_decay_ratio(cloud, w, R);
        EXPECT_LE(cur, prev);
        prev = cur;
    }
}
