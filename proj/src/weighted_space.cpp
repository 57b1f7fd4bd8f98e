#include "nvsplit/weighted_space.hpp"

#include <algorithm>
#include <cmath>

namespace nvsplit {

WeightFunction::WeightFunction(WeightFamily family, double parameter, int level, std::vector<double> spectrum)
    : family_(family), parameter_(parameter), level_(level), spectrum_(std::move(spectrum))
{
    switch (family_) {
    case WeightFamily::Polynomial:
        if (!(parameter_ >= 2.0)) throw ConfigError("polynomial weight needs s >= 2");
        break;
    case WeightFamily::Cosh:
        if (!(parameter_ > 0.0)) throw ConfigError("cosh weight needs beta > 0");
        break;
    case WeightFamily::GaussExp:
        if (!(parameter_ > 0.0)) throw ConfigError("gauss-exp weight needs eta > 0");
        break;
    }
    if (level_ < 0) throw ConfigError("weight level must be >= 0");
    if (level_ > 0) {
        if (spectrum_.empty()) throw ConfigError("weight level > 0 requires the spectrum of A");
        level_factors_.reserve(spectrum_.size());
        for (double lambda : spectrum_) {
            double factor = 0.0;
            double power = 1.0;
            for (int i = 0; i <= level_; ++i) {
                factor += power;
                power *= lambda * lambda;
            }
            level_factors_.push_back(factor);
        }
    }
}

WeightFunction WeightFunction::polynomial(double s, int level, std::vector<double> spectrum)
{
    return WeightFunction(WeightFamily::Polynomial, s, level, std::move(spectrum));
}

WeightFunction WeightFunction::cosh(double beta, int level, std::vector<double> spectrum)
{
    return WeightFunction(WeightFamily::Cosh, beta, level, std::move(spectrum));
}

WeightFunction WeightFunction::gauss_exp(double eta, int level, std::vector<double> spectrum)
{
    return WeightFunction(WeightFamily::GaussExp, eta, level, std::move(spectrum));
}

WeightFunction WeightFunction::with_squared_norm(SquaredNorm norm2) const
{
    WeightFunction copy = *this;
    copy.custom_norm2_ = std::move(norm2);
    return copy;
}

double WeightFunction::squared_norm(const Vector& x) const
{
    if (custom_norm2_) return custom_norm2_(x);
    if (level_ == 0) return x.squaredNorm();
    if (level_factors_.size() != static_cast<std::size_t>(x.size())) {
        throw ConfigError("weight spectrum has " + std::to_string(level_factors_.size()) +
                          " entries but the state has dimension " + std::to_string(x.size()));
    }
    double acc = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) acc += level_factors_[k] * x[k] * x[k];
    return acc;
}

double WeightFunction::profile(double r2) const
{
    switch (family_) {
    case WeightFamily::Polynomial: return std::pow(1.0 + r2, 0.5 * parameter_);
    case WeightFamily::Cosh: return std::cosh(parameter_ * std::sqrt(r2));
    case WeightFamily::GaussExp: return std::exp(parameter_ * r2);
    }
    return 1.0;
}

double eval_weight(const WeightFunction& w, const Vector& x) { return w(x); }

bool sublevel_member(const WeightFunction& w, const Vector& x, double R)
{
    if (!(R > 0.0)) throw ArgumentError("sublevel radius R must be > 0");
    return w(x) <= R;
}

double weighted_sup_norm(std::span<const WeightedSample> values, const WeightFunction& w)
{
    if (values.empty()) throw ArgumentError("weighted_sup_norm over an empty cloud");
    double best = 0.0;
    for (const auto& sample : values) best = std::max(best, std::abs(sample.value) / w(sample.x));
    return best;
}

double growth_decay_ratio(std::span<const WeightedSample> values, const WeightFunction& w, double R)
{
    if (values.empty()) throw ArgumentError("growth_decay_ratio over an empty cloud");
    if (!(R > 0.0)) throw ArgumentError("growth_decay_ratio needs R > 0");
    double best = 0.0;
    for (const auto& sample : values) {
        const double psi = w(sample.x);
        if (psi > R) best = std::max(best, std::abs(sample.value) / psi);
    }
    return best;
}

} // namespace nvsplit
