#include "nvsplit/models.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <set>

namespace nvsplit {

// ---------------------------------------------------------------------------
// Payoffs

PayoffSpec PayoffSpec::moment1(int coordinate)
{
    PayoffSpec p;
    p.kind = Kind::Moment1;
    p.coordinate = coordinate;
    p.id = "moment1[" + std::to_string(coordinate) + "]";
    return p;
}

PayoffSpec PayoffSpec::moment2(int coordinate)
{
    PayoffSpec p;
    p.kind = Kind::Moment2;
    p.coordinate = coordinate;
    p.id = "moment2[" + std::to_string(coordinate) + "]";
    return p;
}

PayoffSpec PayoffSpec::poly(int coordinate, std::vector<double> coefficients)
{
    if (coefficients.empty()) throw ConfigError("polynomial payoff needs at least one coefficient");
    PayoffSpec p;
    p.kind = Kind::Poly;
    p.coordinate = coordinate;
    p.coefficients = std::move(coefficients);
    p.id = "poly[" + std::to_string(coordinate) + "]";
    return p;
}

PayoffSpec PayoffSpec::make_custom(std::string id, std::function<double(const Vector&)> fn)
{
    PayoffSpec p;
    p.kind = Kind::Custom;
    p.id = std::move(id);
    p.custom = std::move(fn);
    return p;
}

double PayoffSpec::operator()(const Vector& x) const
{
    if (kind == Kind::Custom) return custom(x);
    const double y = x[coordinate];
    switch (kind) {
    case Kind::Moment1: return y;
    case Kind::Moment2: return y * y;
    default: break;
    }
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * y + *it;
    return acc;
}

std::vector<double> PayoffSpec::monomial_coefficients() const
{
    switch (kind) {
    case Kind::Moment1: return {0.0, 1.0};
    case Kind::Moment2: return {0.0, 0.0, 1.0};
    case Kind::Poly: return coefficients;
    case Kind::Custom: break;
    }
    throw CapabilityError("payoff '" + id + "' is not a polynomial");
}

int PayoffSpec::degree() const
{
    auto c = monomial_coefficients();
    int deg = static_cast<int>(c.size()) - 1;
    while (deg > 0 && c[deg] == 0.0) --deg;
    return deg;
}

// ---------------------------------------------------------------------------
// Gaussian moments

double gaussian_raw_moment(int k, double mean, double var)
{
    const double m = mean;
    switch (k) {
    case 0: return 1.0;
    case 1: return m;
    case 2: return m * m + var;
    case 3: return m * m * m + 3.0 * m * var;
    case 4: return m * m * m * m + 6.0 * m * m * var + 3.0 * var * var;
    default: break;
    }
    throw CapabilityError("Gaussian moments implemented up to degree 4");
}

double gaussian_polynomial_expectation(const std::vector<double>& coefficients, double mean, double var)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
        if (coefficients[k] == 0.0) continue;
        acc += coefficients[k] * gaussian_raw_moment(static_cast<int>(k), mean, var);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// SplitModel

void SplitModel::validate() const
{
    if (dim < 1) throw ConfigError(name + ": dimension must be >= 1");
    if (spectrum.size() != static_cast<std::size_t>(dim))
        throw ConfigError(name + ": spectrum length " + std::to_string(spectrum.size()) + " != dim " +
                          std::to_string(dim));
    if (!drift) throw ConfigError(name + ": missing drift");
    for (std::size_t j = 0; j < diffusions.size(); ++j)
        if (!diffusions[j]) throw ConfigError(name + ": missing diffusion " + std::to_string(j + 1));
    if (diffusion_jacobians.size() != diffusions.size())
        throw ConfigError(name + ": need one Jacobian per diffusion");
    if (!exact_diffusion_flows.empty() && exact_diffusion_flows.size() != diffusions.size())
        throw ConfigError(name + ": exact diffusion flows must be listed per diffusion");
}

CorrectedDrift::CorrectedDrift(const SplitModel& model)
    : model_(&model), sigma_(model.dim), jv_(model.dim)
{
}

void CorrectedDrift::operator()(const Vector& x, Vector& out)
{
    model_->drift(x, out);
    for (int j = 0; j < model_->noise_dim(); ++j) {
        model_->diffusions[j](x, sigma_);
        model_->diffusion_jacobians[j](x, sigma_, jv_);
        out.noalias() -= 0.5 * jv_;
    }
}

Vector stratonovich_drift(const SplitModel& m, const Vector& x)
{
    if (x.size() != m.dim)
        throw ArgumentError("stratonovich_drift: state dimension " + std::to_string(x.size()) + " != " +
                            std::to_string(m.dim));
    Vector out(m.dim);
    CorrectedDrift drift(m);
    drift(x, out);
    return out;
}

void apply_A_semigroup_into(const SplitModel& m, double t, const Vector& x, Vector& out)
{
    if (t < 0.0) throw ArgumentError("semigroup time must be >= 0");
    if (m.semigroup) {
        m.semigroup(t, x, out);
        return;
    }
    for (int k = 0; k < m.dim; ++k) out[k] = m.spectrum[k] == 0.0 ? x[k] : std::exp(t * m.spectrum[k]) * x[k];
}

Vector apply_A_semigroup(const SplitModel& m, double t, const Vector& x)
{
    if (x.size() != m.dim) throw ArgumentError("apply_A_semigroup: dimension mismatch");
    Vector out(m.dim);
    apply_A_semigroup_into(m, t, x, out);
    return out;
}

double exact_expectation(const SplitModel& m, const PayoffSpec& payoff, double T, const Vector& x0)
{
    if (!m.moment_oracle) throw CapabilityError(m.name + " has no exact moment oracle");
    if (x0.size() != m.dim) throw ArgumentError("exact_expectation: dimension mismatch");
    auto value = m.moment_oracle(payoff, T, x0);
    if (!value) throw CapabilityError(m.name + " oracle does not cover payoff '" + payoff.id + "'");
    return *value;
}

// ---------------------------------------------------------------------------
// Built-ins

namespace {

constexpr std::array<std::pair<BuiltinModel, std::string_view>, 4> kBuiltinNames{{
    {BuiltinModel::OU, "OU"},
    {BuiltinModel::GBM, "GBM"},
    {BuiltinModel::LinearGrowth1D, "LINEAR_GROWTH_1D"},
    {BuiltinModel::HeatSpde, "HEAT_SPDE"},
}};

class ParamReader {
public:
    ParamReader(std::string model, const ModelParams& params) : model_(std::move(model)), params_(params) {}

    double scalar(const std::string& key, double fallback)
    {
        used_.insert(key);
        auto it = params_.find(key);
        if (it == params_.end()) return fallback;
        if (it->second.size() != 1) throw ConfigError(model_ + ": parameter '" + key + "' must be a scalar");
        return it->second.front();
    }

    std::vector<double> list(const std::string& key, std::vector<double> fallback)
    {
        used_.insert(key);
        auto it = params_.find(key);
        return it == params_.end() ? fallback : it->second;
    }

    void finish() const
    {
        for (const auto& [key, value] : params_)
            if (!used_.count(key)) throw ConfigError(model_ + ": unknown parameter '" + key + "'");
    }

private:
    std::string model_;
    const ModelParams& params_;
    std::set<std::string> used_;
};

std::optional<double> polynomial_of_gaussian(const PayoffSpec& payoff, double mean, double var)
{
    if (!payoff.is_polynomial() || payoff.degree() > 4) return std::nullopt;
    return gaussian_polynomial_expectation(payoff.monomial_coefficients(), mean, var);
}

JacobianAction zero_jacobian()
{
    return [](const Vector&, const Vector&, Vector& out) { out.setZero(); };
}

FlowMap additive_flow(Vector direction)
{
    return [direction = std::move(direction)](double w, const Vector& x, Vector& out) {
        out = x;
        out.noalias() += w * direction;
    };
}

SplitModel make_ou(ParamReader& p)
{
    const double theta = p.scalar("theta", 1.0);
    const double mu = p.scalar("mu", 0.0);
    const double sigma = p.scalar("sigma", 0.5);
    p.finish();
    if (!(theta > 0.0)) throw ConfigError("OU: theta must be > 0");

    SplitModel m;
    m.name = "OU";
    m.dim = 1;
    m.spectrum = {0.0};
    m.drift = [theta, mu](const Vector& x, Vector& out) { out[0] = theta * (mu - x[0]); };
    Vector c = Vector::Constant(1, sigma);
    m.diffusions = {[c](const Vector&, Vector& out) { out = c; }};
    m.diffusion_jacobians = {zero_jacobian()};
    m.exact_diffusion_flows = {additive_flow(c)};
    m.affine = true;
    m.moment_oracle = [theta, mu, sigma](const PayoffSpec& f, double T, const Vector& x0) -> std::optional<double> {
        if (f.is_polynomial() && f.coordinate != 0) return std::nullopt;
        const double mean = mu + (x0[0] - mu) * std::exp(-theta * T);
        const double var = sigma * sigma * -std::expm1(-2.0 * theta * T) / (2.0 * theta);
        return polynomial_of_gaussian(f, mean, var);
    };
    return m;
}

SplitModel make_gbm(ParamReader& p)
{
    const double mu = p.scalar("mu", 0.1);
    const double sigma = p.scalar("sigma", 0.2);
    p.finish();

    SplitModel m;
    m.name = "GBM";
    m.dim = 1;
    m.spectrum = {0.0};
    m.drift = [mu](const Vector& x, Vector& out) { out[0] = mu * x[0]; };
    m.diffusions = {[sigma](const Vector& x, Vector& out) { out[0] = sigma * x[0]; }};
    m.diffusion_jacobians = {[sigma](const Vector&, const Vector& v, Vector& out) { out[0] = sigma * v[0]; }};
    const double rate = mu - 0.5 * sigma * sigma;
    m.exact_drift_flow = [rate](double t, const Vector& x, Vector& out) { out[0] = x[0] * std::exp(rate * t); };
    m.exact_diffusion_flows = {
        [sigma](double w, const Vector& x, Vector& out) { out[0] = x[0] * std::exp(sigma * w); }};
    m.moment_oracle = [mu, sigma](const PayoffSpec& f, double T, const Vector& x0) -> std::optional<double> {
        if (!f.is_polynomial() || f.coordinate != 0 || f.degree() > 4) return std::nullopt;
        const auto c = f.monomial_coefficients();
        double acc = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (c[k] == 0.0) continue;
            const double kk = static_cast<double>(k);
            acc += c[k] * std::pow(x0[0], kk) * std::exp(kk * mu * T + 0.5 * kk * (kk - 1.0) * sigma * sigma * T);
        }
        return acc;
    };
    return m;
}

SplitModel make_linear_growth(ParamReader& p)
{
    const double a = p.scalar("a", -0.5);
    const double b = p.scalar("b", 0.3);
    const double c = p.scalar("c", 0.2);
    p.finish();

    SplitModel m;
    m.name = "LINEAR_GROWTH_1D";
    m.dim = 1;
    m.spectrum = {0.0};
    m.drift = [a](const Vector& x, Vector& out) { out[0] = a * x[0]; };
    m.diffusions = {[b, c](const Vector& x, Vector& out) { out[0] = b * x[0] + c; }};
    m.diffusion_jacobians = {[b](const Vector&, const Vector& v, Vector& out) { out[0] = b * v[0]; }};

    // alpha_0(x) = k x + q with k = a - b^2/2, q = -bc/2.
    const double k = a - 0.5 * b * b;
    const double q = -0.5 * b * c;
    m.exact_drift_flow = [k, q](double t, const Vector& x, Vector& out) {
        const double growth = k == 0.0 ? t : std::expm1(k * t) / k;
        out[0] = std::exp(k * t) * x[0] + q * growth;
    };
    m.exact_diffusion_flows = {[b, c](double w, const Vector& x, Vector& out) {
        const double growth = b == 0.0 ? w : std::expm1(b * w) / b;
        out[0] = std::exp(b * w) * x[0] + c * growth;
    }};
    return m;
}

SplitModel make_heat(ParamReader& p)
{
    const double modes_raw = p.scalar("modes", 16.0);
    const double noise_raw = p.scalar("noise_modes", 4.0);
    auto amplitudes = p.list("amplitudes", {1.0});
    p.finish();

    const int modes = static_cast<int>(modes_raw);
    const int noise = static_cast<int>(noise_raw);
    if (modes < 1 || modes != modes_raw) throw ConfigError("HEAT_SPDE: modes must be a positive integer");
    if (noise < 0 || noise > modes || noise != noise_raw)
        throw ConfigError("HEAT_SPDE: noise_modes must be an integer in [0, modes]");
    if (amplitudes.size() == 1) amplitudes.assign(static_cast<std::size_t>(noise), amplitudes.front());
    if (amplitudes.size() != static_cast<std::size_t>(noise))
        throw ConfigError("HEAT_SPDE: amplitudes must be a scalar or one value per noise mode");

    SplitModel m;
    m.name = "HEAT_SPDE";
    m.dim = modes;
    m.spectrum.resize(modes);
    for (int k = 0; k < modes; ++k) {
        const double freq = (k + 1) * std::numbers::pi;
        m.spectrum[k] = -freq * freq;
    }
    m.drift = [](const Vector&, Vector& out) { out.setZero(); };
    for (int j = 0; j < noise; ++j) {
        Vector direction = Vector::Zero(modes);
        direction[j] = amplitudes[j];
        m.diffusions.push_back([direction](const Vector&, Vector& out) { out = direction; });
        m.diffusion_jacobians.push_back(zero_jacobian());
        m.exact_diffusion_flows.push_back(additive_flow(direction));
    }
    // alpha = 0 and the noise is additive, so the drift flow is the semigroup itself.
    auto spectrum = m.spectrum;
    m.exact_drift_flow = [spectrum](double t, const Vector& x, Vector& out) {
        for (std::size_t k = 0; k < spectrum.size(); ++k) out[k] = std::exp(t * spectrum[k]) * x[k];
    };
    m.affine = true;
    m.moment_oracle = [spectrum, amplitudes](const PayoffSpec& f, double T, const Vector& x0) -> std::optional<double> {
        if (!f.is_polynomial() || f.coordinate < 0 || f.coordinate >= static_cast<int>(spectrum.size()))
            return std::nullopt;
        const std::size_t k = static_cast<std::size_t>(f.coordinate);
        const double lambda = spectrum[k];
        const double mean = std::exp(lambda * T) * x0[f.coordinate];
        double var = 0.0;
        if (k < amplitudes.size()) var = amplitudes[k] * amplitudes[k] * std::expm1(2.0 * lambda * T) / (2.0 * lambda);
        return polynomial_of_gaussian(f, mean, var);
    };
    return m;
}

} // namespace

std::optional<BuiltinModel> parse_builtin(std::string_view name)
{
    for (const auto& [model, label] : kBuiltinNames)
        if (label == name) return model;
    return std::nullopt;
}

std::string_view builtin_name(BuiltinModel model)
{
    for (const auto& [m, label] : kBuiltinNames)
        if (m == model) return label;
    return "?";
}

std::vector<std::string> builtin_names()
{
    std::vector<std::string> out;
    for (const auto& entry : kBuiltinNames) out.emplace_back(entry.second);
    return out;
}

SplitModel make_builtin(BuiltinModel name, const ModelParams& params)
{
    ParamReader reader(std::string(builtin_name(name)), params);
    SplitModel m;
    switch (name) {
    case BuiltinModel::OU: m = make_ou(reader); break;
    case BuiltinModel::GBM: m = make_gbm(reader); break;
    case BuiltinModel::LinearGrowth1D: m = make_linear_growth(reader); break;
    case BuiltinModel::HeatSpde: m = make_heat(reader); break;
    }
    m.validate();
    return m;
}

SplitModel make_builtin(std::string_view name, const ModelParams& params)
{
    auto model = parse_builtin(name);
    if (!model) throw ConfigError("unknown model '" + std::string(name) + "'");
    return make_builtin(*model, params);
}

} // namespace nvsplit
