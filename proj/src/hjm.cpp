#include "nvsplit/hjm.hpp"

#include "nvsplit/csv.hpp"

#include <cmath>
#include <memory>
#include <ostream>

namespace nvsplit {

namespace {

constexpr double kSnap = 1e-12;

/// Splits y / h into a node index and a fraction, snapping near-integers.
std::pair<long, double> locate(double y, double spacing)
{
    const double theta = y / spacing;
    double whole = std::floor(theta);
    double frac = theta - whole;
    if (frac < kSnap) frac = 0.0;
    if (frac > 1.0 - kSnap) {
        whole += 1.0;
        frac = 0.0;
    }
    return {static_cast<long>(whole), frac};
}

/// Cumulative trapezoid integral of the nodal values, C_0 = 0.
Vector cumulative_trapezoid(double spacing, const Vector& v)
{
    Vector c(v.size());
    c[0] = 0.0;
    for (Eigen::Index i = 1; i < v.size(); ++i) c[i] = c[i - 1] + 0.5 * spacing * (v[i - 1] + v[i]);
    return c;
}

void check_same_grid(const ForwardCurve& a, const ForwardCurve& b)
{
    if (!same_grid(a, b)) throw ArgumentError("forward curves live on different maturity grids");
}

Vector exponential_profile(const HjmSpec& spec, const HjmVolSpec& vol)
{
    Vector phi(spec.intervals + 1);
    for (int i = 0; i <= spec.intervals; ++i) phi[i] = std::exp(-vol.beta * spec.spacing() * i);
    return phi;
}

} // namespace

void ForwardCurve::validate() const
{
    if (!(spacing > 0.0)) throw ArgumentError("curve spacing must be > 0");
    if (intervals() < 8) throw ArgumentError("curve needs at least 8 grid intervals");
    if (!(alpha > 0.0)) throw ArgumentError("curve weight alpha must be > 0");
    if (!all_finite(values)) throw ArgumentError("curve values must be finite");
}

ForwardCurve ForwardCurve::sample(double x_max, int intervals, double alpha, const std::function<double(double)>& fn)
{
    if (intervals < 1 || !(x_max > 0.0)) throw ArgumentError("invalid maturity grid");
    ForwardCurve c{x_max / intervals, Vector(intervals + 1), alpha};
    for (int i = 0; i <= intervals; ++i) c.values[i] = fn(c.node(i));
    c.validate();
    return c;
}

bool same_grid(const ForwardCurve& a, const ForwardCurve& b)
{
    return a.values.size() == b.values.size() && std::abs(a.spacing - b.spacing) <= 1e-14 * a.spacing;
}

ForwardCurve s_operator(const ForwardCurve& f)
{
    f.validate();
    ForwardCurve out = f;
    out.values = f.values.cwiseProduct(cumulative_trapezoid(f.spacing, f.values));
    return out;
}

ForwardCurve hjm_drift(const ForwardCurve& curve, const std::vector<CurveVolatility>& vols)
{
    curve.validate();
    ForwardCurve out = curve;
    out.values.setZero();
    for (const auto& vol : vols) {
        const ForwardCurve sigma = vol(curve);
        check_same_grid(curve, sigma);
        out.values += s_operator(sigma).values;
    }
    return out;
}

void shift_values(double spacing, const Vector& in, double t, Vector& out)
{
    if (t < 0.0) throw ArgumentError("shift time must be >= 0");
    const long last = static_cast<long>(in.size()) - 1;
    const auto [k, fr] = locate(t, spacing);
    for (long i = 0; i <= last; ++i) {
        const long j = i + k;
        if (j >= last)
            out[i] = in[last];
        else if (fr == 0.0)
            out[i] = in[j];
        else
            out[i] = (1.0 - fr) * in[j] + fr * in[j + 1];
    }
}

ForwardCurve shift_semigroup(const ForwardCurve& curve, double t)
{
    curve.validate();
    ForwardCurve out = curve;
    shift_values(curve.spacing, curve.values, t, out.values);
    return out;
}

double h_alpha_norm_squared(double spacing, double alpha, const Vector& v)
{
    const Eigen::Index last = v.size() - 1;
    auto derivative = [&](Eigen::Index i) {
        if (i == 0) return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * spacing);
        if (i == last) return (3.0 * v[last] - 4.0 * v[last - 1] + v[last - 2]) / (2.0 * spacing);
        return (v[i + 1] - v[i - 1]) / (2.0 * spacing);
    };
    double integral = 0.0;
    for (Eigen::Index i = 0; i <= last; ++i) {
        const double d = derivative(i);
        const double w = (i == 0 || i == last) ? 0.5 : 1.0;
        integral += w * d * d * std::exp(alpha * spacing * i);
    }
    return v[0] * v[0] + spacing * integral;
}

double h_alpha_norm(const ForwardCurve& curve)
{
    curve.validate();
    return std::sqrt(h_alpha_norm_squared(curve.spacing, curve.alpha, curve.values));
}

double h_alpha_norm_values(const ForwardCurve& curve)
{
    curve.validate();
    const auto& v = curve.values;
    const Eigen::Index last = v.size() - 1;
    double integral = 0.0;
    for (Eigen::Index i = 0; i <= last; ++i) {
        const double w = (i == 0 || i == last) ? 0.5 : 1.0;
        integral += w * v[i] * v[i] * std::exp(curve.alpha * curve.node(static_cast<int>(i)));
    }
    return std::sqrt(v[0] * v[0] + curve.spacing * integral);
}

// ---------------------------------------------------------------------------

void HjmSpec::validate() const
{
    if (!(x_max > 0.0)) throw ConfigError("hjm.x_max must be > 0");
    if (intervals < 8) throw ConfigError("hjm.M must be >= 8");
    if (!(alpha > 0.0)) throw ConfigError("hjm.alpha must be > 0");
    if (!(s >= 2.0)) throw ConfigError("hjm.s must be >= 2");
    for (std::size_t j = 0; j < vols.size(); ++j) {
        const auto& v = vols[j];
        const std::string where = "hjm.vols[" + std::to_string(j) + "]";
        if (!std::isfinite(v.c)) throw ConfigError(where + ".c must be finite");
        if (!(v.beta > 0.0)) throw ConfigError(where + ".beta must be > 0");
        if (v.kind == HjmVolSpec::Kind::ScalarGain) {
            if (!std::isfinite(v.gain)) throw ConfigError(where + ".gain must be finite");
            const double k = v.node_x / spacing();
            if (v.node_x < 0.0 || v.node_x > x_max || std::abs(k - std::round(k)) > 1e-9)
                throw ConfigError(where + ".node_x must be a grid node");
        }
    }
}

ForwardCurve HjmModel::curve(const Vector& values) const
{
    ForwardCurve c{spec.spacing(), values, spec.alpha};
    c.validate();
    return c;
}

HjmModel make_hjm_model(const HjmSpec& spec)
{
    spec.validate();
    const int dim = spec.intervals + 1;
    const double h = spec.spacing();

    SplitModel m;
    m.name = "hjm";
    m.dim = dim;
    m.spectrum.assign(static_cast<std::size_t>(dim), 0.0);
    m.semigroup = [h](double t, const Vector& x, Vector& out) { shift_values(h, x, t, out); };

    bool state_independent = true;
    Vector constant_drift = Vector::Zero(dim);
    struct Gain {
        Vector phi;
        Vector s_phi; // S(phi); the drift contribution is g(u)^2 S(phi)
        double c, a;
        Eigen::Index node;
    };
    std::vector<Gain> gains;

    for (const auto& vol : spec.vols) {
        const Vector phi = exponential_profile(spec, vol);
        const Vector s_phi = phi.cwiseProduct(cumulative_trapezoid(h, phi));
        if (vol.kind == HjmVolSpec::Kind::Exponential) {
            const Vector sigma = vol.c * phi;
            constant_drift += vol.c * vol.c * s_phi;
            m.diffusions.push_back([sigma](const Vector&, Vector& out) { out = sigma; });
            m.diffusion_jacobians.push_back([](const Vector&, const Vector&, Vector& out) { out.setZero(); });
            m.exact_diffusion_flows.push_back(
                [sigma](double w, const Vector& x, Vector& out) { out = x + w * sigma; });
        } else {
            state_independent = false;
            const auto node = static_cast<Eigen::Index>(std::lround(vol.node_x / h));
            Gain g{phi, s_phi, vol.c, vol.gain, node};
            gains.push_back(g);
            m.diffusions.push_back([g](const Vector& x, Vector& out) {
                out = g.c * (1.0 + g.a * std::tanh(x[g.node])) * g.phi;
            });
            m.diffusion_jacobians.push_back([g](const Vector& x, const Vector& v, Vector& out) {
                const double th = std::tanh(x[g.node]);
                out = (g.c * g.a * (1.0 - th * th) * v[g.node]) * g.phi;
            });
            m.exact_diffusion_flows.push_back(FlowMap{});
        }
    }

    m.drift = [constant_drift, gains](const Vector& x, Vector& out) {
        out = constant_drift;
        for (const auto& g : gains) {
            const double gv = g.c * (1.0 + g.a * std::tanh(x[g.node]));
            out.noalias() += (gv * gv) * g.s_phi;
        }
    };

    if (state_independent) {
        // Variation of constants with the interpolating shift: S(t)x + int_0^t S(r) alpha dr.
        auto cumulative = std::make_shared<const Vector>(cumulative_trapezoid(h, constant_drift));
        m.exact_drift_flow = [h, constant_drift, cumulative](double t, const Vector& x, Vector& out) {
            shift_values(h, x, t, out);
            const Vector& c = *cumulative;
            const long last = static_cast<long>(x.size()) - 1;
            const auto [k, fr] = locate(t, h);
            for (long i = 0; i <= last; ++i) {
                const long j = i + k;
                double upper;
                if (j >= last) {
                    upper = c[last] + (h * (static_cast<double>(j - last) + fr)) * constant_drift[last];
                } else {
                    const double right = constant_drift[j] + fr * (constant_drift[j + 1] - constant_drift[j]);
                    upper = c[j] + 0.5 * fr * h * (constant_drift[j] + right);
                }
                out[i] += upper - c[i];
            }
        };
        m.affine = true;
    }
    m.validate();

    const double alpha = spec.alpha;
    WeightFunction weight = WeightFunction::polynomial(spec.s).with_squared_norm(
        [h, alpha](const Vector& x) { return h_alpha_norm_squared(h, alpha, x); });
    return HjmModel{std::move(m), std::move(weight), spec};
}

PayoffSpec bond_payoff(const HjmSpec& spec, double tau)
{
    if (!(tau > 0.0) || tau > spec.x_max) throw ConfigError("bond maturity must lie in (0, x_max]");
    const double h = spec.spacing();
    return PayoffSpec::make_custom("bond(" + format_double(tau) + ")", [h, tau](const Vector& x) {
        const auto [k, fr] = locate(tau, h);
        double integral = 0.0;
        for (long i = 0; i < k; ++i) integral += 0.5 * h * (x[i] + x[i + 1]);
        if (fr > 0.0) {
            const double right = x[k] + fr * (x[k + 1] - x[k]);
            integral += 0.5 * fr * h * (x[k] + right);
        }
        return std::exp(-integral);
    });
}

Vector initial_curve(const HjmSpec& spec, const InitialCurveSpec& c)
{
    Vector v(spec.intervals + 1);
    for (int i = 0; i <= spec.intervals; ++i)
        v[i] = c.long_rate + (c.short_rate - c.long_rate) * std::exp(-c.kappa * spec.spacing() * i);
    return v;
}

void write_curve_csv(std::ostream& out, const ForwardCurve& curve)
{
    CsvWriter csv(out);
    csv.field("x").field("value").end_row();
    for (int i = 0; i <= curve.intervals(); ++i) csv.field(curve.node(i)).field(curve.values[i]).end_row();
}

} // namespace nvsplit
