#include "nvsplit/harness.hpp"

#include "nvsplit/csv.hpp"
#include "nvsplit/flows.hpp"
#include "nvsplit/rng.hpp"

#include <cmath>
#include <functional>

namespace nvsplit {

namespace {

struct Check {
    const char* name;
    std::function<std::string()> body; // empty string on success, a reason otherwise
};

std::string expect_close(double got, double want, double tol)
{
    if (std::abs(got - want) <= tol) return {};
    return "got " + format_double(got) + ", want " + format_double(want) + " +- " + format_double(tol);
}

std::string expect_in(double got, double lo, double hi)
{
    if (got >= lo && got <= hi) return {};
    return "got " + format_double(got) + ", want [" + format_double(lo) + ", " + format_double(hi) + "]";
}

double ou_slope(const SchemeSpec& scheme)
{
    ExperimentConfig c;
    c.model = make_builtin(BuiltinModel::OU);
    c.schemes = {scheme};
    c.payoff = PayoffSpec::moment2(0);
    c.steps = {8, 16, 32, 64, 128};
    for (int i = -4; i <= 4; ++i) c.grid.push_back(Vector::Constant(1, i));
    return convergence_study(c).fits.front().slope;
}

std::vector<Check> checks()
{
    return {
        {"philox known answers",
         [] {
             const PhiloxCounter a = philox4x32_10({0, 0, 0, 0}, {0, 0});
             const PhiloxCounter b = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                                   {0xffffffffu, 0xffffffffu});
             const PhiloxCounter c = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                                   {0xa4093822u, 0x299f31d0u});
             const bool ok = a == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u} &&
                             b == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu} &&
                             c == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u};
             return ok ? std::string{} : std::string("block function output differs");
         }},
        {"stream reproducibility",
         [] {
             RandomStream a(7, 1, 2, 3), b(7, 1, 2, 3), c(7, 1, 2, 4);
             const double x = a.normal();
             if (x != b.normal()) return std::string("same address gave different draws");
             if (x == c.normal()) return std::string("different paths gave equal draws");
             return std::string{};
         }},
        {"drift flow semigroup law",
         [] {
             const SplitModel m = make_builtin(BuiltinModel::OU, {{"mu", {0.3}}});
             FlowConfig cfg;
             cfg.substeps = 32;
             const Vector x = Vector::Constant(1, 1.7);
             const Vector two = drift_flow(m, cfg, 0.2, drift_flow(m, cfg, 0.3, x));
             return expect_close(two[0], drift_flow(m, cfg, 0.5, x)[0], 1e-9);
         }},
        {"diffusion flow group law",
         [] {
             const SplitModel m = make_builtin(BuiltinModel::LinearGrowth1D);
             FlowConfig cfg;
             cfg.use_exact_flows = false;
             cfg.substeps = 16;
             const Vector x = Vector::Constant(1, 0.8);
             const Vector two = diffusion_flow(m, cfg, 0, -0.4, diffusion_flow(m, cfg, 0, 0.7, x));
             return expect_close(two[0], diffusion_flow(m, cfg, 0, 0.3, x)[0], 1e-9);
         }},
        {"stratonovich drift of additive noise",
         [] {
             const SplitModel m = make_builtin(BuiltinModel::OU);
             const Vector x = Vector::Constant(1, 2.0);
             Vector a(1);
             m.drift(x, a);
             return expect_close(stratonovich_drift(m, x)[0], a[0], 0.0);
         }},
        {"step tends to the identity as dt -> 0",
         [] {
             const SplitModel m = make_builtin(BuiltinModel::HeatSpde);
             RandomStream rng(1, 2, 0, 0);
             const Vector x = Vector::LinSpaced(m.dim, -1.0, 1.0);
             const Vector y = step(m, FlowConfig{}, SchemeSpec::nv(m.noise_dim()), 1e-12, x, rng);
             return expect_close((y - x).lpNorm<Eigen::Infinity>(), 0.0, 1e-4);
         }},
        {"euler order on OU", [] { return expect_in(ou_slope(SchemeSpec::euler(1)), 0.8, 1.2); }},
        {"nv order on OU", [] { return expect_in(ou_slope(SchemeSpec::nv(1)), 1.7, 2.3); }},
        {"gbm commuting exactness",
         [] {
             const SplitModel m = make_builtin(BuiltinModel::GBM);
             const Vector x0 = Vector::Constant(1, 1.0);
             double worst = 0.0;
             for (std::uint32_t p = 0; p < 100; ++p) {
                 RandomStream a(3, 9, 0, p);
                 const Vector x = simulate_path(m, FlowConfig{}, SchemeSpec::nv(1), 1.0, 16, x0, a);
                 RandomStream b(3, 9, 0, p);
                 double w = 0.0;
                 for (int k = 0; k < 16; ++k) {
                     b.uniform(); // branch coin
                     w += std::sqrt(1.0 / 16) * b.normal();
                 }
                 const double exact = std::exp((0.1 - 0.5 * 0.04) * 1.0 + 0.2 * w);
                 worst = std::max(worst, std::abs(x[0] - exact) / exact);
             }
             return expect_close(worst, 0.0, 1e-12);
         }},
        {"affine maps are linear",
         [] {
             const SplitModel m = make_builtin(BuiltinModel::HeatSpde);
             const AffineStep s = affine_step_map(m, FlowConfig{}, SchemeSpec::euler(m.noise_dim()), 0.01, 0);
             const Vector x = Vector::LinSpaced(m.dim, 0.0, 1.0);
             const Vector y = Vector::LinSpaced(m.dim, 1.0, -2.0);
             const Vector fx = drift_flow(m, FlowConfig{}, 0.01, x);
             return expect_close((fx - (s.linear * x + s.offset)).lpNorm<Eigen::Infinity>() +
                                     (s.linear * (x + y) - s.linear * x - s.linear * y).lpNorm<Eigen::Infinity>(),
                                 0.0, 1e-10);
         }},
        {"weight sublevel sets are nested",
         [] {
             const WeightFunction w = WeightFunction::polynomial(2.0);
             const Vector x = Vector::Constant(1, 3.0);
             if (sublevel_member(w, x, 5.0) || !sublevel_member(w, x, 10.0))
                 return std::string("membership of psi(3) = 10 wrong");
             return std::string{};
         }},
        {"s operator on a constant curve",
         [] {
             const ForwardCurve f = ForwardCurve::sample(4.0, 64, 1.0, [](double) { return 3.0; });
             return expect_close(s_operator(f).values[32], 18.0, 1e-12);
         }},
        {"shift is exact on linear data",
         [] {
             const ForwardCurve f = ForwardCurve::sample(4.0, 40, 1.0, [](double x) { return x; });
             return expect_close(shift_semigroup(f, 0.1).values[10], 1.1, 1e-12);
         }},
        {"h_alpha norm of a constant curve",
         [] {
             const ForwardCurve f = ForwardCurve::sample(4.0, 64, 1.0, [](double) { return -2.5; });
             return expect_close(h_alpha_norm(f), 2.5, 1e-12);
         }},
        {"hjm without vols is a pure shift",
         [] {
             HjmSpec spec;
             spec.x_max = 4.0;
             spec.intervals = 64;
             const HjmModel hm = make_hjm_model(spec);
             const Vector x0 = initial_curve(spec, {0.02, 0.05, 1.0});
             RandomStream rng(1, 1, 0, 0);
             const Vector x = simulate_path(hm.model, FlowConfig{}, SchemeSpec::nv(0), 1.0, 8, x0, rng);
             const ForwardCurve shifted = shift_semigroup(hm.curve(x0), 1.0);
             return expect_close((x - shifted.values).lpNorm<Eigen::Infinity>(), 0.0, 1e-14);
         }},
        {"config validation reports every violation",
         [] {
             try {
                 validate_config(R"({"model":"OU","schemes":["euler"],"payoff":{"type":"moment1"},
                                     "grid":[0],"npaths":10,"steps":[64,32,128]})");
             } catch (const ConfigValidationError& e) {
                 if (e.issues().size() >= 2) return std::string{};
                 return std::string("only ") + std::to_string(e.issues().size()) + " issue(s) reported";
             }
             return std::string("invalid config accepted");
         }},
        {"config hash ignores key order",
         [] {
             return config_hash(R"({"a":1,"b":[1,2]})") == config_hash(R"({"b":[1,2],"a":1})")
                        ? std::string{}
                        : std::string("hash changed under reordering");
         }},
    };
}

} // namespace

std::vector<SelftestResult> run_selftest()
{
    std::vector<SelftestResult> results;
    for (const auto& c : checks()) {
        SelftestResult r{c.name, false, {}};
        try {
            r.detail = c.body();
            r.passed = r.detail.empty();
        } catch (const std::exception& e) {
            r.detail = std::string("threw: ") + e.what();
        }
        results.push_back(std::move(r));
    }
    return results;
}

} // namespace nvsplit
