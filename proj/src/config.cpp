#include "nvsplit/harness.hpp"

#include "nvsplit/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace nvsplit {

using json = nlohmann::json;

namespace {

std::string join(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string join(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

/// Typed access to a JSON document that records problems instead of throwing.
class Reader {
public:
    std::vector<ConfigIssue> issues;

    void fail(const std::string& path, std::string message)
    {
        issues.push_back({path.empty() ? "/" : path, std::move(message)});
    }

    bool object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed)
    {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        for (const auto& item : j.items()) {
            bool known = false;
            for (auto k : allowed) known = known || item.key() == k;
            if (!known) fail(join(path, item.key()), "unknown key '" + item.key() + "'");
        }
        return true;
    }

    const json* find(const json& obj, std::string_view key) const
    {
        auto it = obj.find(std::string(key));
        return it == obj.end() ? nullptr : &*it;
    }

    const json* require(const json& obj, const std::string& path, std::string_view key)
    {
        const json* v = find(obj, key);
        if (!v) fail(join(path, key), "missing required key '" + std::string(key) + "'");
        return v;
    }

    std::optional<double> number(const json& obj, const std::string& path, std::string_view key)
    {
        const json* v = find(obj, key);
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            fail(join(path, key), "expected a number");
            return std::nullopt;
        }
        return v->get<double>();
    }

    double number_or(const json& obj, const std::string& path, std::string_view key, double fallback)
    {
        return number(obj, path, key).value_or(fallback);
    }

    std::optional<long long> integer(const json& obj, const std::string& path, std::string_view key)
    {
        const json* v = find(obj, key);
        if (!v) return std::nullopt;
        if (!v->is_number_integer()) {
            fail(join(path, key), "expected an integer");
            return std::nullopt;
        }
        return v->get<long long>();
    }

    std::optional<std::string> string(const json& obj, const std::string& path, std::string_view key)
    {
        const json* v = find(obj, key);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            fail(join(path, key), "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& path, std::string_view key)
    {
        const json* v = find(obj, key);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) {
            fail(join(path, key), "expected true or false");
            return std::nullopt;
        }
        return v->get<bool>();
    }

    std::optional<std::vector<double>> numbers(const json& j, const std::string& path)
    {
        if (!j.is_array()) {
            fail(path, "expected an array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) {
                fail(join(path, i), "expected a number");
                return std::nullopt;
            }
            out.push_back(j[i].get<double>());
        }
        return out;
    }
};

template <class F>
void guarded(Reader& r, const std::string& path, F&& body)
{
    try {
        body();
    } catch (const Error& e) {
        r.fail(path, e.what());
    }
}

ModelParams read_params(Reader& r, const json& j, const std::string& path)
{
    ModelParams params;
    if (!j.is_object()) {
        r.fail(path, "expected an object");
        return params;
    }
    for (const auto& item : j.items()) {
        const std::string p = join(path, item.key());
        if (item.value().is_number()) {
            params[item.key()] = {item.value().get<double>()};
        } else if (auto v = r.numbers(item.value(), p)) {
            params[item.key()] = *v;
        }
    }
    return params;
}

std::optional<HjmSpec> read_hjm(Reader& r, const json& j, const std::string& path,
                                std::vector<InitialCurveSpec>& curves)
{
    if (!r.object(j, path, {"x_max", "M", "alpha", "s", "vols", "initial_curves"})) return std::nullopt;
    HjmSpec spec;
    spec.x_max = r.number_or(j, path, "x_max", spec.x_max);
    if (auto m = r.integer(j, path, "M")) spec.intervals = static_cast<int>(*m);
    spec.alpha = r.number_or(j, path, "alpha", spec.alpha);
    spec.s = r.number_or(j, path, "s", spec.s);
    if (const json* vols = r.find(j, "vols")) {
        const std::string vp = join(path, "vols");
        if (!vols->is_array()) r.fail(vp, "expected an array");
        for (std::size_t i = 0; vols->is_array() && i < vols->size(); ++i) {
            const std::string p = join(vp, i);
            const json& v = (*vols)[i];
            if (!r.object(v, p, {"type", "c", "beta", "gain", "node_x"})) continue;
            HjmVolSpec vol;
            const std::string type = r.string(v, p, "type").value_or("exponential");
            if (type == "exponential")
                vol.kind = HjmVolSpec::Kind::Exponential;
            else if (type == "scalar-gain")
                vol.kind = HjmVolSpec::Kind::ScalarGain;
            else
                r.fail(join(p, "type"), "unknown vol type '" + type + "' (exponential, scalar-gain)");
            vol.c = r.number_or(v, p, "c", vol.c);
            vol.beta = r.number_or(v, p, "beta", vol.beta);
            vol.gain = r.number_or(v, p, "gain", vol.gain);
            vol.node_x = r.number_or(v, p, "node_x", vol.node_x);
            spec.vols.push_back(vol);
        }
    }
    if (const json* ic = r.find(j, "initial_curves")) {
        const std::string cp = join(path, "initial_curves");
        if (!ic->is_array() || ic->empty()) r.fail(cp, "expected a non-empty array");
        for (std::size_t i = 0; ic->is_array() && i < ic->size(); ++i) {
            const std::string p = join(cp, i);
            const json& c = (*ic)[i];
            if (!r.object(c, p, {"short", "long", "kappa"})) continue;
            InitialCurveSpec curve;
            curve.short_rate = r.number_or(c, p, "short", curve.short_rate);
            curve.long_rate = r.number_or(c, p, "long", curve.long_rate);
            curve.kappa = r.number_or(c, p, "kappa", curve.kappa);
            curves.push_back(curve);
        }
    } else {
        curves.push_back(InitialCurveSpec{});
    }
    guarded(r, path, [&] { spec.validate(); });
    return spec;
}

std::optional<SchemeSpec> read_scheme(Reader& r, const json& j, const std::string& path, int noise_dim)
{
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "euler") return SchemeSpec::euler(noise_dim);
        if (name == "nv") return SchemeSpec::nv(noise_dim);
        r.fail(path, "unknown scheme '" + name + "' (euler, nv, or an explicit branch list)");
        return std::nullopt;
    }
    if (!r.object(j, path, {"name", "branches"})) return std::nullopt;
    SchemeSpec s;
    s.name = r.string(j, path, "name").value_or("custom");
    const json* branches = r.require(j, path, "branches");
    if (!branches) return std::nullopt;
    const std::string bp = join(path, "branches");
    if (!branches->is_array() || branches->empty()) {
        r.fail(bp, "expected a non-empty array");
        return std::nullopt;
    }
    for (std::size_t b = 0; b < branches->size(); ++b) {
        const std::string p = join(bp, b);
        const json& br = (*branches)[b];
        if (!r.object(br, p, {"weight", "substeps"})) continue;
        SchemeBranch branch;
        branch.weight = r.number_or(br, p, "weight", 1.0);
        const json* steps = r.require(br, p, "substeps");
        if (!steps) continue;
        if (!steps->is_array()) {
            r.fail(join(p, "substeps"), "expected an array");
            continue;
        }
        for (std::size_t k = 0; k < steps->size(); ++k) {
            const std::string sp = join(join(p, "substeps"), k);
            const json& st = (*steps)[k];
            if (!r.object(st, sp, {"drift", "noise", "fraction"})) continue;
            if (auto f = r.number(st, sp, "drift")) {
                branch.substeps.push_back(Substep::drift(*f));
            } else if (auto n = r.integer(st, sp, "noise")) {
                if (*n < 1 || *n > noise_dim) {
                    r.fail(join(sp, "noise"), "noise index must lie in 1.." + std::to_string(noise_dim));
                    continue;
                }
                branch.substeps.push_back(
                    Substep::noise(static_cast<int>(*n) - 1, r.number_or(st, sp, "fraction", 1.0)));
            } else {
                r.fail(sp, "substep needs 'drift' or 'noise'");
            }
        }
        s.branches.push_back(std::move(branch));
    }
    guarded(r, path, [&] { s.validate(noise_dim); });
    return s;
}

std::optional<WeightFunction> read_weight(Reader& r, const json& j, const std::string& path,
                                          const std::vector<double>& spectrum)
{
    if (!r.object(j, path, {"family", "s", "beta", "eta", "level"})) return std::nullopt;
    const std::string family = r.string(j, path, "family").value_or("polynomial");
    const int level = static_cast<int>(r.integer(j, path, "level").value_or(0));
    std::optional<WeightFunction> w;
    guarded(r, path, [&] {
        const std::vector<double> spec = level > 0 ? spectrum : std::vector<double>{};
        if (family == "polynomial")
            w = WeightFunction::polynomial(r.number_or(j, path, "s", 2.0), level, spec);
        else if (family == "cosh")
            w = WeightFunction::cosh(r.number_or(j, path, "beta", 1.0), level, spec);
        else if (family == "gauss-exp")
            w = WeightFunction::gauss_exp(r.number_or(j, path, "eta", 0.1), level, spec);
        else
            r.fail(join(path, "family"), "unknown weight family '" + family + "' (polynomial, cosh, gauss-exp)");
    });
    return w;
}

std::vector<Vector> read_grid(Reader& r, const json& j, const std::string& path, int dim)
{
    std::vector<Vector> grid;
    if (j.is_object()) {
        if (!r.object(j, path, {"coordinate", "from", "to", "step", "values"})) return grid;
        const int coord = static_cast<int>(r.integer(j, path, "coordinate").value_or(0));
        if (coord < 0 || coord >= dim) {
            r.fail(join(path, "coordinate"), "coordinate out of range for dimension " + std::to_string(dim));
            return grid;
        }
        std::vector<double> values;
        if (const json* v = r.find(j, "values")) {
            values = r.numbers(*v, join(path, "values")).value_or(std::vector<double>{});
        } else {
            const auto from = r.number(j, path, "from");
            const auto to = r.number(j, path, "to");
            const double step = r.number_or(j, path, "step", 1.0);
            if (!from || !to) {
                r.fail(path, "range grid needs 'from' and 'to' (or 'values')");
                return grid;
            }
            if (!(step > 0.0) || *to < *from) {
                r.fail(path, "range grid needs step > 0 and to >= from");
                return grid;
            }
            const auto count = static_cast<long>(std::floor((*to - *from) / step + 1e-9));
            for (long i = 0; i <= count; ++i) values.push_back(*from + step * static_cast<double>(i));
        }
        for (double v : values) {
            Vector x = Vector::Zero(dim);
            x[coord] = v;
            grid.push_back(x);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string p = join(path, i);
            if (j[i].is_number() && dim == 1) {
                grid.push_back(Vector::Constant(1, j[i].get<double>()));
            } else if (auto v = r.numbers(j[i], p)) {
                if (static_cast<int>(v->size()) != dim) {
                    r.fail(p, "grid point has dimension " + std::to_string(v->size()) + ", model has " +
                                  std::to_string(dim));
                    continue;
                }
                grid.push_back(Eigen::Map<const Vector>(v->data(), dim));
            }
        }
    } else {
        r.fail(path, "expected an array of states or a range object");
    }
    if (grid.empty()) r.fail(path, "initial-state grid is empty");
    return grid;
}

} // namespace

ConfigValidationError::ConfigValidationError(std::vector<ConfigIssue> issues)
    : ConfigError([&] {
          std::string msg = std::to_string(issues.size()) + " configuration error(s)";
          for (const auto& i : issues) msg += "\n  " + i.path + ": " + i.message;
          return msg;
      }()),
      issues_(std::move(issues))
{
}

std::uint64_t config_hash(std::string_view json_text)
{
    return fnv1a64(json::parse(json_text).dump());
}

void StudyConfig::override_seed(std::uint64_t seed)
{
    experiment.seed = seed;
    supermartingale.seed = seed;
}

void StudyConfig::set_workers(int workers)
{
    if (workers < 1) throw ArgumentError("workers must be >= 1");
    experiment.mc.workers = workers;
    supermartingale.mc.workers = workers;
}

StudyConfig validate_config(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigValidationError({{"/", std::string("invalid JSON: ") + e.what()}});
    }

    Reader r;
    StudyConfig out;
    out.canonical = doc.dump();
    out.hash = fnv1a64(out.canonical);
    if (!r.object(doc, "", {"description", "model", "hjm", "schemes", "payoff", "weight", "T", "steps", "npaths",
                            "grid", "seed", "reference", "evaluation", "flow", "antithetic",
                            "resolution_threshold", "exactness_tolerance", "supermartingale", "snapshots"}))
        throw ConfigValidationError(std::move(r.issues));

    ExperimentConfig& e = out.experiment;

    // Model.
    bool have_model = false;
    std::vector<InitialCurveSpec> curves;
    if (const json* m = r.require(doc, "", "model")) {
        std::string name;
        ModelParams params;
        if (m->is_string()) {
            name = m->get<std::string>();
        } else if (r.object(*m, "/model", {"name", "params"})) {
            name = r.string(*m, "/model", "name").value_or("");
            if (name.empty()) r.fail("/model/name", "missing required key 'name'");
            if (const json* p = r.find(*m, "params")) params = read_params(r, *p, "/model/params");
        }
        if (name == "hjm") {
            if (!params.empty()) r.fail("/model/params", "hjm parameters belong in the 'hjm' block");
            const json* block = r.require(doc, "", "hjm");
            if (block) {
                if (auto spec = read_hjm(r, *block, "/hjm", curves)) {
                    guarded(r, "/hjm", [&] {
                        out.hjm = make_hjm_model(*spec);
                        e.model = out.hjm->model;
                        e.weight = out.hjm->weight;
                        have_model = true;
                    });
                }
            }
        } else if (!name.empty()) {
            if (r.find(doc, "hjm")) r.fail("/hjm", "'hjm' block given for a non-hjm model");
            guarded(r, "/model", [&] {
                e.model = make_builtin(name, params);
                have_model = true;
            });
        }
    }
    const int dim = have_model ? e.model.dim : 1;
    const int noise_dim = have_model ? e.model.noise_dim() : 1;

    // Schemes.
    if (const json* s = r.require(doc, "", "schemes")) {
        if (!s->is_array() || s->empty()) r.fail("/schemes", "expected a non-empty array");
        for (std::size_t i = 0; s->is_array() && i < s->size(); ++i)
            if (auto scheme = read_scheme(r, (*s)[i], join(std::string("/schemes"), i), noise_dim))
                e.schemes.push_back(std::move(*scheme));
    }

    // Weight.
    if (const json* w = r.find(doc, "weight")) {
        if (out.hjm)
            r.fail("/weight", "the hjm model fixes its weight through hjm.alpha and hjm.s");
        else if (auto weight = read_weight(r, *w, "/weight", e.model.spectrum))
            e.weight = *weight;
    }

    // Payoff.
    if (const json* p = r.require(doc, "", "payoff")) {
        if (r.object(*p, "/payoff", {"type", "coordinate", "coefficients", "tau"})) {
            const std::string type = r.string(*p, "/payoff", "type").value_or("");
            const auto coord = r.integer(*p, "/payoff", "coordinate").value_or(0);
            if (coord < 0 || coord >= dim)
                r.fail("/payoff/coordinate", "coordinate out of range for dimension " + std::to_string(dim));
            const int c = static_cast<int>(coord);
            if (type == "moment1") {
                e.payoff = PayoffSpec::moment1(c);
            } else if (type == "moment2") {
                e.payoff = PayoffSpec::moment2(c);
            } else if (type == "poly") {
                const json* coeffs = r.require(*p, "/payoff", "coefficients");
                if (coeffs)
                    if (auto v = r.numbers(*coeffs, "/payoff/coefficients"))
                        guarded(r, "/payoff", [&] { e.payoff = PayoffSpec::poly(c, *v); });
            } else if (type == "bond") {
                if (!out.hjm)
                    r.fail("/payoff/type", "bond payoff needs the hjm model");
                else
                    guarded(r, "/payoff/tau",
                            [&] { e.payoff = bond_payoff(out.hjm->spec, r.number_or(*p, "/payoff", "tau", 1.0)); });
            } else if (type == "weight") {
                const WeightFunction w = e.weight;
                e.payoff = PayoffSpec::make_custom("psi", [w](const Vector& x) { return w(x); });
            } else {
                r.fail("/payoff/type", "unknown payoff type '" + type + "' (moment1, moment2, poly, bond, weight)");
            }
        }
    }

    // Scalars.
    e.T = r.number_or(doc, "", "T", 1.0);
    if (!(e.T > 0.0)) r.fail("/T", "T must be > 0");
    e.npaths = r.integer(doc, "", "npaths").value_or(10000);
    if (e.npaths < 100) r.fail("/npaths", "npaths below minimum 100");
    if (const json* seed = r.find(doc, "seed")) {
        if (seed->is_number_unsigned())
            e.seed = seed->get<std::uint64_t>();
        else
            r.fail("/seed", "seed must be a non-negative integer");
    }
    e.mc.antithetic = r.boolean(doc, "", "antithetic").value_or(false);
    if (e.mc.antithetic && e.npaths % 2 != 0) r.fail("/npaths", "antithetic sampling needs an even npaths");
    e.resolution_threshold = r.number_or(doc, "", "resolution_threshold", 0.3);
    if (!(e.resolution_threshold > 0.0)) r.fail("/resolution_threshold", "must be > 0");
    e.exactness_tolerance = r.number_or(doc, "", "exactness_tolerance", 1e-12);
    if (!(e.exactness_tolerance >= 0.0)) r.fail("/exactness_tolerance", "must be >= 0");

    // Steps.
    e.steps = {8, 16, 32, 64, 128};
    if (const json* s = r.find(doc, "steps")) {
        if (auto v = r.numbers(*s, "/steps")) {
            e.steps.clear();
            for (double x : *v) e.steps.push_back(static_cast<int>(x));
            bool integral = true;
            for (double x : *v) integral = integral && x == std::floor(x) && x >= 1.0;
            if (!integral) r.fail("/steps", "step counts must be positive integers");
            for (std::size_t i = 1; i < e.steps.size(); ++i)
                if (e.steps[i] <= e.steps[i - 1]) {
                    r.fail("/steps", "step counts must be strictly increasing");
                    break;
                }
            if (e.steps.size() < 3) r.fail("/steps", "at least 3 step counts are required");
        }
    }

    // Grid.
    if (out.hjm) {
        if (r.find(doc, "grid")) r.fail("/grid", "the hjm grid is given by hjm.initial_curves");
        for (const auto& c : curves) e.grid.push_back(initial_curve(out.hjm->spec, c));
    } else if (const json* g = r.require(doc, "", "grid")) {
        e.grid = read_grid(r, *g, "/grid", dim);
    }

    // Reference.
    if (const json* ref = r.find(doc, "reference")) {
        if (r.object(*ref, "/reference", {"kind", "factor", "paths_factor", "coupling", "fallback"})) {
            const std::string kind = r.string(*ref, "/reference", "kind").value_or("exact-oracle");
            if (kind == "exact-oracle")
                e.reference.kind = ReferenceKind::ExactOracle;
            else if (kind == "fine-nv")
                e.reference.kind = ReferenceKind::FineNv;
            else
                r.fail("/reference/kind", "unknown reference kind '" + kind + "' (exact-oracle, fine-nv)");
            e.reference.factor = static_cast<int>(r.integer(*ref, "/reference", "factor").value_or(8));
            if (e.reference.factor < 1) r.fail("/reference/factor", "factor must be >= 1");
            e.reference.paths_factor = static_cast<int>(r.integer(*ref, "/reference", "paths_factor").value_or(10));
            if (e.reference.paths_factor < 10) r.fail("/reference/paths_factor", "paths_factor must be >= 10");
            const std::string coupling = r.string(*ref, "/reference", "coupling").value_or("independent");
            if (coupling == "independent")
                e.reference.coupling = Coupling::Independent;
            else if (coupling == "coupled")
                e.reference.coupling = Coupling::Coupled;
            else
                r.fail("/reference/coupling", "unknown coupling '" + coupling + "' (independent, coupled)");
            e.reference.fallback_to_fine_nv = r.boolean(*ref, "/reference", "fallback").value_or(true);
            if (e.reference.coupling == Coupling::Coupled && !e.steps.empty())
                for (int n : e.steps)
                    if (n > 0 && (e.steps.back() * e.reference.factor) % n != 0) {
                        r.fail("/reference/coupling", "coupled reference steps must be a multiple of every step count");
                        break;
                    }
        }
    }

    if (auto ev = r.string(doc, "", "evaluation")) {
        if (*ev == "auto")
            e.evaluation = Evaluation::Auto;
        else if (*ev == "monte-carlo")
            e.evaluation = Evaluation::MonteCarlo;
        else if (*ev == "affine")
            e.evaluation = Evaluation::Affine;
        else
            r.fail("/evaluation", "unknown evaluation '" + *ev + "' (auto, monte-carlo, affine)");
    }

    if (const json* f = r.find(doc, "flow")) {
        if (r.object(*f, "/flow", {"substeps", "exact_flows"})) {
            e.flow.substeps = static_cast<int>(r.integer(*f, "/flow", "substeps").value_or(4));
            e.flow.use_exact_flows = r.boolean(*f, "/flow", "exact_flows").value_or(true);
            guarded(r, "/flow", [&] { e.flow.validate(); });
        }
    }

    SupermartingaleOptions& sm = out.supermartingale;
    sm.seed = e.seed;
    sm.mc = e.mc;
    if (const json* s = r.find(doc, "supermartingale")) {
        if (r.object(*s, "/supermartingale", {"timepoints", "steps_per_unit", "npaths"})) {
            if (const json* t = r.find(*s, "timepoints"))
                if (auto v = r.numbers(*t, "/supermartingale/timepoints")) sm.timepoints = *v;
            sm.steps_per_unit = static_cast<int>(r.integer(*s, "/supermartingale", "steps_per_unit").value_or(64));
            sm.npaths = r.integer(*s, "/supermartingale", "npaths").value_or(10000);
            if (sm.steps_per_unit < 1) r.fail("/supermartingale/steps_per_unit", "must be >= 1");
            if (sm.npaths < 100) r.fail("/supermartingale/npaths", "npaths below minimum 100");
            if (sm.mc.antithetic && sm.npaths % 2 != 0)
                r.fail("/supermartingale/npaths", "antithetic sampling needs an even npaths");
        }
    }
    for (double t : sm.timepoints)
        if (!(t > 0.0) || t > e.T) {
            r.fail("/supermartingale/timepoints", "timepoints must lie in (0, T]");
            break;
        }

    out.snapshots = {0.0, 0.5 * e.T, e.T};
    if (const json* s = r.find(doc, "snapshots")) {
        if (auto v = r.numbers(*s, "/snapshots")) {
            out.snapshots = *v;
            for (double t : *v)
                if (t < 0.0 || t > e.T) {
                    r.fail("/snapshots", "snapshot times must lie in [0, T]");
                    break;
                }
        }
    }

    if (r.issues.empty()) guarded(r, "", [&] { e.validate(); });
    if (!r.issues.empty()) throw ConfigValidationError(std::move(r.issues));
    return out;
}

StudyConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigValidationError({{"/", "cannot read config file " + path.string()}});
    std::ostringstream text;
    text << in.rdbuf();
    return validate_config(text.str());
}

} // namespace nvsplit
