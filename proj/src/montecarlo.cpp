#include "nvsplit/montecarlo.hpp"

#include "nvsplit/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace nvsplit {

namespace {

Estimate summarize(const std::vector<double>& samples)
{
    // Shifted by the first sample so identical samples give an exact mean and zero spread.
    const double n = static_cast<double>(samples.size());
    const double shift = samples.front();
    double sum = 0.0;
    for (double v : samples) sum += v - shift;
    const double offset = sum / n;
    double ss = 0.0;
    for (double v : samples) ss += (v - shift - offset) * (v - shift - offset);
    const double var = samples.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {shift + offset, std::sqrt(var / n)};
}

/// Pair means for antithetic sampling, identity otherwise.
Estimate summarize_paths(const std::vector<double>& values, bool antithetic)
{
    if (!antithetic) return summarize(values);
    std::vector<double> pairs(values.size() / 2);
    for (std::size_t k = 0; k < pairs.size(); ++k) pairs[k] = 0.5 * (values[2 * k] + values[2 * k + 1]);
    return summarize(pairs);
}

struct PathIdentity {
    std::uint32_t id;
    bool antithetic;
};

PathIdentity path_identity(std::size_t i, bool antithetic)
{
    if (!antithetic) return {static_cast<std::uint32_t>(i), false};
    return {static_cast<std::uint32_t>(i / 2), (i % 2) == 1};
}

void check_paths(long npaths, bool antithetic)
{
    if (npaths < 2) throw ArgumentError("need at least 2 paths");
    if (antithetic && npaths % 2 != 0) throw ArgumentError("antithetic sampling needs an even path count");
}

double checked_payoff(const PayoffSpec& payoff, const Vector& x, std::size_t path)
{
    const double v = payoff(x);
    if (!std::isfinite(v)) throw OverflowError("payoff '" + payoff.id + "'", -1, static_cast<long>(path));
    return v;
}

std::string label(const std::string& prefix, const std::string& scheme, int nsteps)
{
    return prefix + "/" + scheme + "/" + std::to_string(nsteps);
}

/// Fine Brownian increments of one path, step-major: w[k * d + j].
void draw_fine_increments(RandomStream& normals, int steps, int d, double dt, std::vector<double>& w)
{
    w.resize(static_cast<std::size_t>(steps) * d);
    const double scale = std::sqrt(dt);
    for (auto& v : w) v = scale * normals.normal();
}

struct CoupledStreams {
    std::uint32_t normals;
    std::uint32_t reference_coin;
};

CoupledStreams coupled_streams(int reference_steps)
{
    return {fnv1a32("coupled/normals/" + std::to_string(reference_steps)),
            fnv1a32("coupled/reference-coin/" + std::to_string(reference_steps))};
}

/// Runs `stepper` for `steps` steps whose increments are block sums of the
/// fine increments (block = fine steps per coarse step).
void run_on_fine_path(Stepper& stepper, double T, int steps, const std::vector<double>& fine, int block,
                      RandomStream& coins, Vector& x, std::size_t path)
{
    const int d = stepper.model().noise_dim();
    const double dt = T / steps;
    std::vector<double> coarse(static_cast<std::size_t>(d));
    const bool branched = stepper.scheme().branches.size() > 1;
    for (int k = 0; k < steps; ++k) {
        std::fill(coarse.begin(), coarse.end(), 0.0);
        for (int r = 0; r < block; ++r)
            for (int j = 0; j < d; ++j) coarse[j] += fine[(static_cast<std::size_t>(k) * block + r) * d + j];
        const int branch = branched ? stepper.choose_branch(coins.uniform()) : 0;
        try {
            stepper.step_with(dt, x, branch, coarse);
        } catch (const OverflowError& e) {
            throw e.with_step(k).with_path(static_cast<long>(path));
        }
    }
}

} // namespace

Estimate estimate_expectation(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s,
                              const PayoffSpec& payoff, double T, int nsteps, const Vector& x0, long npaths,
                              const StreamAddress& stream, const McOptions& options)
{
    check_paths(npaths, options.antithetic);
    if (!(T > 0.0)) throw ArgumentError("horizon T must be > 0");
    if (nsteps < 1) throw ArgumentError("nsteps must be >= 1");
    if (x0.size() != m.dim) throw ArgumentError("estimate_expectation: dimension mismatch");
    s.validate(m.noise_dim());

    const double dt = T / nsteps;
    std::vector<double> values(static_cast<std::size_t>(npaths));
    parallel_chunks(values.size(), options.workers, [&](std::size_t begin, std::size_t end) {
        Stepper stepper(m, cfg, s);
        Vector x(m.dim);
        for (std::size_t i = begin; i < end; ++i) {
            const auto who = path_identity(i, options.antithetic);
            RandomStream rng(stream.seed, stream.tag, stream.grid, who.id, who.antithetic);
            x = x0;
            for (int n = 0; n < nsteps; ++n) {
                try {
                    stepper.step(dt, x, rng);
                } catch (const OverflowError& e) {
                    throw e.with_step(n).with_path(static_cast<long>(i));
                }
            }
            values[i] = checked_payoff(payoff, x, i);
        }
    });
    return summarize_paths(values, options.antithetic);
}

Estimate reference_value(const SplitModel& m, const PayoffSpec& payoff, double T, const Vector& x0,
                         const FlowConfig& cfg, const ReferencePolicy& policy, int finest_steps, long npaths,
                         const StreamAddress& stream, const McOptions& options)
{
    if (policy.kind == ReferenceKind::ExactOracle) {
        try {
            return {exact_expectation(m, payoff, T, x0), 0.0};
        } catch (const CapabilityError& e) {
            if (!policy.fallback_to_fine_nv)
                throw ConfigError(std::string("no exact oracle and fine-NV fallback disabled: ") + e.what());
        }
    }
    if (policy.factor < 1) throw ConfigError("reference factor must be >= 1");
    if (policy.paths_factor < 10) throw ConfigError("reference paths factor must be >= 10");
    const int steps = finest_steps * policy.factor;
    StreamAddress ref = stream;
    ref.tag = fnv1a32("reference/nv/" + std::to_string(steps));
    return estimate_expectation(m, cfg, SchemeSpec::nv(m.noise_dim()), payoff, T, steps, x0,
                                npaths * policy.paths_factor, ref, options);
}

// ---------------------------------------------------------------------------

bool StudySetup::uses_affine() const
{
    const bool eligible = model->affine && payoff.is_polynomial() && payoff.degree() <= 4;
    switch (evaluation) {
    case Evaluation::MonteCarlo: return false;
    case Evaluation::Affine:
        if (!eligible) throw CapabilityError("affine evaluation needs an affine model and a polynomial payoff");
        return true;
    case Evaluation::Auto: return eligible;
    }
    return false;
}

namespace {

bool oracle_covers(const StudySetup& setup, const Vector& x0)
{
    if (setup.reference.kind != ReferenceKind::ExactOracle || !setup.model->moment_oracle) return false;
    return setup.model->moment_oracle(setup.payoff, setup.T, x0).has_value();
}

bool coupled(const StudySetup& setup, const Vector& x0)
{
    return !setup.uses_affine() && setup.reference.coupling == Coupling::Coupled && !oracle_covers(setup, x0);
}

} // namespace

const Estimate& ReferenceCache::value(int g)
{
    const auto& s = *setup_;
    if (values_.size() != s.grid.size()) values_.resize(s.grid.size());
    auto& slot = values_.at(static_cast<std::size_t>(g));
    if (slot) return *slot;

    const Vector& x0 = s.grid[g];
    if (oracle_covers(s, x0)) {
        slot = Estimate{exact_expectation(*s.model, s.payoff, s.T, x0), 0.0};
    } else if (s.reference.kind == ReferenceKind::ExactOracle && !s.reference.fallback_to_fine_nv) {
        throw ConfigError("exact-oracle reference requested but " + s.model->name + " has no oracle for '" +
                          s.payoff.id + "'");
    } else if (s.uses_affine()) {
        auto law = propagate_moments_affine(*s.model, s.flow, SchemeSpec::nv(s.model->noise_dim()), s.T,
                                            s.reference_steps(), x0);
        slot = Estimate{affine_expectation(law, s.payoff), 0.0};
    } else if (coupled(s, x0)) {
        slot = summarize(coupled_samples(g));
    } else {
        ReferencePolicy fine = s.reference;
        fine.kind = ReferenceKind::FineNv;
        slot = reference_value(*s.model, s.payoff, s.T, x0, s.flow, fine, s.finest_steps, s.npaths,
                               {s.seed, 0, static_cast<std::uint32_t>(g)}, s.mc);
    }
    return *slot;
}

const std::vector<double>& ReferenceCache::coupled_samples(int g)
{
    const auto& s = *setup_;
    if (samples_.size() != s.grid.size()) samples_.resize(s.grid.size());
    auto& samples = samples_.at(static_cast<std::size_t>(g));
    if (!samples.empty()) return samples;

    check_paths(s.npaths, s.mc.antithetic);
    const SplitModel& m = *s.model;
    const int steps = s.reference_steps();
    const auto tags = coupled_streams(steps);
    const Vector& x0 = s.grid[g];
    samples.resize(static_cast<std::size_t>(s.npaths));
    parallel_chunks(samples.size(), s.mc.workers, [&](std::size_t begin, std::size_t end) {
        Stepper stepper(m, s.flow, SchemeSpec::nv(m.noise_dim()));
        std::vector<double> fine;
        Vector x(m.dim);
        for (std::size_t i = begin; i < end; ++i) {
            const auto who = path_identity(i, s.mc.antithetic);
            RandomStream normals(s.seed, tags.normals, static_cast<std::uint32_t>(g), who.id, who.antithetic);
            RandomStream coins(s.seed, tags.reference_coin, static_cast<std::uint32_t>(g), who.id, who.antithetic);
            draw_fine_increments(normals, steps, m.noise_dim(), s.T / steps, fine);
            x = x0;
            run_on_fine_path(stepper, s.T, steps, fine, 1, coins, x, i);
            samples[i] = checked_payoff(s.payoff, x, i);
        }
    });
    return samples;
}

WeakErrorResult weighted_weak_error(const StudySetup& setup, const SchemeSpec& scheme, int nsteps,
                                    ReferenceCache& cache)
{
    if (setup.grid.empty()) throw ArgumentError("weighted_weak_error over an empty grid");
    const SplitModel& m = *setup.model;
    scheme.validate(m.noise_dim());

    WeakErrorResult result;
    result.exact_evaluation = setup.uses_affine();
    for (std::size_t g = 0; g < setup.grid.size(); ++g) {
        const Vector& x0 = setup.grid[g];
        GridPointError point;
        point.grid_index = static_cast<int>(g);

        if (result.exact_evaluation) {
            point.estimate = affine_expectation(propagate_moments_affine(m, setup.flow, scheme, setup.T, nsteps, x0),
                                                setup.payoff);
            point.reference = cache.value(static_cast<int>(g)).mean;
        } else if (coupled(setup, x0)) {
            const int steps = setup.reference_steps();
            if (steps % nsteps != 0)
                throw ConfigError("coupled reference needs reference steps (" + std::to_string(steps) +
                                  ") divisible by " + std::to_string(nsteps));
            const int block = steps / nsteps;
            const auto& reference = cache.coupled_samples(static_cast<int>(g));
            const auto tags = coupled_streams(steps);
            const std::uint32_t coin_tag = fnv1a32(label("coupled/coin", scheme.name, nsteps));
            std::vector<double> diffs(reference.size());
            parallel_chunks(diffs.size(), setup.mc.workers, [&](std::size_t begin, std::size_t end) {
                Stepper stepper(m, setup.flow, scheme);
                std::vector<double> fine;
                Vector x(m.dim);
                for (std::size_t i = begin; i < end; ++i) {
                    const auto who = path_identity(i, setup.mc.antithetic);
                    RandomStream normals(setup.seed, tags.normals, static_cast<std::uint32_t>(g), who.id,
                                         who.antithetic);
                    RandomStream coins(setup.seed, coin_tag, static_cast<std::uint32_t>(g), who.id, who.antithetic);
                    draw_fine_increments(normals, steps, m.noise_dim(), setup.T / steps, fine);
                    x = x0;
                    run_on_fine_path(stepper, setup.T, nsteps, fine, block, coins, x, i);
                    diffs[i] = checked_payoff(setup.payoff, x, i) - reference[i];
                }
            });
            const Estimate diff = summarize_paths(diffs, setup.mc.antithetic);
            point.reference = cache.value(static_cast<int>(g)).mean;
            point.estimate = point.reference + diff.mean;
            point.raw_error = diff.mean;
            point.std_error = diff.std_error;
        } else {
            const StreamAddress stream{setup.seed, fnv1a32(label("mc", scheme.name, nsteps)),
                                       static_cast<std::uint32_t>(g)};
            const Estimate est = estimate_expectation(m, setup.flow, scheme, setup.payoff, setup.T, nsteps, x0,
                                                      setup.npaths, stream, setup.mc);
            const Estimate& ref = cache.value(static_cast<int>(g));
            point.estimate = est.mean;
            point.reference = ref.mean;
            point.std_error = std::hypot(est.std_error, ref.std_error);
        }
        if (!coupled(setup, x0) || result.exact_evaluation) point.raw_error = point.estimate - point.reference;

        const double psi = setup.weight(x0);
        point.weighted_error = std::abs(point.raw_error) / psi;
        point.weighted_std_error = point.std_error / psi;
        if (g == 0 || point.weighted_error > result.error) {
            result.error = point.weighted_error;
            result.argmax = point.grid_index;
        }
        result.std_error = std::max(result.std_error, point.weighted_std_error);
        result.max_raw_std_error = std::max(result.max_raw_std_error, point.std_error);
        result.points.push_back(point);
    }
    return result;
}

// ---------------------------------------------------------------------------

const SlopeFit& ErrorReport::fit(const std::string& scheme) const
{
    for (const auto& f : fits)
        if (f.scheme == scheme) return f;
    throw ArgumentError("no fit for scheme '" + scheme + "'");
}

void ErrorReport::require_conclusive() const
{
    std::string missing;
    for (const auto& f : fits)
        if (!f.conclusive) missing += (missing.empty() ? "" : ", ") + f.scheme;
    if (!missing.empty()) throw InconclusiveError("fewer than 3 resolved levels for: " + missing);
}

void ExperimentConfig::validate() const
{
    model.validate();
    if (!(T > 0.0)) throw ConfigError("T must be > 0");
    if (steps.size() < 3) throw ConfigError("a convergence study needs at least 3 step counts");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] < 1) throw ConfigError("step counts must be >= 1");
        if (i > 0 && steps[i] <= steps[i - 1]) throw ConfigError("step counts must be strictly increasing");
    }
    if (npaths < 100) throw ConfigError("npaths below minimum 100");
    if (mc.antithetic && npaths % 2 != 0) throw ConfigError("antithetic sampling needs an even npaths");
    if (mc.workers < 1) throw ConfigError("workers must be >= 1");
    if (grid.empty()) throw ConfigError("initial-state grid is empty");
    for (const auto& x : grid)
        if (x.size() != model.dim) throw ConfigError("grid point dimension differs from the model dimension");
    if (schemes.empty()) throw ConfigError("no schemes selected");
    for (const auto& s : schemes) s.validate(model.noise_dim());
    if (payoff.is_polynomial() && (payoff.coordinate < 0 || payoff.coordinate >= model.dim))
        throw ConfigError("payoff coordinate out of range");
    flow.validate();
    if (reference.factor < 1) throw ConfigError("reference factor must be >= 1");
    if (reference.paths_factor < 10) throw ConfigError("reference paths factor must be >= 10");
    if (reference.coupling == Coupling::Coupled)
        for (int n : steps)
            if ((steps.back() * reference.factor) % n != 0)
                throw ConfigError("coupled reference steps must be a multiple of every step count");
    if (!(resolution_threshold > 0.0)) throw ConfigError("resolution threshold must be > 0");
}

StudySetup ExperimentConfig::setup() const
{
    StudySetup s;
    s.model = &model;
    s.flow = flow;
    s.payoff = payoff;
    s.weight = weight;
    s.T = T;
    s.grid = grid;
    s.reference = reference;
    s.evaluation = evaluation;
    s.npaths = npaths;
    s.seed = seed;
    s.mc = mc;
    s.finest_steps = steps.empty() ? 1 : steps.back();
    return s;
}

std::pair<double, double> fit_log_slope(const std::vector<double>& dts, const std::vector<double>& errors)
{
    const std::size_t n = dts.size();
    if (n < 2 || errors.size() != n) throw ArgumentError("slope fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(dts[i]);
        my += std::log(errors[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(dts[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(errors[i]) - my);
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log(errors[i]) - (my + slope * (std::log(dts[i]) - mx));
        rss += r * r;
    }
    return {slope, std::sqrt(rss / n)};
}

ErrorReport convergence_study(const ExperimentConfig& config)
{
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    const StudySetup setup = config.setup();
    ReferenceCache cache(setup);

    ErrorReport report;
    for (const auto& scheme : config.schemes) {
        std::vector<double> dts, errors;
        SlopeFit fit;
        fit.scheme = scheme.name;
        bool all_exact = true;
        for (int n : config.steps) {
            LevelResult level;
            level.scheme = scheme.name;
            level.nsteps = n;
            level.dt = config.T / n;
            level.error = weighted_weak_error(setup, scheme, n, cache);
            level.resolved = level.error.error > 0.0 &&
                             level.error.std_error <= config.resolution_threshold * level.error.error;

            double scale = 1.0;
            for (const auto& p : level.error.points)
                scale = std::max(scale, std::abs(p.reference) / setup.weight(setup.grid[p.grid_index]));
            if (level.error.error > config.exactness_tolerance * scale) all_exact = false;

            if (level.resolved) {
                dts.push_back(level.dt);
                errors.push_back(level.error.error);
                fit.levels_used.push_back(n);
            }
            report.levels.push_back(std::move(level));
        }
        if (all_exact) {
            fit.exact = true;
            fit.conclusive = true;
            fit.slope = std::numeric_limits<double>::quiet_NaN();
            fit.residual = std::numeric_limits<double>::quiet_NaN();
            fit.levels_used.clear();
        } else if (dts.size() >= 2) {
            std::tie(fit.slope, fit.residual) = fit_log_slope(dts, errors);
            fit.conclusive = dts.size() >= 3;
        } else {
            fit.slope = std::numeric_limits<double>::quiet_NaN();
            fit.residual = std::numeric_limits<double>::quiet_NaN();
        }
        report.fits.push_back(fit);
    }
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// ---------------------------------------------------------------------------

SupermartingaleReport supermartingale_check(const SplitModel& m, const FlowConfig& cfg, const WeightFunction& weight,
                                            double T, const std::vector<Vector>& grid,
                                            const SupermartingaleOptions& options)
{
    if (grid.empty()) throw ArgumentError("supermartingale_check over an empty grid");
    if (options.timepoints.empty()) throw ArgumentError("no timepoints");
    for (double t : options.timepoints)
        if (!(t > 0.0) || t > T) throw ArgumentError("timepoints must lie in (0, T]");
    if (options.steps_per_unit < 1) throw ArgumentError("steps_per_unit must be >= 1");

    const PayoffSpec psi = PayoffSpec::make_custom("psi", [&weight](const Vector& x) { return weight(x); });
    const SchemeSpec nv = SchemeSpec::nv(m.noise_dim());

    SupermartingaleReport report;
    report.omega = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double psi0 = weight(grid[g]);
        for (std::size_t ti = 0; ti < options.timepoints.size(); ++ti) {
            const double t = options.timepoints[ti];
            const int nsteps = std::max(1, static_cast<int>(std::ceil(t * options.steps_per_unit - 1e-9)));
            const StreamAddress stream{options.seed, fnv1a32("supermartingale/" + std::to_string(ti)),
                                       static_cast<std::uint32_t>(g)};
            const Estimate e = estimate_expectation(m, cfg, nv, psi, t, nsteps, grid[g], options.npaths, stream,
                                                    options.mc);
            RatioPoint p;
            p.grid_index = static_cast<int>(g);
            p.t = t;
            p.ratio = e.mean / psi0;
            p.std_error = e.std_error / psi0;
            report.omega = std::max(report.omega, std::log(p.ratio) / t);
            report.points.push_back(p);
        }
    }
    for (auto& p : report.points) {
        const double rel = p.ratio > 0.0 ? p.std_error / p.ratio : 0.0;
        p.violation = !std::isfinite(p.ratio) || p.ratio > std::exp(report.omega * p.t) * (1.0 + 3.0 * rel);
        if (p.violation) ++report.violations;
    }
    return report;
}

} // namespace nvsplit
