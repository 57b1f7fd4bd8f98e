#pragma once

#include "nvsplit/splitting.hpp"
#include "nvsplit/weighted_space.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nvsplit {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Where a family of per-path streams lives: (seed, tag, grid index); the
/// path index completes the Philox counter.
struct StreamAddress {
    std::uint64_t seed = 0;
    std::uint32_t tag = 0;
    std::uint32_t grid = 0;
};

struct McOptions {
    int workers = 1;
    /// Pair path 2k+1 with path 2k: negated Gaussian increments and mirrored
    /// branch coin. The standard error is then computed from pair means.
    bool antithetic = false;
};

/// Sample mean and standard error of f over npaths terminal states.
Estimate estimate_expectation(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s,
                              const PayoffSpec& payoff, double T, int nsteps, const Vector& x0, long npaths,
                              const StreamAddress& stream, const McOptions& options = {});

enum class ReferenceKind { ExactOracle, FineNv };

/// Independent: the reference is its own NV run with paths_factor x paths.
/// Coupled: the reference NV path and the scheme path share one Brownian
/// path (coarse increments are sums of the fine ones) and the weak error is
/// estimated from pathwise payoff differences.
enum class Coupling { Independent, Coupled };

struct ReferencePolicy {
    ReferenceKind kind = ReferenceKind::ExactOracle;
    int factor = 8;         // fine NV uses finest_steps * factor steps
    int paths_factor = 10;  // and npaths * paths_factor paths (independent mode)
    Coupling coupling = Coupling::Independent;
    /// When the exact oracle is preferred but the model lacks one, fall back to fine NV.
    bool fallback_to_fine_nv = true;
};

/// P_T f(x0) for the weak-error comparison: (exact, 0) from the oracle or a
/// fine NV Monte Carlo estimate.
Estimate reference_value(const SplitModel& m, const PayoffSpec& payoff, double T, const Vector& x0,
                         const FlowConfig& cfg, const ReferencePolicy& policy, int finest_steps, long npaths,
                         const StreamAddress& stream, const McOptions& options = {});

enum class Evaluation { Auto, MonteCarlo, Affine };

/// Everything that stays fixed across the levels of a convergence study.
struct StudySetup {
    const SplitModel* model = nullptr;
    FlowConfig flow;
    PayoffSpec payoff;
    WeightFunction weight = WeightFunction::polynomial(2.0);
    double T = 1.0;
    std::vector<Vector> grid;
    ReferencePolicy reference;
    Evaluation evaluation = Evaluation::Auto;
    long npaths = 10000;
    std::uint64_t seed = 0;
    McOptions mc;
    int finest_steps = 1; // sets the fine NV reference step count

    int reference_steps() const { return finest_steps * reference.factor; }
    /// True when scheme and reference are evaluated by affine moment propagation.
    bool uses_affine() const;
};

struct GridPointError {
    int grid_index = 0;
    double reference = 0.0;
    double estimate = 0.0;
    double raw_error = 0.0;      // estimate - reference
    double weighted_error = 0.0; // |raw_error| / psi(x0)
    double std_error = 0.0;      // of raw_error
    double weighted_std_error = 0.0;
};

struct WeakErrorResult {
    std::vector<GridPointError> points;
    double error = 0.0;       // max weighted error over the grid
    double std_error = 0.0;   // max weighted standard error over the grid
    double max_raw_std_error = 0.0;
    int argmax = 0;
    bool exact_evaluation = false;
};

/// Reference values (or coupled reference samples) per grid point, computed
/// once and shared by every scheme and level of a study.
class ReferenceCache {
public:
    explicit ReferenceCache(const StudySetup& setup) : setup_(&setup) {}

    const Estimate& value(int grid_index);
    /// Per-path reference payoffs for the coupled mode.
    const std::vector<double>& coupled_samples(int grid_index);

private:
    const StudySetup* setup_;
    std::vector<std::optional<Estimate>> values_;
    std::vector<std::vector<double>> samples_;
};

/// ||P_T f - Q^n f||_psi over the grid, with the argmax point recorded.
WeakErrorResult weighted_weak_error(const StudySetup& setup, const SchemeSpec& scheme, int nsteps,
                                    ReferenceCache& cache);

/// A resolved convergence level needs standard error <= threshold * error.
struct LevelResult {
    std::string scheme;
    int nsteps = 0;
    double dt = 0.0;
    WeakErrorResult error;
    bool resolved = false;
};

struct SlopeFit {
    std::string scheme;
    double slope = 0.0;
    double residual = 0.0;
    std::vector<int> levels_used;
    bool exact = false;      // all errors at machine precision; slope undefined
    bool conclusive = false; // exact, or at least 3 resolved levels
};

struct ErrorReport {
    std::vector<LevelResult> levels;
    std::vector<SlopeFit> fits;
    double wall_clock_seconds = 0.0;

    const SlopeFit& fit(const std::string& scheme) const;
    /// Throws InconclusiveError naming the schemes without a usable fit.
    void require_conclusive() const;
};

struct ExperimentConfig {
    SplitModel model;
    std::vector<SchemeSpec> schemes;
    PayoffSpec payoff;
    WeightFunction weight = WeightFunction::polynomial(2.0);
    double T = 1.0;
    std::vector<int> steps;
    long npaths = 10000;
    std::vector<Vector> grid;
    std::uint64_t seed = 0;
    ReferencePolicy reference;
    Evaluation evaluation = Evaluation::Auto;
    FlowConfig flow;
    McOptions mc;
    double resolution_threshold = 0.3;
    double exactness_tolerance = 1e-12;

    void validate() const;
    StudySetup setup() const;
};

/// Least-squares slope of log(error) against log(dt); returns {slope, rms residual}.
std::pair<double, double> fit_log_slope(const std::vector<double>& dts, const std::vector<double>& errors);

ErrorReport convergence_study(const ExperimentConfig& config);

struct RatioPoint {
    int grid_index = 0;
    double t = 0.0;
    double ratio = 0.0;  // E[psi(x(t, x0))] / psi(x0)
    double std_error = 0.0; // of ratio
    bool violation = false;
};

struct SupermartingaleReport {
    double omega = 0.0;
    std::vector<RatioPoint> points;
    int violations = 0;
};

struct SupermartingaleOptions {
    std::vector<double> timepoints{0.1, 0.5, 1.0};
    int steps_per_unit = 64; // NV steps per unit time for each timepoint
    long npaths = 10000;
    std::uint64_t seed = 0;
    McOptions mc;
};

/// Estimates r(t, x0) = E[psi(x(t,x0))] / psi(x0), fits omega = max log(r) / t
/// and flags points with r > exp(omega t) (1 + 3 relative standard error).
SupermartingaleReport supermartingale_check(const SplitModel& m, const FlowConfig& cfg, const WeightFunction& weight,
                                            double T, const std::vector<Vector>& grid,
                                            const SupermartingaleOptions& options);

} // namespace nvsplit
