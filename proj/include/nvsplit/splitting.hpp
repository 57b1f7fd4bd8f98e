#pragma once

#include "nvsplit/flows.hpp"
#include "nvsplit/rng.hpp"

#include <span>
#include <string>
#include <vector>

namespace nvsplit {

struct Substep {
    enum class Kind { Drift, Diffusion };
    Kind kind = Kind::Drift;
    int diffusion = 0;     // zero-based, only for Kind::Diffusion
    double fraction = 1.0; // substep length is fraction * dt

    static Substep drift(double fraction) { return {Kind::Drift, 0, fraction}; }
    static Substep noise(int j, double fraction = 1.0) { return {Kind::Diffusion, j, fraction}; }
};

struct SchemeBranch {
    double weight = 1.0;
    std::vector<Substep> substeps; // applied left to right to the state
};

/// Convex combination Q_(dt) = sum_b weight_b P^{(i_1)}_{delta_1 dt} ... P^{(i_l)}_{delta_l dt}.
///
/// Operator products act on payoffs, flows act on states: (P^a P^b f)(x) =
/// E[f(z^b(z^a(x)))], so the first operator of a branch is the first flow
/// applied to the path.
struct SchemeSpec {
    std::string name;
    std::vector<SchemeBranch> branches;

    /// P^0 P^1 ... P^d.
    static SchemeSpec euler(int noise_dim);
    /// 1/2 P^0_{dt/2} (P^1 ... P^d + P^d ... P^1) P^0_{dt/2}.
    static SchemeSpec nv(int noise_dim);

    /// Weights must be >= 0 and sum to 1, fractions >= 0, indices < noise_dim,
    /// and each diffusion may appear at most once per branch (its increment is
    /// drawn once per step).
    void validate(int noise_dim) const;
};

/// One-step propagator with preallocated scratch. Not thread safe; use one per worker.
class Stepper {
public:
    Stepper(const SplitModel& model, const FlowConfig& cfg, SchemeSpec scheme);

    const SchemeSpec& scheme() const noexcept { return scheme_; }
    const SplitModel& model() const noexcept { return flows_.model(); }

    /// Branch selected by a uniform draw u in [0, 1).
    int choose_branch(double u) const;

    /// Draws the branch coin (only when there is more than one branch), then
    /// W_1..W_d ~ Normal(0, dt), and advances x in place.
    void step(double dt, Vector& x, RandomStream& rng);

    /// Deterministic step with given branch and increments W_j (variance dt each).
    /// A diffusion substep with fraction delta uses flow time sqrt(delta) W_j.
    void step_with(double dt, Vector& x, int branch, std::span<const double> increments);

private:
    FlowEvaluator flows_;
    SchemeSpec scheme_;
    std::vector<double> cumulative_;
    std::vector<double> increments_;
    Vector next_;
};

Vector step(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s, double dt, const Vector& x,
            RandomStream& rng);

/// (Q_(T/nsteps))^nsteps applied pathwise.
Vector simulate_path(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s, double T, int nsteps,
                     const Vector& x0, RandomStream& rng);

/// One branch of one step of an affine model: x -> linear x + offset + loadings W,
/// with W the vector of step increments (each Normal(0, dt)).
struct AffineStep {
    Matrix linear;
    Vector offset;
    Matrix loadings; // dim x d
};

AffineStep affine_step_map(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s, double dt, int branch);

/// Law parameters of the scheme's terminal state. `gaussian` is true when all
/// branches share one affine map, in which case the law is exactly Normal(mean,
/// covariance); otherwise only the first two moments are exact.
struct MomentState {
    Vector mean;
    Matrix covariance;
    bool gaussian = true;
};

MomentState propagate_moments_affine(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s, double T,
                                     int nsteps, const Vector& x0);

/// E[f] for a polynomial payoff under the propagated law. Degrees 3 and 4
/// need a Gaussian law.
double affine_expectation(const MomentState& law, const PayoffSpec& payoff);

} // namespace nvsplit
