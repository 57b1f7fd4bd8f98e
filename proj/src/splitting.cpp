#include "nvsplit/splitting.hpp"

#include <cmath>
#include <set>

namespace nvsplit {

SchemeSpec SchemeSpec::euler(int noise_dim)
{
    SchemeBranch branch;
    branch.substeps.push_back(Substep::drift(1.0));
    for (int j = 0; j < noise_dim; ++j) branch.substeps.push_back(Substep::noise(j));
    return {"euler", {branch}};
}

SchemeSpec SchemeSpec::nv(int noise_dim)
{
    SchemeBranch forward{0.5, {Substep::drift(0.5)}};
    SchemeBranch reverse{0.5, {Substep::drift(0.5)}};
    for (int j = 0; j < noise_dim; ++j) forward.substeps.push_back(Substep::noise(j));
    for (int j = noise_dim - 1; j >= 0; --j) reverse.substeps.push_back(Substep::noise(j));
    forward.substeps.push_back(Substep::drift(0.5));
    reverse.substeps.push_back(Substep::drift(0.5));
    return {"nv", {forward, reverse}};
}

void SchemeSpec::validate(int noise_dim) const
{
    if (branches.empty()) throw ConfigError("scheme '" + name + "' has no branches");
    double total = 0.0;
    for (std::size_t b = 0; b < branches.size(); ++b) {
        const auto& branch = branches[b];
        const std::string where = "scheme '" + name + "' branch " + std::to_string(b);
        if (!(branch.weight >= 0.0)) throw ConfigError(where + ": weight must be >= 0");
        total += branch.weight;
        std::set<int> seen;
        for (const auto& sub : branch.substeps) {
            if (!(sub.fraction >= 0.0)) throw ConfigError(where + ": substep fractions must be >= 0");
            if (sub.kind == Substep::Kind::Diffusion) {
                if (sub.diffusion < 0 || sub.diffusion >= noise_dim)
                    throw ConfigError(where + ": diffusion " + std::to_string(sub.diffusion + 1) +
                                      " not in 1.." + std::to_string(noise_dim));
                if (!seen.insert(sub.diffusion).second)
                    throw ConfigError(where + ": diffusion " + std::to_string(sub.diffusion + 1) +
                                      " referenced twice");
            }
        }
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("scheme '" + name + "': branch weights sum to " + std::to_string(total) + ", not 1");
}

Stepper::Stepper(const SplitModel& model, const FlowConfig& cfg, SchemeSpec scheme)
    : flows_(model, cfg), scheme_(std::move(scheme)), increments_(model.noise_dim()), next_(model.dim)
{
    scheme_.validate(model.noise_dim());
    double acc = 0.0;
    for (const auto& b : scheme_.branches) cumulative_.push_back(acc += b.weight);
    cumulative_.back() = 1.0;
}

int Stepper::choose_branch(double u) const
{
    for (std::size_t b = 0; b + 1 < cumulative_.size(); ++b)
        if (u < cumulative_[b]) return static_cast<int>(b);
    return static_cast<int>(cumulative_.size()) - 1;
}

void Stepper::step(double dt, Vector& x, RandomStream& rng)
{
    const int branch = scheme_.branches.size() > 1 ? choose_branch(rng.uniform()) : 0;
    const double scale = std::sqrt(dt);
    for (auto& w : increments_) w = scale * rng.normal();
    step_with(dt, x, branch, increments_);
}

void Stepper::step_with(double dt, Vector& x, int branch, std::span<const double> increments)
{
    if (!(dt > 0.0)) throw ArgumentError("step size must be > 0");
    if (static_cast<int>(increments.size()) != model().noise_dim())
        throw ArgumentError("expected " + std::to_string(model().noise_dim()) + " increments");
    for (const auto& sub : scheme_.branches.at(branch).substeps) {
        if (sub.kind == Substep::Kind::Drift) {
            flows_.drift(sub.fraction * dt, x, next_);
        } else {
            const double w = sub.fraction == 1.0 ? increments[sub.diffusion]
                                                 : std::sqrt(sub.fraction) * increments[sub.diffusion];
            flows_.diffusion(sub.diffusion, w, x, next_);
        }
        x.swap(next_);
    }
}

Vector step(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s, double dt, const Vector& x,
            RandomStream& rng)
{
    if (x.size() != m.dim) throw ArgumentError("step: dimension mismatch");
    Stepper stepper(m, cfg, s);
    Vector state = x;
    stepper.step(dt, state, rng);
    return state;
}

Vector simulate_path(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s, double T, int nsteps,
                     const Vector& x0, RandomStream& rng)
{
    if (!(T > 0.0)) throw ArgumentError("horizon T must be > 0");
    if (nsteps < 1) throw ArgumentError("nsteps must be >= 1");
    if (x0.size() != m.dim) throw ArgumentError("simulate_path: dimension mismatch");
    Stepper stepper(m, cfg, s);
    Vector state = x0;
    const double dt = T / nsteps;
    for (int n = 0; n < nsteps; ++n) {
        try {
            stepper.step(dt, state, rng);
        } catch (const OverflowError& e) {
            throw e.with_step(n);
        }
    }
    return state;
}

AffineStep affine_step_map(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s, double dt, int branch)
{
    if (!m.affine) throw CapabilityError(m.name + " is not flagged affine");
    s.validate(m.noise_dim());
    if (branch < 0 || branch >= static_cast<int>(s.branches.size())) throw ArgumentError("branch index out of range");
    if (!(dt > 0.0)) throw ArgumentError("step size must be > 0");

    const int n = m.dim;
    const int d = m.noise_dim();
    FlowEvaluator flows(m, cfg);
    AffineStep map{Matrix::Identity(n, n), Vector::Zero(n), Matrix::Zero(n, d)};
    const Vector zero = Vector::Zero(n);
    Vector probe(n), image(n), base(n);

    for (const auto& sub : s.branches[branch].substeps) {
        if (sub.kind == Substep::Kind::Drift) {
            const double t = sub.fraction * dt;
            flows.drift(t, zero, base);
            Matrix local(n, n);
            for (int i = 0; i < n; ++i) {
                probe = zero;
                probe[i] = 1.0;
                flows.drift(t, probe, image);
                local.col(i) = image - base;
            }
            map.linear = local * map.linear;
            map.offset = local * map.offset + base;
            map.loadings = local * map.loadings;
        } else {
            // Additive field: Fl_w(x) = x + w c with c = Fl_1(0).
            flows.diffusion(sub.diffusion, 1.0, zero, image);
            map.loadings.col(sub.diffusion) += std::sqrt(sub.fraction) * image;
        }
    }
    return map;
}

MomentState propagate_moments_affine(const SplitModel& m, const FlowConfig& cfg, const SchemeSpec& s, double T,
                                     int nsteps, const Vector& x0)
{
    if (!(T > 0.0)) throw ArgumentError("horizon T must be > 0");
    if (nsteps < 1) throw ArgumentError("nsteps must be >= 1");
    if (x0.size() != m.dim) throw ArgumentError("propagate_moments_affine: dimension mismatch");
    const double dt = T / nsteps;

    std::vector<AffineStep> maps;
    for (std::size_t b = 0; b < s.branches.size(); ++b) maps.push_back(affine_step_map(m, cfg, s, dt, static_cast<int>(b)));

    bool single = true;
    for (std::size_t b = 1; b < maps.size() && single; ++b) {
        const auto& a = maps.front();
        const auto& c = maps[b];
        const double tol = 1e-14;
        single = (a.linear - c.linear).cwiseAbs().maxCoeff() <= tol * (1.0 + a.linear.cwiseAbs().maxCoeff()) &&
                 (a.offset - c.offset).cwiseAbs().maxCoeff() <= tol * (1.0 + a.offset.cwiseAbs().maxCoeff()) &&
                 (a.loadings - c.loadings).cwiseAbs().maxCoeff() <= tol * (1.0 + a.loadings.cwiseAbs().maxCoeff());
    }

    MomentState law{x0, Matrix::Zero(m.dim, m.dim), true};
    if (single) {
        const auto& map = maps.front();
        const Matrix noise = dt * map.loadings * map.loadings.transpose();
        for (int k = 0; k < nsteps; ++k) {
            law.mean = map.linear * law.mean + map.offset;
            law.covariance = map.linear * law.covariance * map.linear.transpose() + noise;
        }
        return law;
    }

    // Mixture over branches: propagate E[x] and E[x x^T] exactly.
    law.gaussian = false;
    Vector mean = x0;
    Matrix second = x0 * x0.transpose();
    for (int k = 0; k < nsteps; ++k) {
        Vector next_mean = Vector::Zero(m.dim);
        Matrix next_second = Matrix::Zero(m.dim, m.dim);
        for (std::size_t b = 0; b < maps.size(); ++b) {
            const double w = s.branches[b].weight;
            if (w == 0.0) continue;
            const auto& map = maps[b];
            const Vector lm = map.linear * mean;
            next_mean += w * (lm + map.offset);
            Matrix term = map.linear * second * map.linear.transpose();
            term += lm * map.offset.transpose() + map.offset * lm.transpose();
            term += map.offset * map.offset.transpose();
            term += dt * map.loadings * map.loadings.transpose();
            next_second += w * term;
        }
        mean = std::move(next_mean);
        second = std::move(next_second);
    }
    law.mean = mean;
    law.covariance = second - mean * mean.transpose();
    return law;
}

double affine_expectation(const MomentState& law, const PayoffSpec& payoff)
{
    if (!payoff.is_polynomial()) throw CapabilityError("affine evaluation needs a polynomial payoff");
    if (payoff.coordinate < 0 || payoff.coordinate >= law.mean.size())
        throw ArgumentError("payoff coordinate out of range");
    const int degree = payoff.degree();
    if (degree > 4) throw CapabilityError("affine evaluation supports payoff degree <= 4");
    if (degree > 2 && !law.gaussian)
        throw CapabilityError("degree > 2 payoffs need a Gaussian law (branches with identical affine maps)");
    const double mean = law.mean[payoff.coordinate];
    const double var = law.covariance(payoff.coordinate, payoff.coordinate);
    return gaussian_polynomial_expectation(payoff.monomial_coefficients(), mean, var);
}

} // namespace nvsplit
