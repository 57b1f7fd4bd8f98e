#pragma once

#include "nvsplit/models.hpp"

namespace nvsplit {

/// Fixed-step fourth-order integration of the split substeps.
struct FlowConfig {
    int substeps = 4;            // internal integrator steps per substep call
    bool use_exact_flows = true; // honour closed-form flows supplied by the model

    void validate() const;
};

/// Substep propagators with reusable scratch space. One instance per worker;
/// the model must outlive it.
class FlowEvaluator {
public:
    FlowEvaluator(const SplitModel& model, FlowConfig cfg);

    const SplitModel& model() const noexcept { return *model_; }
    const FlowConfig& config() const noexcept { return cfg_; }

    /// Flow of z' = Az + alpha_0(z) over dt >= 0.
    ///
    /// Integrated in the moving frame y(t) = exp(-tA) z(t), where the linear part
    /// drops out and y' = exp(-tA) alpha_0(exp(tA) y). Classical RK4 on y, mapped
    /// back by exp(h A), only ever needs exp(cA) with c >= 0, so the same
    /// recurrence works for non-invertible semigroups like the forward shift.
    void drift(double dt, const Vector& x, Vector& out);

    /// Fl^{sigma_j}_w(x) for signed w; j is zero-based.
    void diffusion(int j, double w, const Vector& x, Vector& out);

private:
    void lawson_rk4_step(double h, Vector& u);
    void semigroup(double t, const Vector& x, Vector& out);

    const SplitModel* model_;
    FlowConfig cfg_;
    CorrectedDrift corrected_;
    Vector half_, tmp_, stage_, n1_, n2_, n3_, n4_;
    Vector k1_, k2_, k3_, k4_;
};

Vector drift_flow(const SplitModel& m, const FlowConfig& cfg, double dt, const Vector& x);
Vector diffusion_flow(const SplitModel& m, const FlowConfig& cfg, int j, double w, const Vector& x);

} // namespace nvsplit
