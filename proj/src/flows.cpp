#include "nvsplit/flows.hpp"

#include <cmath>

namespace nvsplit {

void FlowConfig::validate() const
{
    if (substeps < 1) throw ConfigError("flow substeps must be >= 1");
}

FlowEvaluator::FlowEvaluator(const SplitModel& model, FlowConfig cfg)
    : model_(&model), cfg_(cfg), corrected_(model)
{
    cfg_.validate();
    const int n = model.dim;
    for (Vector* v : {&half_, &tmp_, &stage_, &n1_, &n2_, &n3_, &n4_, &k1_, &k2_, &k3_, &k4_}) v->resize(n);
}

void FlowEvaluator::semigroup(double t, const Vector& x, Vector& out) { apply_A_semigroup_into(*model_, t, x, out); }

void FlowEvaluator::lawson_rk4_step(double h, Vector& u)
{
    const double hh = 0.5 * h;
    corrected_(u, n1_);

    tmp_ = u + hh * n1_;
    semigroup(hh, tmp_, stage_);  // U2 = S(h/2)(u + h/2 n1)
    corrected_(stage_, n2_);

    semigroup(hh, u, half_);      // S(h/2) u
    stage_ = half_ + hh * n2_;    // U3
    corrected_(stage_, n3_);

    tmp_ = half_ + h * n3_;
    semigroup(hh, tmp_, stage_);  // U4 = S(h/2)(S(h/2)u + h n3)
    corrected_(stage_, n4_);

    // u+ = S(h/2)[S(h/2)(u + h/6 n1) + h/3 (n2 + n3)] + h/6 n4
    tmp_ = u + (h / 6.0) * n1_;
    semigroup(hh, tmp_, stage_);
    stage_ += (h / 3.0) * (n2_ + n3_);
    semigroup(hh, stage_, u);
    u += (h / 6.0) * n4_;
}

void FlowEvaluator::drift(double dt, const Vector& x, Vector& out)
{
    if (dt < 0.0) throw ArgumentError("drift flow time must be >= 0");
    if (dt == 0.0) {
        out = x;
        return;
    }
    if (cfg_.use_exact_flows && model_->exact_drift_flow) {
        model_->exact_drift_flow(dt, x, out);
    } else {
        out = x;
        const double h = dt / cfg_.substeps;
        for (int i = 0; i < cfg_.substeps; ++i) lawson_rk4_step(h, out);
    }
    if (!all_finite(out)) throw OverflowError("drift substep");
}

void FlowEvaluator::diffusion(int j, double w, const Vector& x, Vector& out)
{
    if (j < 0 || j >= model_->noise_dim())
        throw ArgumentError("diffusion index " + std::to_string(j + 1) + " outside 1.." +
                            std::to_string(model_->noise_dim()));
    if (w == 0.0) {
        out = x;
        return;
    }
    if (cfg_.use_exact_flows && model_->has_exact_diffusion_flow(j)) {
        model_->exact_diffusion_flows[j](w, x, out);
    } else {
        // Fl^{sigma}_{-w} = Fl^{-sigma}_{w}: integrate the sign-adjusted field forward.
        const double sign = w < 0.0 ? -1.0 : 1.0;
        const double h = std::abs(w) / cfg_.substeps;
        const auto& field = model_->diffusions[j];
        out = x;
        for (int i = 0; i < cfg_.substeps; ++i) {
            field(out, k1_);
            stage_ = out + (0.5 * h * sign) * k1_;
            field(stage_, k2_);
            stage_ = out + (0.5 * h * sign) * k2_;
            field(stage_, k3_);
            stage_ = out + (h * sign) * k3_;
            field(stage_, k4_);
            out += (h * sign / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
        }
    }
    if (!all_finite(out)) throw OverflowError("diffusion substep " + std::to_string(j + 1));
}

Vector drift_flow(const SplitModel& m, const FlowConfig& cfg, double dt, const Vector& x)
{
    if (x.size() != m.dim) throw ArgumentError("drift_flow: dimension mismatch");
    FlowEvaluator eval(m, cfg);
    Vector out(m.dim);
    eval.drift(dt, x, out);
    return out;
}

Vector diffusion_flow(const SplitModel& m, const FlowConfig& cfg, int j, double w, const Vector& x)
{
    if (x.size() != m.dim) throw ArgumentError("diffusion_flow: dimension mismatch");
    FlowEvaluator eval(m, cfg);
    Vector out(m.dim);
    eval.diffusion(j, w, x, out);
    return out;
}

} // namespace nvsplit
