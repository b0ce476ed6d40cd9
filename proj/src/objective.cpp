#include "addsr/objective.hpp"

namespace addsr {

WeightingForm weighting_form_from_string(const std::string& s) {
    if (s == "exponential") return WeightingForm::Exponential;
    if (s == "linear") return WeightingForm::Linear;
    throw ConfigError("unknown weighting form: " + s);
}

std::string to_string(WeightingForm f) {
    return f == WeightingForm::Exponential ? "exponential" : "linear";
}

WeightingParams WeightingParams::preset(const std::string& name) {
    WeightingParams wp;
    if (name == "perception") {
        wp.mu = 0.5;
        wp.nu = 2.1;
    } else if (name == "fidelity") {
        wp.mu = 0.7;
        wp.nu = 2.1;
    } else {
        throw ConfigError("unknown weighting preset: " + name);
    }
    return wp;
}

double weighting_step_factor(int p, const WeightingParams& wp) {
    wp.validate();
    if (wp.form == WeightingForm::Exponential) return wp.mu * std::pow(wp.nu, p - 1);
    return wp.gamma * p + wp.kappa;
}

double weight_d(int s, int t, const NoiseSchedule& sched, const StudentTimestepSet& sts,
                const WeightingParams& wp) {
    const int p = project_step(s, sts); // throws on non-anchor s
    if (t < 1 || t > sched.T) throw std::out_of_range("weight_d: teacher timestep out of range");
    return std::sqrt(sched.alpha_bar(t)) * weighting_step_factor(p, wp);
}

double weighting_ratio(int s, int t, const NoiseSchedule& sched, const StudentTimestepSet& sts,
                       const WeightingParams& wp) {
    return wp.lambda / weight_d(s, t, sched, sts, wp);
}

AdvLosses adversarial_losses(double logit_real, double logit_fake) {
    require(std::isfinite(logit_real) && std::isfinite(logit_fake),
            "adversarial_losses: non-finite logits");
    AdvLosses l;
    l.d_loss = std::max(0.0, 1.0 - logit_real) + std::max(0.0, 1.0 + logit_fake);
    l.g_loss = -logit_fake;
    return l;
}

double total_loss(double dis, double g_adv, const WeightingParams& wp) {
    wp.validate();
    return dis + wp.lambda * g_adv;
}

} // namespace addsr
