#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "addsr/schedule.hpp"
#include "addsr/tensor.hpp"

namespace addsr {

enum class WeightingForm { Exponential, Linear };

WeightingForm weighting_form_from_string(const std::string& s);
std::string to_string(WeightingForm f);

// Parameters of the timestep-adaptive weighting d(s,t) plus the adversarial
// balance weight. Only the fields of the selected form are consulted.
struct WeightingParams {
    WeightingForm form = WeightingForm::Exponential;
    double mu = 0.5, nu = 2.1;     // exponential form
    double gamma = 0.4, kappa = 0.5; // linear form
    double lambda = 0.02;

    void validate() const {
        if (form == WeightingForm::Exponential)
            require(mu > 0.0 && nu > 0.0, "weighting: mu and nu must be positive");
        else
            require(gamma >= 0.0 && kappa >= 0.0, "weighting: gamma and kappa must be non-negative");
        require(lambda >= 0.0, "weighting: lambda must be non-negative");
    }

    // Presets: "perception" (mu=0.5, nu=2.1) and "fidelity" (mu=0.7, nu=2.1).
    static WeightingParams preset(const std::string& name);
};

// Per-step factor of d(s,t): mu*nu^(p-1) or gamma*p + kappa.
double weighting_step_factor(int p, const WeightingParams& wp);

// d(s, t) = sqrt(alpha_bar_t) * step_factor(p(s)).
double weight_d(int s, int t, const NoiseSchedule& sched, const StudentTimestepSet& sts,
                const WeightingParams& wp);

// lambda / d(s, t).
double weighting_ratio(int s, int t, const NoiseSchedule& sched, const StudentTimestepSet& sts,
                       const WeightingParams& wp);

// d * MSE(student_x0, teacher_x0). The teacher estimate is a constant target;
// no gradient flows into it.
template <typename S>
double ta_distill_loss(const TensorT<S>& student_x0, const TensorT<S>& teacher_x0, double d) {
    require(student_x0.same_shape(teacher_x0), "ta_distill_loss: shape mismatch");
    return d * mean_squared_error(student_x0, teacher_x0);
}

struct AdvLosses {
    double g_loss = 0.0; // -logit_fake
    double d_loss = 0.0; // hinge: max(0,1-logit_real) + max(0,1+logit_fake)
};

AdvLosses adversarial_losses(double logit_real, double logit_fake);

// L = dis + lambda * g_adv.
double total_loss(double dis, double g_adv, const WeightingParams& wp);

} // namespace addsr
