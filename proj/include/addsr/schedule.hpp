#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "addsr/common.hpp"
#include "addsr/tensor.hpp"

namespace addsr {

// Forward-diffusion schedule: per-timestep beta_t and cumulative alpha_bar_t.
// Timesteps are 1-indexed; alpha_bar(0) == 1 for boundary formulas.
struct NoiseSchedule {
    int T = 0;
    double beta_start = 0.0, beta_end = 0.0;
    std::vector<double> betas;      // betas[t-1] = beta_t
    std::vector<double> alpha_bars; // alpha_bars[t-1] = prod_{i<=t}(1-beta_i)

    double beta(int t) const;      // t in [1, T]
    double alpha_bar(int t) const; // t in [0, T]; alpha_bar(0) == 1
};

// Linear beta schedule from beta_start to beta_end over T steps.
NoiseSchedule build_schedule(int T, double beta_start, double beta_end);

// The four student anchor timesteps and the projection p(s) to inference-step
// indices 1..n. Anchors are strictly decreasing and uniformly spaced; the
// largest anchor maps to step 1.
struct StudentTimestepSet {
    std::vector<int> anchors;        // strictly decreasing
    std::map<int, int> step_of;      // anchor -> inference step in 1..n

    int num_steps() const { return static_cast<int>(anchors.size()); }
    int anchor_for_step(int p) const; // p in [1, n]
};

StudentTimestepSet make_student_timesteps(const std::vector<int>& anchors, int T);
StudentTimestepSet default_student_timesteps(); // {999, 749, 499, 249}

int project_step(int s, const StudentTimestepSet& sts);

// x_s = sqrt(abar)*x0 + sqrt(1-abar)*eps, with the coefficient arithmetic in
// double to keep the round trip with predict_x0 tight in float storage.
template <typename S>
TensorT<S> forward_diffuse_coeff(const TensorT<S>& x0, double alpha_bar, const TensorT<S>& eps) {
    require(x0.same_shape(eps), "forward_diffuse: eps shape must equal x0 shape");
    require(alpha_bar >= 0.0 && alpha_bar <= 1.0, "forward_diffuse: alpha_bar outside [0,1]");
    const double a = std::sqrt(alpha_bar);
    const double b = std::sqrt(1.0 - alpha_bar);
    TensorT<S> out(x0.c, x0.h, x0.w);
    for (std::size_t i = 0; i < x0.v.size(); ++i)
        out.v[i] = static_cast<S>(a * static_cast<double>(x0.v[i]) + b * static_cast<double>(eps.v[i]));
    return out;
}

template <typename S>
TensorT<S> forward_diffuse(const TensorT<S>& x0, int s, const TensorT<S>& eps, const NoiseSchedule& sched) {
    if (s < 1 || s > sched.T) throw std::out_of_range("forward_diffuse: timestep out of range");
    return forward_diffuse_coeff(x0, sched.alpha_bar(s), eps);
}

// x0_hat = (x_s - sqrt(1-abar)*eps_hat) / sqrt(abar). Exact inverse of
// forward_diffuse when eps_hat equals the true noise.
template <typename S>
TensorT<S> predict_x0_coeff(const TensorT<S>& x_s, double alpha_bar, const TensorT<S>& eps_hat) {
    require(x_s.same_shape(eps_hat), "predict_x0: eps_hat shape must equal x_s shape");
    if (!(alpha_bar > 0.0))
        throw std::domain_error("predict_x0: alpha_bar must be positive (invalid terminal timestep)");
    const double a = std::sqrt(alpha_bar);
    const double b = std::sqrt(1.0 - alpha_bar);
    TensorT<S> out(x_s.c, x_s.h, x_s.w);
    for (std::size_t i = 0; i < x_s.v.size(); ++i)
        out.v[i] = static_cast<S>((static_cast<double>(x_s.v[i]) - b * static_cast<double>(eps_hat.v[i])) / a);
    return out;
}

template <typename S>
TensorT<S> predict_x0(const TensorT<S>& x_s, int s, const TensorT<S>& eps_hat, const NoiseSchedule& sched) {
    if (s < 1 || s > sched.T) throw std::out_of_range("predict_x0: timestep out of range");
    return predict_x0_coeff(x_s, sched.alpha_bar(s), eps_hat);
}

} // namespace addsr
