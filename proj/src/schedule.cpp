#include "addsr/schedule.hpp"

#include <cmath>
#include <cstdlib>

namespace addsr {

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > T) throw std::out_of_range("NoiseSchedule::beta: timestep out of range");
    return betas[static_cast<std::size_t>(t) - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    if (t < 1 || t > T) throw std::out_of_range("NoiseSchedule::alpha_bar: timestep out of range");
    return alpha_bars[static_cast<std::size_t>(t) - 1];
}

NoiseSchedule build_schedule(int T, double beta_start, double beta_end) {
    require(T >= 1, "build_schedule: T must be positive");
    require(beta_start > 0.0 && beta_start < 1.0, "build_schedule: beta_start outside (0,1)");
    require(beta_end > 0.0 && beta_end < 1.0, "build_schedule: beta_end outside (0,1)");
    require(beta_start <= beta_end, "build_schedule: beta_start must be <= beta_end");

    NoiseSchedule s;
    s.T = T;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.betas.resize(T);
    s.alpha_bars.resize(T);
    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(i) / (T - 1);
        s.betas[i] = beta_start + (beta_end - beta_start) * frac;
        prod *= 1.0 - s.betas[i];
        s.alpha_bars[i] = prod;
    }
    return s;
}

int StudentTimestepSet::anchor_for_step(int p) const {
    if (p < 1 || p > num_steps()) throw std::out_of_range("anchor_for_step: step index out of range");
    return anchors[static_cast<std::size_t>(p) - 1];
}

StudentTimestepSet make_student_timesteps(const std::vector<int>& anchors, int T) {
    require(!anchors.empty(), "student timesteps: need at least one anchor");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        require(anchors[i] >= 1 && anchors[i] <= T, "student timesteps: anchor outside [1, T]");
        if (i > 0) require(anchors[i] < anchors[i - 1], "student timesteps: anchors must be strictly decreasing");
    }
    if (anchors.size() >= 2) {
        const int spacing = anchors[0] - anchors[1];
        for (std::size_t i = 1; i + 1 < anchors.size(); ++i)
            require(anchors[i] - anchors[i + 1] == spacing, "student timesteps: anchors must be uniformly spaced");
    }
    StudentTimestepSet sts;
    sts.anchors = anchors;
    for (std::size_t i = 0; i < anchors.size(); ++i)
        sts.step_of[anchors[i]] = static_cast<int>(i) + 1;
    return sts;
}

StudentTimestepSet default_student_timesteps() {
    return make_student_timesteps({999, 749, 499, 249}, 1000);
}

int project_step(int s, const StudentTimestepSet& sts) {
    const auto it = sts.step_of.find(s);
    if (it == sts.step_of.end())
        throw std::domain_error("project_step: timestep " + std::to_string(s) + " is not a student anchor");
    return it->second;
}

} // namespace addsr
