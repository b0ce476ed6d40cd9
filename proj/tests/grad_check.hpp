#pragma once

// Test-side finite-difference utilities. Per-parameter checks run on the
// double instantiation of the layer templates (central differences at
// h=1e-3 cannot resolve a 1e-3 relative tolerance through a float32 forward
// pass); a directional check covers the float instantiation.

#include <cmath>
#include <functional>

#include "addsr/nn.hpp"
#include "addsr/rng.hpp"

namespace gradtest {

struct CheckStats {
    int checked = 0;
    int failed = 0;
    double worst_rel = 0.0;
};

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-10});
    return std::abs(a - b) / denom;
}

// Central finite differences over every element of every parameter against
// the already-computed analytic gradients.
template <typename S>
CheckStats check_all_params(const addsr::ParamRefs<S>& params, const addsr::GradsT<S>& analytic,
                            const std::function<double()>& loss, double h, double tol,
                            double abs_floor = 1e-9) {
    CheckStats st;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& w = params[pi]->w;
        for (std::size_t j = 0; j < w.size(); ++j) {
            const S saved = w[j];
            w[j] = saved + static_cast<S>(h);
            const double lp = loss();
            w[j] = saved - static_cast<S>(h);
            const double lm = loss();
            w[j] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = static_cast<double>(analytic.g[pi][j]);
            ++st.checked;
            if (std::abs(fd - an) <= abs_floor) continue;
            const double re = rel_err(fd, an);
            st.worst_rel = std::max(st.worst_rel, re);
            if (re > tol) ++st.failed;
        }
    }
    return st;
}

// Directional derivative check: compare (L(w+hv)-L(w-hv))/2h against <g, v>
// for a random unit direction v over all parameters.
template <typename S>
double directional_check(const addsr::ParamRefs<S>& params, const addsr::GradsT<S>& analytic,
                         const std::function<double()>& loss, double h, addsr::Rng& rng) {
    std::vector<std::vector<double>> dir(params.size());
    double norm = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        dir[pi].resize(params[pi]->w.size());
        for (auto& d : dir[pi]) {
            d = rng.normal();
            norm += d * d;
        }
    }
    norm = std::sqrt(norm);
    double dot = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi)
        for (std::size_t j = 0; j < dir[pi].size(); ++j) {
            dir[pi][j] /= norm;
            dot += dir[pi][j] * static_cast<double>(analytic.g[pi][j]);
        }

    std::vector<std::vector<S>> saved(params.size());
    for (std::size_t pi = 0; pi < params.size(); ++pi) saved[pi] = params[pi]->w;

    for (std::size_t pi = 0; pi < params.size(); ++pi)
        for (std::size_t j = 0; j < dir[pi].size(); ++j)
            params[pi]->w[j] = saved[pi][j] + static_cast<S>(h * dir[pi][j]);
    const double lp = loss();
    for (std::size_t pi = 0; pi < params.size(); ++pi)
        for (std::size_t j = 0; j < dir[pi].size(); ++j)
            params[pi]->w[j] = saved[pi][j] - static_cast<S>(h * dir[pi][j]);
    const double lm = loss();
    for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->w = saved[pi];

    const double fd = (lp - lm) / (2.0 * h);
    return rel_err(fd, dot);
}

} // namespace gradtest
