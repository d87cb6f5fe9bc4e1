#pragma once

// Diffusion noise schedule and the v-parameterized DDIM update.
//
// A schedule is the table beta_t, alpha_bar_t = prod_{s<=t}(1 - beta_s) for
// t = 1..T, with alpha_bar_0 defined as 1. All schedule math is double
// precision; coefficients are computed from the table at call time rather
// than cached, so there is a single source of truth.
//
// The deterministic update toward a target x is
//   z_{t-1} = a_t z_t + b_t x,
//   a_t = sqrt((1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)),
//   b_t = sqrt(alpha_bar_{t-1}) - sqrt(alpha_bar_t) a_t,
// which at t=1 gives a=0, b=1: the last step lands exactly on the target.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lav/tensor.hpp"

namespace lav {

class NoiseSchedule {
public:
    static NoiseSchedule linear(int total_steps, double beta_start, double beta_end) {
        if (total_steps < 1)
            throw std::invalid_argument("NoiseSchedule::linear: total_steps must be >= 1");
        if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
            throw std::invalid_argument(
                "NoiseSchedule::linear: need 0 < beta_start <= beta_end < 1");
        std::vector<double> betas(total_steps);
        for (int i = 0; i < total_steps; ++i) {
            const double u = total_steps == 1 ? 0.0 : static_cast<double>(i) / (total_steps - 1);
            betas[i] = beta_start + u * (beta_end - beta_start);
        }
        return from_betas(std::move(betas));
    }

    static NoiseSchedule from_betas(std::vector<double> betas) {
        if (betas.empty()) throw std::invalid_argument("NoiseSchedule: empty beta table");
        NoiseSchedule s;
        s.betas_ = std::move(betas);
        s.alpha_bars_.resize(s.betas_.size());
        double prod = 1.0;
        for (std::size_t i = 0; i < s.betas_.size(); ++i) {
            const double b = s.betas_[i];
            if (!(b > 0.0) || !(b < 1.0))
                throw std::invalid_argument("NoiseSchedule: beta out of (0,1) at step " +
                                            std::to_string(i + 1));
            prod *= 1.0 - b;
            s.alpha_bars_[i] = prod;
        }
        return s;
    }

    static NoiseSchedule from_alpha_bars(std::vector<double> bars) {
        if (bars.empty()) throw std::invalid_argument("NoiseSchedule: empty alpha_bar table");
        NoiseSchedule s;
        s.alpha_bars_ = std::move(bars);
        s.betas_.resize(s.alpha_bars_.size());
        double prev = 1.0;
        for (std::size_t i = 0; i < s.alpha_bars_.size(); ++i) {
            const double ab = s.alpha_bars_[i];
            if (!(ab > 0.0) || !(ab < prev))
                throw std::invalid_argument(
                    "NoiseSchedule: alpha_bar must be strictly decreasing in (0,1), bad step " +
                    std::to_string(i + 1));
            s.betas_[i] = 1.0 - ab / prev;
            prev = ab;
        }
        return s;
    }

    int total_steps() const { return static_cast<int>(betas_.size()); }

    double beta(int t) const {
        check_step(t);
        return betas_[t - 1];
    }

    // alpha_bar(0) == 1 by definition.
    double alpha_bar(int t) const {
        if (t == 0) return 1.0;
        check_step(t);
        return alpha_bars_[t - 1];
    }

    const std::vector<double>& beta_table() const { return betas_; }
    const std::vector<double>& alpha_bar_table() const { return alpha_bars_; }

    void check_step(int t) const {
        if (t < 1 || t > total_steps())
            throw std::out_of_range("NoiseSchedule: step " + std::to_string(t) +
                                    " outside 1.." + std::to_string(total_steps()));
    }

private:
    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
};

// One forward diffusion step: z_t = sqrt(1-beta_t) z_{t-1} + sqrt(beta_t) eps.
inline VideoTensor forward_step(const VideoTensor& z_prev, int t, const VideoTensor& eps,
                                const NoiseSchedule& sched) {
    sched.check_step(t);
    require_same_shape(z_prev, eps, "forward_step");
    const double b = sched.beta(t);
    VideoTensor out = scale(z_prev, std::sqrt(1.0 - b));
    return axpy(out, std::sqrt(b), eps);
}

// Closed-form jump: z_t = sqrt(alpha_bar_t) z0 + sqrt(1-alpha_bar_t) eps.
inline VideoTensor add_noise(const VideoTensor& z0, int t, const VideoTensor& eps,
                             const NoiseSchedule& sched) {
    sched.check_step(t);
    require_same_shape(z0, eps, "add_noise");
    const double ab = sched.alpha_bar(t);
    VideoTensor out = scale(z0, std::sqrt(ab));
    return axpy(out, std::sqrt(1.0 - ab), eps);
}

// Velocity target: v = sqrt(alpha_bar_t) eps - sqrt(1-alpha_bar_t) z0.
inline VideoTensor v_from(const VideoTensor& z0, const VideoTensor& eps, int t,
                          const NoiseSchedule& sched) {
    sched.check_step(t);
    require_same_shape(z0, eps, "v_from");
    const double ab = sched.alpha_bar(t);
    VideoTensor out = scale(eps, std::sqrt(ab));
    return axpy(out, -std::sqrt(1.0 - ab), z0);
}

// Recover the clean latent: z0 = sqrt(alpha_bar_t) z_t - sqrt(1-alpha_bar_t) v.
inline VideoTensor predict_z0(const VideoTensor& z_t, const VideoTensor& v, int t,
                              const NoiseSchedule& sched) {
    sched.check_step(t);
    require_same_shape(z_t, v, "predict_z0");
    const double ab = sched.alpha_bar(t);
    VideoTensor out = scale(z_t, std::sqrt(ab));
    return axpy(out, -std::sqrt(1.0 - ab), v);
}

// The velocity that would make predict_z0 return `target`; inverse of
// predict_z0 in its v argument. Well-defined because alpha_bar_t < 1 for t>=1.
inline VideoTensor v_from_target(const VideoTensor& z_t, const VideoTensor& target, int t,
                                 const NoiseSchedule& sched) {
    sched.check_step(t);
    require_same_shape(z_t, target, "v_from_target");
    const double ab = sched.alpha_bar(t);
    const double root = std::sqrt(1.0 - ab);
    VideoTensor out = scale(z_t, std::sqrt(ab) / root);
    return axpy(out, -1.0 / root, target);
}

struct DdimStepCoeffs {
    double a = 0.0;
    double b = 0.0;
};

inline DdimStepCoeffs ddim_coeffs(int t, const NoiseSchedule& sched) {
    sched.check_step(t);
    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t - 1);
    DdimStepCoeffs c;
    c.a = std::sqrt((1.0 - ab_prev) / (1.0 - ab_t));
    c.b = std::sqrt(ab_prev) - std::sqrt(ab_t) * c.a;
    return c;
}

// Deterministic update toward the given clean-latent target.
inline VideoTensor ddim_step(const VideoTensor& z_t, const VideoTensor& target, int t,
                             const NoiseSchedule& sched) {
    require_same_shape(z_t, target, "ddim_step");
    const DdimStepCoeffs c = ddim_coeffs(t, sched);
    VideoTensor out = scale(z_t, c.a);
    return axpy(out, c.b, target);
}

// Resample a run schedule out of a master schedule: `total_steps` entries of
// the master table, of which the first `steps` are evenly spaced between the
// clean end and the master index whose alpha_bar is closest to
// `start_alpha_bar`, and the remainder (if any) continue on to the noisy end
// of the master table. A denoising loop then walks the result with plain
// t -> t-1 updates.
inline NoiseSchedule make_run_schedule(const NoiseSchedule& master, int steps,
                                       double start_alpha_bar, int total_steps = 0) {
    if (total_steps == 0) total_steps = steps;
    if (steps < 1 || total_steps < steps)
        throw std::invalid_argument("make_run_schedule: need 1 <= steps <= total_steps");
    if (!(start_alpha_bar > 0.0) || !(start_alpha_bar < 1.0))
        throw std::invalid_argument("make_run_schedule: start_alpha_bar must be in (0,1)");

    const int T = master.total_steps();
    int pivot = 1;
    double best = std::abs(master.alpha_bar(1) - start_alpha_bar);
    for (int t = 2; t <= T; ++t) {
        const double d = std::abs(master.alpha_bar(t) - start_alpha_bar);
        if (d < best) {
            best = d;
            pivot = t;
        }
    }
    if (pivot < steps)
        throw std::invalid_argument(
            "make_run_schedule: master schedule too coarse for " + std::to_string(steps) +
            " steps above alpha_bar=" + std::to_string(start_alpha_bar));
    if (total_steps > steps && T - pivot < total_steps - steps)
        throw std::invalid_argument(
            "make_run_schedule: master schedule too coarse for the extended range");

    std::vector<double> bars(total_steps);
    for (int i = 1; i <= steps; ++i) {
        const long idx = std::lround(static_cast<double>(i) * pivot / steps);
        bars[i - 1] = master.alpha_bar(static_cast<int>(idx));
    }
    for (int i = steps + 1; i <= total_steps; ++i) {
        const long idx =
            std::lround(pivot + static_cast<double>(i - steps) * (T - pivot) /
                                    (total_steps - steps));
        bars[i - 1] = master.alpha_bar(static_cast<int>(idx));
    }
    return NoiseSchedule::from_alpha_bars(std::move(bars));
}

}  // namespace lav
