#pragma once

#include <vector>

#include "splat/gaussian_set.hpp"
#include "splat/gradients.hpp"

namespace splat {

/// Log-linear interpolation between lr_init and lr_final over max_steps,
/// clamped at both ends (the 3DGS position schedule).
struct LrSchedule {
    double lr_init = 1.6e-4;
    double lr_final = 1.6e-6;
    int max_steps = 18000;

    double at(int step) const;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
    // Group learning rates (positions follow the schedule, scaled by extent).
    LrSchedule position;
    double scene_extent = 1.0;
    double lr_sh_dc = 2.5e-3;
    double lr_sh_rest = 2.5e-3 / 20.0;
    double lr_opacity = 5e-2;
    double lr_scale = 5e-3;
    double lr_rotation = 1e-3;
};

/// Adam moments per parameter group, resizable in lockstep with the
/// GaussianSet it optimizes. The step counter is global: inserting or
/// removing Gaussians does not restart bias correction.
class OptimState {
public:
    explicit OptimState(const AdamConfig& config, int n = 0) : config_(config) { resize_zero(n); }

    void step(GaussianSet& set, const ParamGrads<float>& grads);

    /// Rebuilds the moment arrays for a resized set: row r of the new state
    /// copies moments from old row source[r], or starts zeroed when
    /// source[r] < 0 (fresh Gaussian).
    void remap(const std::vector<int>& source);

    /// Drops all moment rows not listed; order follows `keep_indices`.
    /// Mirrors GaussianSetT::select.
    void keep(const std::vector<int>& keep_indices);

    /// Adds `count` rows with zeroed moments (new Gaussians start fresh).
    void append_zeros(int count);

    /// Discards everything and starts from `count` zeroed rows; the step
    /// counter is preserved.
    void reinit(int count);

    void reset_opacity_moments();

    int size() const { return static_cast<int>(m_opacity_.size()); }
    int step_count() const { return t_; }
    const AdamConfig& config() const { return config_; }
    double position_lr(int step) const { return config_.position.at(step) * config_.scene_extent; }

private:
    void resize_zero(int n);

    AdamConfig config_;
    int t_ = 0;
    std::vector<Vec3f> m_center_, v_center_;
    std::vector<Vec3f> m_scale_, v_scale_;
    std::vector<Vec4f> m_rot_, v_rot_;
    std::vector<float> m_opacity_, v_opacity_;
    std::vector<float> m_sh_, v_sh_;  // N x 48, layout of GaussianSetT::sh
};

}  // namespace splat
