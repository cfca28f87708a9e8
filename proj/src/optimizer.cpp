#include "splat/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace splat {

double LrSchedule::at(int step) const {
    if (step <= 0) return lr_init;
    const double t = std::min(1.0, double(step) / double(max_steps));
    return std::exp((1.0 - t) * std::log(lr_init) + t * std::log(lr_final));
}

void OptimState::resize_zero(int n) {
    m_center_.assign(n, Vec3f::Zero());
    v_center_.assign(n, Vec3f::Zero());
    m_scale_.assign(n, Vec3f::Zero());
    v_scale_.assign(n, Vec3f::Zero());
    m_rot_.assign(n, Vec4f::Zero());
    v_rot_.assign(n, Vec4f::Zero());
    m_opacity_.assign(n, 0.f);
    v_opacity_.assign(n, 0.f);
    m_sh_.assign(static_cast<size_t>(n) * kShValueCount, 0.f);
    v_sh_.assign(static_cast<size_t>(n) * kShValueCount, 0.f);
}

namespace {

inline float adam_delta(float& m, float& v, float g, double beta1, double beta2, double eps,
                        double bias1, double bias2, double lr) {
    m = float(beta1 * m + (1.0 - beta1) * g);
    v = float(beta2 * v + (1.0 - beta2) * double(g) * g);
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    return float(lr * m_hat / (std::sqrt(v_hat) + eps));
}

}  // namespace

void OptimState::step(GaussianSet& set, const ParamGrads<float>& grads) {
    const int n = set.size();
    if (size() != n || grads.size() != n)
        throw std::logic_error("OptimState::step: moment/gradient rows out of sync with set");

    const double lr_pos = position_lr(t_);
    ++t_;
    const double bias1 = 1.0 - std::pow(config_.beta1, t_);
    const double bias2 = 1.0 - std::pow(config_.beta2, t_);
    const auto upd = [&](float& param, float& m, float& v, float g, double lr) {
        param -= adam_delta(m, v, g, config_.beta1, config_.beta2, config_.eps, bias1, bias2, lr);
    };

    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            upd(set.centers[i][k], m_center_[i][k], v_center_[i][k], grads.d_centers[i][k], lr_pos);
            upd(set.log_scales[i][k], m_scale_[i][k], v_scale_[i][k], grads.d_log_scales[i][k],
                config_.lr_scale);
        }
        for (int k = 0; k < 4; ++k)
            upd(set.rotations[i][k], m_rot_[i][k], v_rot_[i][k], grads.d_rotations[i][k],
                config_.lr_rotation);
        upd(set.opacity_logits[i], m_opacity_[i], v_opacity_[i], grads.d_opacity_logits[i],
            config_.lr_opacity);
        float* sh = set.sh_at(i);
        const size_t base = static_cast<size_t>(i) * kShValueCount;
        for (int k = 0; k < kShValueCount; ++k)
            upd(sh[k], m_sh_[base + k], v_sh_[base + k], grads.d_sh[base + k],
                k < 3 ? config_.lr_sh_dc : config_.lr_sh_rest);
        set.rotations[i] = normalized_quat(set.rotations[i]);
    }
}

void OptimState::remap(const std::vector<int>& source) {
    for (int idx : source)
        if (idx >= size()) throw std::out_of_range("OptimState::remap: bad source row");
    const auto pick3 = [&](std::vector<Vec3f>& a) {
        std::vector<Vec3f> out(source.size(), Vec3f::Zero());
        for (size_t r = 0; r < source.size(); ++r)
            if (source[r] >= 0) out[r] = a[source[r]];
        a.swap(out);
    };
    const auto pick4 = [&](std::vector<Vec4f>& a) {
        std::vector<Vec4f> out(source.size(), Vec4f::Zero());
        for (size_t r = 0; r < source.size(); ++r)
            if (source[r] >= 0) out[r] = a[source[r]];
        a.swap(out);
    };
    const auto pick1 = [&](std::vector<float>& a) {
        std::vector<float> out(source.size(), 0.f);
        for (size_t r = 0; r < source.size(); ++r)
            if (source[r] >= 0) out[r] = a[source[r]];
        a.swap(out);
    };
    const auto pick_sh = [&](std::vector<float>& a) {
        std::vector<float> out(source.size() * kShValueCount, 0.f);
        for (size_t r = 0; r < source.size(); ++r)
            if (source[r] >= 0)
                for (int k = 0; k < kShValueCount; ++k)
                    out[r * kShValueCount + k] =
                        a[static_cast<size_t>(source[r]) * kShValueCount + k];
        a.swap(out);
    };
    pick3(m_center_); pick3(v_center_);
    pick3(m_scale_); pick3(v_scale_);
    pick4(m_rot_); pick4(v_rot_);
    pick1(m_opacity_); pick1(v_opacity_);
    pick_sh(m_sh_); pick_sh(v_sh_);
}

void OptimState::keep(const std::vector<int>& keep_indices) {
    for (int idx : keep_indices)
        if (idx < 0) throw std::out_of_range("OptimState::keep: bad index");
    remap(keep_indices);
}

void OptimState::append_zeros(int count) {
    const int n = size() + count;
    m_center_.resize(n, Vec3f::Zero());
    v_center_.resize(n, Vec3f::Zero());
    m_scale_.resize(n, Vec3f::Zero());
    v_scale_.resize(n, Vec3f::Zero());
    m_rot_.resize(n, Vec4f::Zero());
    v_rot_.resize(n, Vec4f::Zero());
    m_opacity_.resize(n, 0.f);
    v_opacity_.resize(n, 0.f);
    m_sh_.resize(static_cast<size_t>(n) * kShValueCount, 0.f);
    v_sh_.resize(static_cast<size_t>(n) * kShValueCount, 0.f);
}

void OptimState::reinit(int count) { resize_zero(count); }

void OptimState::reset_opacity_moments() {
    std::fill(m_opacity_.begin(), m_opacity_.end(), 0.f);
    std::fill(v_opacity_.begin(), v_opacity_.end(), 0.f);
}

}  // namespace splat
