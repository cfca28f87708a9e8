#include "splat/densify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "splat/quantile.hpp"
#include "splat/sh.hpp"
#include "splat/spatial.hpp"

namespace splat {

IdentCriterion ident_criterion_from_string(const std::string& name) {
    if (name == "random") return IdentCriterion::Random;
    if (name == "opacity") return IdentCriterion::Opacity;
    if (name == "accum-weight") return IdentCriterion::AccumWeight;
    if (name == "max-weight") return IdentCriterion::MaxWeight;
    throw std::invalid_argument("unknown identification criterion: " + name);
}

std::string to_string(IdentCriterion c) {
    switch (c) {
        case IdentCriterion::Random: return "random";
        case IdentCriterion::Opacity: return "opacity";
        case IdentCriterion::AccumWeight: return "accum-weight";
        case IdentCriterion::MaxWeight: return "max-weight";
    }
    return "?";
}

CriticalSelection identify_critical(const GaussianSet& set, const std::vector<Camera>& cameras,
                                    IdentCriterion criterion, double keep_q,
                                    const RasterConfig& cfg, std::mt19937& rng,
                                    const VisibilityTable* visibility) {
    if (cameras.empty()) throw std::invalid_argument("identify_critical: no cameras");
    const int n = set.size();

    std::vector<float> best_weight(n, 0.f);
    std::vector<char> ever_max(n, 0);
    std::vector<double> summed_importance(n, 0.0);
    for (size_t k = 0; k < cameras.size(); ++k) {
        const std::vector<char>* mask =
            visibility && visibility->fresh_for(n) ? visibility->mask_for(static_cast<int>(k))
                                                   : nullptr;
        const auto report = accumulate_importance<float>(set, cameras[k], cfg, mask);
        for (int i = 0; i < n; ++i) {
            best_weight[i] = std::max(best_weight[i], report.max_weight[i]);
            if (report.is_max_contributor(i)) ever_max[i] = 1;
            summed_importance[i] += report.importance[i];
        }
    }

    // MaxWeight selection first: it defines the count the other criteria match.
    std::vector<float> candidate_weights;
    for (int i = 0; i < n; ++i)
        if (ever_max[i]) candidate_weights.push_back(best_weight[i]);

    CriticalSelection sel;
    sel.critical.assign(n, 0);
    if (candidate_weights.empty()) return sel;

    const float tau = quantile_threshold(candidate_weights, float(keep_q));
    int count = 0;
    for (int i = 0; i < n; ++i)
        if (ever_max[i] && best_weight[i] > tau) ++count;
    const bool keep_all_candidates = count == 0;  // degenerate: nothing strictly above
    if (keep_all_candidates) count = static_cast<int>(candidate_weights.size());

    if (criterion == IdentCriterion::MaxWeight) {
        for (int i = 0; i < n; ++i)
            sel.critical[i] = ever_max[i] && (keep_all_candidates || best_weight[i] > tau);
        sel.count = count;
        return sel;
    }

    std::vector<double> score(n);
    switch (criterion) {
        case IdentCriterion::Random: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (int i = 0; i < n; ++i) score[i] = u(rng);
            break;
        }
        case IdentCriterion::Opacity:
            for (int i = 0; i < n; ++i) score[i] = set.opacity(i);
            break;
        case IdentCriterion::AccumWeight:
            score = summed_importance;
            break;
        case IdentCriterion::MaxWeight: break;  // handled above
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });
    for (int r = 0; r < count; ++r) sel.critical[order[r]] = 1;
    sel.count = count;
    return sel;
}

DensifyPlan aggressive_clone(const GaussianSet& set, const std::vector<char>& critical) {
    if (static_cast<int>(critical.size()) != set.size())
        throw std::invalid_argument("aggressive_clone: flag array size mismatch");
    DensifyPlan plan;
    plan.mode = DensifyPlan::Mode::AggressiveClone;
    plan.new_rows.active_sh_degree = set.active_sh_degree;
    const float sqrt2 = std::sqrt(2.f);
    for (int i = 0; i < set.size(); ++i) {
        if (!critical[i]) continue;
        float alpha = set.opacity(i);
        if (alpha <= 1e-7f) continue;  // multiplier degenerates; cloning a no-op
        alpha = std::min(alpha, 1.f - 1e-7f);
        const float alpha_new = 1.f - std::sqrt(1.f - alpha);
        const float denom = 2.f * alpha_new - alpha_new * alpha_new / sqrt2;
        const float k = (alpha * alpha) / (denom * denom);
        const float shift = 0.5f * std::log(k);

        plan.clone_indices.push_back(i);
        plan.updated_opacity_logits.push_back(logit(alpha_new));
        plan.updated_log_scales.push_back(Vec3f(set.log_scales[i].array() + shift));

        GaussianSet row = set.select({i});
        row.opacity_logits[0] = plan.updated_opacity_logits.back();
        row.log_scales[0] = plan.updated_log_scales.back();
        plan.new_rows.append(row);
    }
    return plan;
}

DensifyPlan vanilla_clone_split(const GaussianSet& set, const ParamGrads<float>& grads,
                                float grad_threshold, float scale_threshold, float scene_extent,
                                std::mt19937& rng) {
    if (grads.size() != set.size())
        throw std::invalid_argument("vanilla_clone_split: gradient rows mismatch");
    DensifyPlan plan;
    plan.mode = DensifyPlan::Mode::Progressive;
    plan.new_rows.active_sh_degree = set.active_sh_degree;
    std::normal_distribution<float> gauss(0.f, 1.f);
    const float split_shift = std::log(1.6f);
    for (int i = 0; i < set.size(); ++i) {
        if (grads.grad2d_count[i] <= 0) continue;
        const float avg = grads.grad2d_accum[i] / float(grads.grad2d_count[i]);
        if (avg <= grad_threshold) continue;
        const Vec3f scale = set.scale(i);
        if (scale.maxCoeff() <= scale_threshold * scene_extent) {
            plan.clone_indices.push_back(i);
            plan.new_rows.append(set.select({i}));
        } else {
            plan.split_indices.push_back(i);
            const Mat3f rot = rotation_from_quat(set.rotations[i]);
            for (int child = 0; child < 2; ++child) {
                Vec3f n(gauss(rng), gauss(rng), gauss(rng));
                GaussianSet row = set.select({i});
                row.centers[0] = set.centers[i] + rot * scale.cwiseProduct(n);
                row.log_scales[0] = Vec3f(set.log_scales[i].array() - split_shift);
                plan.new_rows.append(row);
            }
        }
    }
    return plan;
}

DensifyApplied apply_densify_plan(const GaussianSet& set, const DensifyPlan& plan) {
    for (int i : plan.clone_indices)
        if (i < 0 || i >= set.size()) throw std::out_of_range("densify plan: clone index");
    for (int i : plan.split_indices)
        if (i < 0 || i >= set.size()) throw std::out_of_range("densify plan: split index");

    DensifyApplied out;
    if (plan.mode == DensifyPlan::Mode::AggressiveClone) {
        out.set = set;
        out.moment_source.resize(set.size());
        std::iota(out.moment_source.begin(), out.moment_source.end(), 0);
        for (size_t j = 0; j < plan.clone_indices.size(); ++j) {
            const int i = plan.clone_indices[j];
            out.set.opacity_logits[i] = plan.updated_opacity_logits[j];
            out.set.log_scales[i] = plan.updated_log_scales[j];
            out.moment_source[i] = -1;  // both copies of a clone restart Adam
        }
    } else {
        std::vector<char> removed(set.size(), 0);
        for (int i : plan.split_indices) removed[i] = 1;
        std::vector<int> keep;
        keep.reserve(set.size());
        for (int i = 0; i < set.size(); ++i)
            if (!removed[i]) keep.push_back(i);
        out.set = set.select(keep);
        out.moment_source = keep;
    }
    out.set.append(plan.new_rows);
    out.moment_source.insert(out.moment_source.end(), plan.new_rows.size(), -1);
    return out;
}

GaussianSet depth_reinitialize(const GaussianSet& set, const std::vector<Camera>& cameras,
                               const std::vector<Imagef>& images, int sample_count,
                               const RasterConfig& cfg, std::mt19937& rng) {
    if (cameras.empty()) throw std::invalid_argument("depth_reinitialize: no cameras");
    if (cameras.size() != images.size())
        throw std::invalid_argument("depth_reinitialize: camera/image count mismatch");
    if (sample_count < 1) throw std::invalid_argument("depth_reinitialize: sample_count < 1");

    std::vector<Vec3f> points;
    std::vector<Vec3f> colors;
    for (size_t k = 0; k < cameras.size(); ++k) {
        const Camera& cam = cameras[k];
        const Imagef& img = images[k];
        if (img.width != cam.width || img.height != cam.height || img.channels != 3)
            throw std::invalid_argument("depth_reinitialize: image does not match camera");
        const auto out = render<float>(set, cam, cfg);
        const Vec3f origin = cam.center();
        for (int py = 0; py < cam.height; ++py) {
            for (int px = 0; px < cam.width; ++px) {
                if (out.max_contributor[static_cast<size_t>(py) * cam.width + px] < 0) continue;
                const float d = out.depth.at(py, px);
                points.push_back(origin + d * cam.ray_direction(px, py));
                colors.push_back(Vec3f(img.at(py, px, 0), img.at(py, px, 1), img.at(py, px, 2)));
            }
        }
    }
    if (points.empty())
        throw std::runtime_error(
            "depth_reinitialize: no valid depth pixels (model renders nothing)");

    // Uniform draw without replacement: partial Fisher-Yates over the pool.
    const int pool = static_cast<int>(points.size());
    const int take = std::min(sample_count, pool);
    std::vector<int> idx(pool);
    std::iota(idx.begin(), idx.end(), 0);
    for (int r = 0; r < take; ++r) {
        std::uniform_int_distribution<int> pick(r, pool - 1);
        std::swap(idx[r], idx[pick(rng)]);
    }

    GaussianSet fresh;
    fresh.active_sh_degree = set.active_sh_degree;
    fresh.resize(take);
    std::vector<Vec3f> sampled(take);
    for (int r = 0; r < take; ++r) sampled[r] = points[idx[r]];
    const std::vector<float> nn3 = third_neighbor_distances(sampled);
    const float opacity_logit = logit(0.1f);
    for (int r = 0; r < take; ++r) {
        fresh.centers[r] = sampled[r];
        fresh.log_scales[r] = Vec3f::Constant(std::log(nn3[r]));
        fresh.rotations[r] = Vec4f(1.f, 0.f, 0.f, 0.f);
        fresh.opacity_logits[r] = opacity_logit;
        const Vec3f dc = color_to_sh_dc(colors[idx[r]]);
        for (int c = 0; c < 3; ++c) fresh.sh_at(r)[c] = dc[c];
    }
    return fresh;
}

DensifyEvent densify_event_at(int iter, const DensifySchedule& sched, bool aggressive) {
    if (aggressive && iter == sched.reinit_iter) return DensifyEvent::DepthReinit;
    if (iter < sched.start || iter >= sched.end) return DensifyEvent::None;
    if ((iter - sched.start) % sched.interval != 0) return DensifyEvent::None;
    return aggressive ? DensifyEvent::IdentifyClone : DensifyEvent::ProgressiveCloneSplit;
}

}  // namespace splat
