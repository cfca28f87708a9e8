#include "splat/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "splat/loss.hpp"
#include "splat/metrics.hpp"
#include "splat/sh.hpp"
#include "splat/spatial.hpp"

namespace splat {

PipelineMode pipeline_mode_from_string(const std::string& name) {
    if (name == "msv2") return PipelineMode::MSv2;
    if (name == "msv2d") return PipelineMode::MSv2D;
    if (name == "progressive") return PipelineMode::Progressive;
    throw std::invalid_argument("unknown pipeline mode: " + name +
                                " (expected msv2, msv2d or progressive)");
}

std::string to_string(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::MSv2: return "msv2";
        case PipelineMode::MSv2D: return "msv2d";
        case PipelineMode::Progressive: return "progressive";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (desk_scale < 1) throw std::invalid_argument("TrainConfig: desk_scale must be >= 1");
    if (total_iters < 1) throw std::invalid_argument("TrainConfig: total_iters must be >= 1");
    if (lambda_dssim < 0 || lambda_dssim >= 1)
        throw std::invalid_argument("TrainConfig: lambda_dssim must be in [0, 1)");
    if (aggressive()) {
        if (densify_end <= 0 || densify_end > total_iters)
            throw std::invalid_argument("TrainConfig: need 0 < densify_end <= total_iters");
        if (cull_start < cull_end && cull_end > total_iters)
            throw std::invalid_argument("TrainConfig: culling window exceeds total_iters");
        if (simplify_iters.size() != simplify_ratios.size() && mode == PipelineMode::MSv2)
            throw std::invalid_argument("TrainConfig: one sampling ratio per simplify event");
    }
    if (sh_degree < 0 || sh_degree > 3)
        throw std::invalid_argument("TrainConfig: sh_degree must be 0..3");
}

TrainConfig default_train_config(PipelineMode mode) {
    TrainConfig c;
    c.mode = mode;
    if (mode == PipelineMode::Progressive) {
        c.total_iters = 30000;
        c.densify_start = 500;
        c.densify_interval = 100;
        c.densify_end = 15000;
        c.simplify_iters.clear();
        c.simplify_ratios.clear();
        c.cull_start = c.cull_end = 0;
        c.stage_half_resolution = false;
        c.stage_sh_off = false;
    }
    return c;
}

void TrainLog::write_csv(std::ostream& out) const {
    out << "iter,n,loss,psnr,wall_ms,chamfer,events\n";
    out << std::setprecision(10);
    for (const auto& r : rows)
        out << r.iter << "," << r.n << "," << r.loss << "," << r.psnr_train << "," << r.wall_ms
            << "," << r.chamfer << "," << r.events << "\n";
}

GaussianSet init_from_points(const std::vector<Vec3f>& points, const std::vector<Vec3f>& colors,
                             int sh_degree) {
    if (points.empty()) throw std::invalid_argument("init_from_points: empty point set");
    if (points.size() != colors.size())
        throw std::invalid_argument("init_from_points: point/color count mismatch");
    GaussianSet set;
    set.active_sh_degree = sh_degree;
    set.resize(static_cast<int>(points.size()));
    const std::vector<float> nn3 = third_neighbor_distances(points);
    const float opacity_logit = logit(0.1f);
    for (int i = 0; i < set.size(); ++i) {
        set.centers[i] = points[i];
        set.log_scales[i] = Vec3f::Constant(std::log(nn3[i]));
        set.rotations[i] = Vec4f(1.f, 0.f, 0.f, 0.f);
        set.opacity_logits[i] = opacity_logit;
        const Vec3f dc = color_to_sh_dc(colors[i]);
        for (int c = 0; c < 3; ++c) set.sh_at(i)[c] = dc[c];
    }
    return set;
}

float scene_extent_of(const std::vector<Camera>& cameras) {
    if (cameras.empty()) throw std::invalid_argument("scene_extent_of: no cameras");
    Vec3f centroid = Vec3f::Zero();
    for (const auto& cam : cameras) centroid += cam.center();
    centroid /= float(cameras.size());
    float radius = 0.f;
    for (const auto& cam : cameras) radius = std::max(radius, (cam.center() - centroid).norm());
    return radius > 0.f ? 1.1f * radius : 1.f;
}

Imagef downsample_half(const Imagef& img) {
    Imagef out(img.width / 2, img.height / 2, img.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = 0.25f * (img.at(2 * y, 2 * x, c) + img.at(2 * y, 2 * x + 1, c) +
                                           img.at(2 * y + 1, 2 * x, c) +
                                           img.at(2 * y + 1, 2 * x + 1, c));
    return out;
}

EvalResult evaluate(const GaussianSet& set, const std::vector<Camera>& cameras,
                    const std::vector<Imagef>& targets, const RasterConfig& cfg,
                    const Vec3f& background) {
    if (cameras.size() != targets.size())
        throw std::invalid_argument("evaluate: camera/target count mismatch");
    if (cameras.empty()) throw std::invalid_argument("evaluate: no views");
    EvalResult res;
    for (size_t k = 0; k < cameras.size(); ++k) {
        const auto out = render<float>(set, cameras[k], cfg, nullptr, background);
        res.view_psnr.push_back(psnr(out.color, targets[k]));
        res.view_ssim.push_back(double(ssim(out.color, targets[k])));
        res.mean_psnr += res.view_psnr.back();
        res.mean_ssim += res.view_ssim.back();
    }
    res.mean_psnr /= double(cameras.size());
    res.mean_ssim /= double(cameras.size());
    return res;
}

namespace {

struct EventTags {
    std::string tags;
    void add(const char* tag) {
        if (!tags.empty()) tags += '+';
        tags += tag;
    }
};

}  // namespace

TrainResult train(const SceneBundle& scene, const TrainConfig& config, std::ostream* warnings) {
    config.validate();
    if (scene.cameras.size() < 2) throw std::invalid_argument("train: need at least 2 views");
    if (scene.init_points.empty()) throw std::invalid_argument("train: empty initial points");
    if (scene.cameras.size() != scene.images.size())
        throw std::invalid_argument("train: camera/image count mismatch");

    const int total = config.scaled(config.total_iters);
    const int last_iter = config.stop_iter > 0 ? std::min(total, config.stop_iter) : total;
    const bool aggressive = config.aggressive();
    DensifySchedule sched;
    sched.start = config.scaled(config.densify_start);
    sched.interval = config.scaled(config.densify_interval);
    sched.end = config.scaled(config.densify_end);
    sched.reinit_iter = aggressive ? config.scaled(config.reinit_iter) : -1;
    std::vector<int> simplify_at;
    for (int it : config.simplify_iters) simplify_at.push_back(config.scaled(it));
    const int cull_start = config.scaled(config.cull_start);
    const int cull_end = config.cull_end > 0 ? config.scaled(config.cull_end) : 0;
    const bool use_culling = aggressive && cull_start < cull_end;
    const int stage_end = sched.end;  // staging covers iters < scaled densify_end

    GaussianSet set = init_from_points(scene.init_points, scene.init_colors, config.sh_degree);
    AdamConfig adam;
    adam.position.max_steps = total;
    adam.scene_extent = scene_extent_of(scene.cameras);
    OptimState optim(adam, set.size());

    std::mt19937 rng(static_cast<uint32_t>(config.seed ^ (config.seed >> 32)));

    const int n_views = static_cast<int>(scene.cameras.size());
    std::vector<Camera> half_cams;
    std::vector<Imagef> half_images;
    if (aggressive && config.stage_half_resolution) {
        for (int k = 0; k < n_views; ++k) {
            half_cams.push_back(scene.cameras[k].half_resolution());
            half_images.push_back(downsample_half(scene.images[k]));
        }
    }
    const auto active_cams = [&](int iter) -> const std::vector<Camera>& {
        return (!half_cams.empty() && iter < stage_end) ? half_cams : scene.cameras;
    };
    const auto active_images = [&](int iter) -> const std::vector<Imagef>& {
        return (!half_cams.empty() && iter < stage_end) ? half_images : scene.images;
    };

    VisibilityTable table;  // starts stale: culling stays off until first rebuild
    std::vector<float> acc_grad2d(set.size(), 0.f);
    std::vector<int> acc_count(set.size(), 0);

    std::vector<int> view_order(n_views);
    std::iota(view_order.begin(), view_order.end(), 0);
    int epoch_pos = 0;

    TrainResult result;
    const auto t0 = std::chrono::steady_clock::now();

    for (int iter = 1; iter <= last_iter; ++iter) {
        if (epoch_pos == 0) std::shuffle(view_order.begin(), view_order.end(), rng);
        const int view = view_order[epoch_pos];
        epoch_pos = (epoch_pos + 1) % n_views;

        const Camera& cam = active_cams(iter)[view];
        const Imagef& target = active_images(iter)[view];
        set.active_sh_degree =
            (aggressive && config.stage_sh_off && iter < stage_end) ? 0 : config.sh_degree;

        // Initial table construction on entering the window; events keep it
        // fresh afterwards, so a stale table here is not an error.
        if (use_culling && iter >= cull_start && iter < cull_end && !table.fresh_for(set.size()))
            table = build_masks(set, active_cams(iter), config.cull_keep_q, config.raster, iter);
        const std::vector<char>* mask = nullptr;
        if (use_culling && culling_active(iter, cull_start, cull_end, table, set.size(), warnings))
            mask = table.mask_for(view);

        const auto out = render<float>(set, cam, config.raster, mask, config.background);
        Imagef d_color;
        const float loss =
            photometric_loss(out.color, target, float(config.lambda_dssim), &d_color);
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "train: non-finite loss " << loss << " at iteration " << iter << ", view "
                << view << " (N=" << set.size() << ")";
            throw std::runtime_error(msg.str());
        }
        const double view_psnr = psnr(out.color, target);

        const auto grads =
            render_backward(set, cam, config.raster, d_color, mask, config.background);
        optim.step(set, grads);
        for (int i = 0; i < set.size(); ++i) {
            acc_grad2d[i] += grads.grad2d_accum[i];
            acc_count[i] += grads.grad2d_count[i];
        }

        EventTags events;
        bool n_changed = false;
        bool stats_consumed = false;
        const DensifyEvent ev = densify_event_at(iter, sched, aggressive);

        // Gradient-triggered clone/split with a low-opacity prune (the 3DGS
        // density-control round); used by the progressive pipeline and, at its
        // own cadence, inside the aggressive window.
        const auto run_vanilla = [&]() {
            ParamGrads<float> stats;
            stats.resize_zero(set.size());
            stats.grad2d_accum = acc_grad2d;
            stats.grad2d_count = acc_count;
            const auto plan = vanilla_clone_split(
                set, stats, config.progressive_grad_threshold, config.progressive_scale_threshold,
                float(adam.scene_extent), rng);
            if (!plan.empty()) {
                auto applied = apply_densify_plan(set, plan);
                set = std::move(applied.set);
                optim.remap(applied.moment_source);
                n_changed = true;
            }
            // Drop nearly transparent Gaussians so the budget is not eaten
            // by contributors the renderer effectively skips anyway.
            std::vector<int> keep;
            for (int i = 0; i < set.size(); ++i)
                if (set.opacity(i) > config.progressive_min_opacity) keep.push_back(i);
            if (static_cast<int>(keep.size()) < set.size() && !keep.empty()) {
                set = set.select(keep);
                optim.keep(keep);
                n_changed = true;
            }
            events.add("densify");
            stats_consumed = true;
        };

        if (aggressive && config.vanilla_interval > 0 && ev != DensifyEvent::DepthReinit &&
            iter >= sched.start && iter < sched.end &&
            (iter - sched.start) % config.scaled(config.vanilla_interval) == 0)
            run_vanilla();

        if (ev == DensifyEvent::IdentifyClone) {
            const auto sel =
                identify_critical(set, active_cams(iter), config.criterion, config.ident_keep_q,
                                  config.raster, rng, use_culling ? &table : nullptr);
            const auto plan = aggressive_clone(set, sel.critical);
            if (!plan.empty()) {
                auto applied = apply_densify_plan(set, plan);
                set = std::move(applied.set);
                optim.remap(applied.moment_source);
                n_changed = true;
            }
            events.add("clone");
        } else if (ev == DensifyEvent::DepthReinit) {
            // Reinitialization always reads full-resolution depth and colors.
            set = depth_reinitialize(set, scene.cameras, scene.images, set.size(), config.raster,
                                     rng);
            optim.reinit(set.size());
            n_changed = true;
            events.add("reinit");
        } else if (ev == DensifyEvent::ProgressiveCloneSplit) {
            run_vanilla();
        }

        if (aggressive) {
            for (size_t s = 0; s < simplify_at.size(); ++s) {
                if (iter != simplify_at[s]) continue;
                const auto imp = global_importance(set, active_cams(iter), config.raster);
                SimplifyResult res;
                if (config.mode == PipelineMode::MSv2) {
                    const int target_count = std::max(
                        1, static_cast<int>(std::lround(config.simplify_ratios[s] * set.size())));
                    res = importance_sample(set, imp.accum_weight, target_count, rng());
                } else {
                    res = importance_prune(set, imp.accum_weight, config.simplify_keep_q);
                }
                set = std::move(res.set);
                optim.keep(res.kept);
                n_changed = true;
                events.add("simplify");
            }
        }

        if (!aggressive && config.opacity_reset_interval > 0 &&
            iter % config.scaled(config.opacity_reset_interval) == 0 && iter < sched.end) {
            const float floor_logit = logit(0.01f);
            for (int i = 0; i < set.size(); ++i)
                set.opacity_logits[i] = std::min(set.opacity_logits[i], floor_logit);
            optim.reset_opacity_moments();
            events.add("opacity-reset");
        }

        if (use_culling && n_changed && iter + 1 >= cull_start && iter + 1 < cull_end) {
            table = build_masks(set, active_cams(iter + 1), config.cull_keep_q, config.raster,
                                iter);
            events.add("cull-rebuild");
        }
        if (n_changed || stats_consumed) {
            acc_grad2d.assign(set.size(), 0.f);
            acc_count.assign(set.size(), 0);
        }

        if (iter % config.log_every == 0 || !events.tags.empty() || iter == last_iter) {
            TrainLogRow row;
            row.iter = iter;
            row.n = set.size();
            row.loss = loss;
            row.psnr_train = view_psnr;
            row.wall_ms =
                config.deterministic
                    ? 0.0
                    : std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                t0)
                          .count();
            row.chamfer = scene.reference_points.empty()
                              ? -1.0
                              : chamfer(set.centers, scene.reference_points);
            row.events = events.tags;
            result.log.rows.push_back(std::move(row));
        }
    }

    set.active_sh_degree = config.sh_degree;
    result.set = std::move(set);
    return result;
}

}  // namespace splat
