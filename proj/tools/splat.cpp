#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splat/image_io.hpp"
#include "splat/metrics.hpp"
#include "splat/ply_io.hpp"
#include "splat/scene_io.hpp"
#include "splat/simplify.hpp"
#include "splat/synthetic.hpp"
#include "splat/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

/// Overrides config fields from a JSON object; unknown keys are rejected so
/// typos in config files fail loudly instead of being silently ignored.
void apply_config_file(splat::TrainConfig& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    json j = json::parse(in);
    for (const auto& [key, value] : j.items()) {
        if (key == "desk_scale") cfg.desk_scale = value.get<int>();
        else if (key == "total_iters") cfg.total_iters = value.get<int>();
        else if (key == "densify_start") cfg.densify_start = value.get<int>();
        else if (key == "densify_interval") cfg.densify_interval = value.get<int>();
        else if (key == "densify_end") cfg.densify_end = value.get<int>();
        else if (key == "reinit_iter") cfg.reinit_iter = value.get<int>();
        else if (key == "vanilla_interval") cfg.vanilla_interval = value.get<int>();
        else if (key == "simplify_iters") cfg.simplify_iters = value.get<std::vector<int>>();
        else if (key == "simplify_ratios") cfg.simplify_ratios = value.get<std::vector<double>>();
        else if (key == "simplify_keep_q") cfg.simplify_keep_q = value.get<double>();
        else if (key == "cull_start") cfg.cull_start = value.get<int>();
        else if (key == "cull_end") cfg.cull_end = value.get<int>();
        else if (key == "cull_keep_q") cfg.cull_keep_q = value.get<double>();
        else if (key == "ident_keep_q") cfg.ident_keep_q = value.get<double>();
        else if (key == "criterion")
            cfg.criterion = splat::ident_criterion_from_string(value.get<std::string>());
        else if (key == "lambda_dssim") cfg.lambda_dssim = value.get<double>();
        else if (key == "stage_half_resolution") cfg.stage_half_resolution = value.get<bool>();
        else if (key == "stage_sh_off") cfg.stage_sh_off = value.get<bool>();
        else if (key == "opacity_reset_interval") cfg.opacity_reset_interval = value.get<int>();
        else if (key == "progressive_grad_threshold")
            cfg.progressive_grad_threshold = value.get<float>();
        else if (key == "progressive_scale_threshold")
            cfg.progressive_scale_threshold = value.get<float>();
        else if (key == "progressive_min_opacity")
            cfg.progressive_min_opacity = value.get<float>();
        else if (key == "sh_degree") cfg.sh_degree = value.get<int>();
        else if (key == "log_every") cfg.log_every = value.get<int>();
        else if (key == "stop_iter") cfg.stop_iter = value.get<int>();
        else if (key == "deterministic") cfg.deterministic = value.get<bool>();
        else if (key == "background") {
            auto rgb = value.get<std::vector<float>>();
            if (rgb.size() != 3) throw std::runtime_error("config: background needs 3 values");
            cfg.background = splat::Vec3f(rgb[0], rgb[1], rgb[2]);
        } else {
            throw std::runtime_error("config: unknown key '" + key + "'");
        }
    }
}

int cmd_train(const std::string& scene_dir, const std::string& config_path,
              const std::string& mode_str, uint64_t seed, int desk_scale,
              const std::string& out_dir) {
    splat::TrainConfig cfg = splat::default_train_config(splat::pipeline_mode_from_string(mode_str));
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    cfg.seed = seed;
    if (desk_scale > 0) cfg.desk_scale = desk_scale;

    const splat::SceneBundle scene = splat::load_scene(scene_dir);
    fs::create_directories(out_dir);
    const auto result = splat::train(scene, cfg, &std::cerr);

    const fs::path model_path = fs::path(out_dir) / "model.ply";
    const fs::path log_path = fs::path(out_dir) / "log.csv";
    splat::write_ply(model_path.string(), result.set);
    std::ofstream log(log_path, std::ios::binary);
    if (!log) throw std::runtime_error("cannot write " + log_path.string());
    result.log.write_csv(log);

    const auto& last = result.log.rows.back();
    std::cout << "trained " << result.set.size() << " gaussians over " << last.iter
              << " iterations (mode " << mode_str << ", seed " << seed << ")\n"
              << "final train-view psnr " << last.psnr_train << " dB";
    if (last.chamfer >= 0) std::cout << ", chamfer " << last.chamfer;
    std::cout << "\nwrote " << model_path.string() << " and " << log_path.string() << "\n";
    return kExitOk;
}

int cmd_render(const std::string& model_path, const std::string& scene_dir, int view,
               const std::string& out_path) {
    const splat::SceneBundle scene = splat::load_scene(scene_dir);
    if (view < 0 || view >= static_cast<int>(scene.cameras.size())) {
        std::cerr << "error: view " << view << " out of range (scene has "
                  << scene.cameras.size() << " views)\n";
        return kExitUsage;
    }
    const splat::GaussianSet set = splat::read_ply(model_path);
    const auto out = splat::render<float>(set, scene.cameras[view], splat::RasterConfig{});
    splat::write_image(out_path, out.color);
    std::cout << "rendered view " << view << " -> " << out_path << "\n";
    return kExitOk;
}

int cmd_extract_points(const std::string& model_path, const std::string& scene_dir,
                       const std::string& out_path) {
    const splat::SceneBundle scene = splat::load_scene(scene_dir);
    const splat::GaussianSet set = splat::read_ply(model_path);
    std::vector<splat::Vec3f> points, colors;
    const splat::RasterConfig cfg;
    for (const auto& cam : scene.cameras) {
        const auto out = splat::render<float>(set, cam, cfg);
        const splat::Vec3f origin = cam.center();
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                if (out.max_contributor[static_cast<size_t>(y) * out.width + x] < 0) continue;
                const float t = out.depth.at(y, x);
                points.push_back(origin + t * cam.ray_direction(x, y));
                colors.emplace_back(out.color.at(y, x, 0), out.color.at(y, x, 1),
                                    out.color.at(y, x, 2));
            }
        }
    }
    splat::write_points_ply(out_path, points, colors);
    std::cout << "extracted " << points.size() << " depth points -> " << out_path << "\n";
    return kExitOk;
}

int cmd_simplify(const std::string& model_path, const std::string& scene_dir, double ratio,
                 double keep_q, uint64_t seed, const std::string& out_path) {
    const splat::SceneBundle scene = splat::load_scene(scene_dir);
    const splat::GaussianSet set = splat::read_ply(model_path);
    const auto importance = splat::global_importance(set, scene.cameras, splat::RasterConfig{});
    splat::SimplifyResult result;
    if (ratio > 0) {
        const int target = std::max(1, static_cast<int>(std::lround(ratio * set.size())));
        result = splat::importance_sample(set, importance.accum_weight, target, seed);
    } else {
        result = splat::importance_prune(set, importance.accum_weight, keep_q);
    }
    splat::write_ply(out_path, result.set);
    std::cout << "kept " << result.set.size() << " of " << set.size() << " gaussians -> "
              << out_path << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& scene_dir) {
    const splat::SceneBundle scene = splat::load_scene(scene_dir);
    const splat::GaussianSet set = splat::read_ply(model_path);
    const auto res = splat::evaluate(set, scene.cameras, scene.images);
    for (size_t k = 0; k < res.view_psnr.size(); ++k)
        std::cout << "view " << k << ": psnr " << res.view_psnr[k] << " dB, ssim "
                  << res.view_ssim[k] << "\n";
    std::cout << "mean psnr: " << res.mean_psnr << " dB\n";
    std::cout << "mean ssim: " << res.mean_ssim << "\n";
    if (!scene.reference_points.empty())
        std::cout << "chamfer: " << splat::chamfer(set.centers, scene.reference_points) << "\n";
    else
        std::cout << "chamfer: n/a (no reference points)\n";
    return kExitOk;
}

int cmd_gen_synthetic(uint64_t seed, int gaussians, int views, int resolution,
                      const std::string& out_dir) {
    const auto synth = splat::generate_synthetic(seed, gaussians, views, resolution);
    splat::save_scene(out_dir, synth.bundle, "pfm");
    splat::write_ply((fs::path(out_dir) / "ground_truth.ply").string(), synth.ground_truth);
    std::cout << "generated scene: " << gaussians << " gaussians, " << views << " views at "
              << resolution << "x" << resolution << " -> " << out_dir << "\n"
              << "checksum: " << std::hex << std::showbase << splat::scene_checksum(synth)
              << std::dec << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-splatting trainer with aggressive densification,\n"
                 "depth reinitialization, visibility culling and simplification"};
    app.require_subcommand(1);

    std::string scene_dir, config_path, model_path, out_path, mode_str = "msv2";
    uint64_t seed = 0;
    int desk_scale = 0, view = 0;
    int gaussians = 32, views = 24, resolution = 128;
    double ratio = 0, keep_q = 0;

    auto* train = app.add_subcommand("train", "Optimize a model on a scene directory");
    train->add_option("--scene", scene_dir, "Scene directory (manifest.json + images)")
        ->required();
    train->add_option("--config", config_path, "JSON config overriding schedule constants");
    train->add_option("--mode", mode_str, "Pipeline: msv2, msv2d or progressive")
        ->check(CLI::IsMember({"msv2", "msv2d", "progressive"}));
    train->add_option("--seed", seed, "RNG seed");
    train->add_option("--desk-scale", desk_scale, "Divide every schedule constant by this");
    train->add_option("--out", out_path, "Output directory (model.ply + log.csv)")->required();

    auto* render = app.add_subcommand("render", "Render one training view of a model");
    render->add_option("--model", model_path, "Model PLY")->required();
    render->add_option("--scene", scene_dir, "Scene directory")->required();
    render->add_option("--view", view, "View index")->required();
    render->add_option("--out", out_path, "Output image (.png/.ppm/.pfm)")->required();

    auto* extract = app.add_subcommand("extract-points",
                                       "Reproject per-pixel depth into a colored point cloud");
    extract->add_option("--model", model_path, "Model PLY")->required();
    extract->add_option("--scene", scene_dir, "Scene directory")->required();
    extract->add_option("--out", out_path, "Output points PLY")->required();

    auto* simplify = app.add_subcommand("simplify", "Reduce a model by blend-weight importance");
    simplify->add_option("--model", model_path, "Model PLY")->required();
    simplify->add_option("--scene", scene_dir, "Scene directory")->required();
    auto* ratio_opt =
        simplify->add_option("--ratio", ratio, "Sample this fraction of gaussians (stochastic)")
            ->check(CLI::Range(1e-9, 1.0));
    auto* keepq_opt =
        simplify->add_option("--keep-q", keep_q, "Keep gaussians above this importance quantile")
            ->check(CLI::Range(1e-9, 1.0));
    ratio_opt->excludes(keepq_opt);
    keepq_opt->excludes(ratio_opt);
    simplify->add_option("--seed", seed, "Sampling seed (with --ratio)");
    simplify->add_option("--out", out_path, "Output PLY")->required();

    auto* eval = app.add_subcommand("eval", "Report PSNR/SSIM/Chamfer against scene targets");
    eval->add_option("--model", model_path, "Model PLY")->required();
    eval->add_option("--scene", scene_dir, "Scene directory")->required();

    auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic benchmark scene");
    gen->add_option("--seed", seed, "RNG seed");
    gen->add_option("--gaussians", gaussians, "Ground-truth gaussian count");
    gen->add_option("--views", views, "Camera count");
    gen->add_option("--resolution", resolution, "Square image size in pixels");
    gen->add_option("--out", out_path, "Output scene directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the usage message
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed())
            return cmd_train(scene_dir, config_path, mode_str, seed, desk_scale, out_path);
        if (render->parsed()) return cmd_render(model_path, scene_dir, view, out_path);
        if (extract->parsed()) return cmd_extract_points(model_path, scene_dir, out_path);
        if (simplify->parsed()) {
            if (ratio <= 0 && keep_q <= 0) {
                std::cerr << "error: simplify needs --ratio or --keep-q\n";
                return kExitUsage;
            }
            return cmd_simplify(model_path, scene_dir, ratio, keep_q, seed, out_path);
        }
        if (eval->parsed()) return cmd_eval(model_path, scene_dir);
        if (gen->parsed()) return cmd_gen_synthetic(seed, gaussians, views, resolution, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
