#include "splat/scene_io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "splat/gaussian_set.hpp"
#include "splat/image_io.hpp"
#include "splat/ply_io.hpp"

namespace splat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

json vec_to_json(const Vec3f& v) { return json::array({v[0], v[1], v[2]}); }

Vec3f json_to_vec3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) fail(what + ": expected a 3-element array");
    return Vec3f(j[0].get<float>(), j[1].get<float>(), j[2].get<float>());
}

}  // namespace

SceneBundle load_scene(const std::string& dir) {
    const fs::path root(dir);
    const fs::path manifest_path = root / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) fail(manifest_path.string() + ": cannot open scene manifest");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::parse_error& e) {
        fail(manifest_path.string() + ": " + e.what());
    }

    SceneBundle bundle;
    if (!manifest.contains("cameras") || !manifest["cameras"].is_array() ||
        manifest["cameras"].empty())
        fail(manifest_path.string() + ": manifest needs a non-empty 'cameras' array");

    for (const auto& jc : manifest["cameras"]) {
        const int id = jc.value("id", static_cast<int>(bundle.cameras.size()));
        const auto ctx = "camera " + std::to_string(id);
        for (const char* key : {"width", "height", "fx", "fy", "cx", "cy", "rotation_wxyz",
                                "translation", "image"})
            if (!jc.contains(key)) fail(ctx + ": missing field '" + key + "'");

        Camera cam;
        cam.width = jc["width"].get<int>();
        cam.height = jc["height"].get<int>();
        cam.fx = jc["fx"].get<float>();
        cam.fy = jc["fy"].get<float>();
        cam.cx = jc["cx"].get<float>();
        cam.cy = jc["cy"].get<float>();
        cam.znear = jc.value("znear", 0.01f);
        cam.zfar = jc.value("zfar", 100.f);

        const auto& jq = jc["rotation_wxyz"];
        if (!jq.is_array() || jq.size() != 4) fail(ctx + ": rotation_wxyz must have 4 entries");
        Vec4f q(jq[0].get<float>(), jq[1].get<float>(), jq[2].get<float>(), jq[3].get<float>());
        if (std::abs(q.norm() - 1.f) > 1e-3f) {
            std::ostringstream msg;
            msg << ctx << ": rotation quaternion norm " << q.norm() << " is not unit";
            fail(msg.str());
        }
        cam.rotation = rotation_from_quat(q);
        cam.translation = json_to_vec3(jc["translation"], ctx + ": translation");

        const fs::path img_path = root / jc["image"].get<std::string>();
        if (!fs::exists(img_path)) fail(ctx + ": image file missing: " + img_path.string());
        Imagef img = read_image(img_path.string());
        if (img.width != cam.width || img.height != cam.height) {
            std::ostringstream msg;
            msg << ctx << ": image " << img_path.string() << " is " << img.width << "x"
                << img.height << " but the camera says " << cam.width << "x" << cam.height;
            fail(msg.str());
        }
        cam.validate();
        bundle.cameras.push_back(cam);
        bundle.images.push_back(std::move(img));
    }

    if (!manifest.contains("points")) fail(manifest_path.string() + ": manifest needs 'points'");
    const fs::path points_path = root / manifest["points"].get<std::string>();
    if (!fs::exists(points_path)) fail("points file missing: " + points_path.string());
    PointCloud pc = read_points_ply(points_path.string());
    bundle.init_points = std::move(pc.points);
    bundle.init_colors = std::move(pc.colors);

    if (manifest.contains("reference_points")) {
        const fs::path ref_path = root / manifest["reference_points"].get<std::string>();
        if (!fs::exists(ref_path)) fail("reference points file missing: " + ref_path.string());
        bundle.reference_points = read_points_ply(ref_path.string()).points;
    }
    return bundle;
}

void save_scene(const std::string& dir, const SceneBundle& bundle, const std::string& image_ext) {
    if (bundle.cameras.size() != bundle.images.size())
        fail("save_scene: camera/image count mismatch");
    const fs::path root(dir);
    fs::create_directories(root);

    json cameras = json::array();
    for (size_t k = 0; k < bundle.cameras.size(); ++k) {
        const Camera& cam = bundle.cameras[k];
        std::ostringstream name;
        name << "view_" << std::setw(3) << std::setfill('0') << k << "." << image_ext;
        write_image((root / name.str()).string(), bundle.images[k]);

        const Eigen::Quaternionf q(cam.rotation);
        json jc;
        jc["id"] = static_cast<int>(k);
        jc["width"] = cam.width;
        jc["height"] = cam.height;
        jc["fx"] = cam.fx;
        jc["fy"] = cam.fy;
        jc["cx"] = cam.cx;
        jc["cy"] = cam.cy;
        jc["znear"] = cam.znear;
        jc["zfar"] = cam.zfar;
        jc["rotation_wxyz"] = json::array({q.w(), q.x(), q.y(), q.z()});
        jc["translation"] = vec_to_json(cam.translation);
        jc["image"] = name.str();
        cameras.push_back(jc);
    }

    json manifest;
    manifest["cameras"] = cameras;
    manifest["points"] = "points.ply";
    write_points_ply((root / "points.ply").string(), bundle.init_points, bundle.init_colors);
    if (!bundle.reference_points.empty()) {
        manifest["reference_points"] = "reference.ply";
        std::vector<Vec3f> grey(bundle.reference_points.size(), Vec3f::Constant(0.5f));
        write_points_ply((root / "reference.ply").string(), bundle.reference_points, grey);
    }

    std::ofstream out(root / "manifest.json");
    if (!out) fail("save_scene: cannot write manifest");
    out << manifest.dump(2) << "\n";
}

}  // namespace splat
