// Disk formats: Gaussian PLY, point-cloud PLY, PPM/PFM/PNG images, scene
// directories, and the deterministic synthetic benchmark generator.

#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "splat/image_io.hpp"
#include "splat/ply_io.hpp"
#include "splat/scene_io.hpp"
#include "splat/synthetic.hpp"
#include "test_utils.hpp"

using namespace splat;
namespace tu = splat::testutil;
namespace fs = std::filesystem;

namespace {

// Per-case scratch directory, removed on destruction.
struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("splat_io_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

bool same_bits(float a, float b) {
    uint32_t ua, ub;
    std::memcpy(&ua, &a, 4);
    std::memcpy(&ub, &b, 4);
    return ua == ub;
}

bool sets_bit_identical(const GaussianSet& a, const GaussianSet& b) {
    if (a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i) {
        for (int k = 0; k < 3; ++k)
            if (!same_bits(a.centers[i][k], b.centers[i][k]) ||
                !same_bits(a.log_scales[i][k], b.log_scales[i][k]))
                return false;
        for (int k = 0; k < 4; ++k)
            if (!same_bits(a.rotations[i][k], b.rotations[i][k])) return false;
        if (!same_bits(a.opacity_logits[i], b.opacity_logits[i])) return false;
        for (int k = 0; k < kShValueCount; ++k)
            if (!same_bits(a.sh_at(i)[k], b.sh_at(i)[k])) return false;
    }
    return true;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("gaussian ply round trip is bit exact under fuzzing") {
    ScratchDir dir("fuzz");
    std::mt19937 rng(314);
    std::uniform_int_distribution<int> size_pick(0, 20);
    std::uniform_real_distribution<float> wild(-1e6f, 1e6f);
    for (int trial = 0; trial < 120; ++trial) {
        const int n = size_pick(rng);
        GaussianSet set = tu::random_set<float>(rng, n);
        if (n > 0) {
            // Adversarial values that naive text round trips would mangle.
            set.centers[0][0] = -0.0f;
            set.centers[0][1] = 1e-42f;  // subnormal
            set.opacity_logits[0] = wild(rng);
            set.sh_at(0)[17] = -3.402e38f;
        }
        const std::string path = dir.file("g.ply");
        write_ply(path, set);
        const GaussianSet back = read_ply(path);
        REQUIRE(sets_bit_identical(set, back));
    }
}

TEST_CASE("gaussian ply byte layout matches the interchange convention") {
    ScratchDir dir("layout");
    GaussianSet set;
    set.resize(2);
    set.centers[0] = Vec3f(1.f, 2.f, 3.f);
    for (int k = 0; k < kShValueCount; ++k) set.sh_at(0)[k] = float(k);
    set.opacity_logits[0] = 7.f;
    set.log_scales[0] = Vec3f(-1.f, -2.f, -3.f);
    set.rotations[0] = Vec4f(0.5f, -0.5f, 0.5f, -0.5f);
    const std::string path = dir.file("layout.ply");
    write_ply(path, set);

    const std::string bytes = slurp(path);
    const std::string header_end = "end_header\n";
    const size_t data_at = bytes.find(header_end) + header_end.size();
    REQUIRE(data_at != std::string::npos + header_end.size());

    const std::string header = bytes.substr(0, data_at);
    CHECK(header.rfind("ply\nformat binary_little_endian 1.0\nelement vertex 2\n", 0) == 0);
    // 62 float properties per vertex: 3 position + 3 normal + 3 DC + 45 rest
    // + 1 opacity + 3 scale + 4 rotation.
    CHECK(std::count(header.begin(), header.end(), '\n') == 3 + 62 + 1);
    CHECK(header.find("property float f_dc_2\nproperty float f_rest_0\n") != std::string::npos);
    CHECK(header.find("property float f_rest_44\nproperty float opacity\n") != std::string::npos);
    CHECK(header.find("property float rot_3\n") != std::string::npos);
    REQUIRE(bytes.size() == data_at + 2u * 62u * 4u);

    std::vector<float> row(62);
    std::memcpy(row.data(), bytes.data() + data_at, 62 * 4);
    CHECK(row[0] == 1.f);  // x y z
    CHECK(row[2] == 3.f);
    CHECK(row[3] == 0.f);  // normals zeroed
    CHECK(row[5] == 0.f);
    CHECK(row[6] == 0.f);  // DC = first three stored values
    CHECK(row[7] == 1.f);
    CHECK(row[8] == 2.f);
    // Rest coefficients are channel-major on disk while storage interleaves
    // channels per coefficient: f_rest_j for channel c, coefficient k = j%15+1
    // must equal stored sh[3k + c].
    CHECK(row[9] == 3.f);        // f_rest_0  -> coeff 1, R
    CHECK(row[10] == 6.f);       // f_rest_1  -> coeff 2, R
    CHECK(row[23] == 45.f);      // f_rest_14 -> coeff 15, R
    CHECK(row[9 + 15] == 4.f);   // f_rest_15 -> coeff 1, G
    CHECK(row[9 + 30] == 5.f);   // f_rest_30 -> coeff 1, B
    CHECK(row[9 + 44] == 47.f);  // f_rest_44 -> coeff 15, B
    CHECK(row[54] == 7.f);       // opacity logit
    CHECK(row[55] == -1.f);      // log scales
    CHECK(row[57] == -3.f);
    CHECK(row[58] == 0.5f);  // quaternion w,x,y,z
    CHECK(row[61] == -0.5f);
}

TEST_CASE("empty gaussian ply round trips") {
    ScratchDir dir("empty");
    GaussianSet set;
    const std::string path = dir.file("empty.ply");
    write_ply(path, set);
    const GaussianSet back = read_ply(path);
    CHECK(back.size() == 0);
    CHECK_NOTHROW(back.check_consistent());
}

TEST_CASE("gaussian ply parse failures carry the byte offset") {
    ScratchDir dir("bad");
    std::mt19937 rng(9);
    const GaussianSet set = tu::random_set<float>(rng, 3);
    const std::string good = dir.file("good.ply");
    write_ply(good, set);
    const std::string bytes = slurp(good);

    auto write_raw = [&](const std::string& name, const std::string& content) {
        const std::string p = dir.file(name);
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    };

    // Truncated payload: error names the byte where the short vertex began.
    const std::string trunc = write_raw("trunc.ply", bytes.substr(0, bytes.size() - 10));
    CHECK_THROWS_WITH_AS(read_ply(trunc), doctest::Contains("truncated vertex data"),
                         std::runtime_error);
    try {
        read_ply(trunc);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("at byte") != std::string::npos);
    }

    // Wrong magic.
    std::string wrong = bytes;
    wrong[0] = 'q';
    CHECK_THROWS_WITH_AS(read_ply(write_raw("magic.ply", wrong)),
                         doctest::Contains("missing 'ply' magic"), std::runtime_error);

    // ASCII variant is not supported.
    std::string ascii = bytes;
    const std::string bin = "binary_little_endian";
    ascii.replace(ascii.find(bin), bin.size(), "ascii");
    CHECK_THROWS_WITH_AS(read_ply(write_raw("ascii.ply", ascii)),
                         doctest::Contains("unsupported format"), std::runtime_error);

    // A property missing from the schema.
    std::string missing = bytes;
    const std::string op = "property float opacity\n";
    missing.replace(missing.find(op), op.size(), "");
    CHECK_THROWS_WITH_AS(read_ply(write_raw("missing.ply", missing)),
                         doctest::Contains("expected 62 vertex properties"), std::runtime_error);

    CHECK_THROWS_AS(read_ply(dir.file("nonexistent.ply")), std::runtime_error);
}

TEST_CASE("point cloud ply keeps positions exact and quantizes colors") {
    ScratchDir dir("points");
    std::mt19937 rng(12);
    std::uniform_real_distribution<float> u(-5.f, 5.f);
    std::uniform_real_distribution<float> uc(0.f, 1.f);
    std::vector<Vec3f> pts(17), cols(17);
    for (auto& p : pts) p = Vec3f(u(rng), u(rng), u(rng));
    for (auto& c : cols) c = Vec3f(uc(rng), uc(rng), uc(rng));
    pts[0][0] = -0.0f;

    const std::string path = dir.file("pc.ply");
    write_points_ply(path, pts, cols);

    const std::string header = slurp(path).substr(0, 200);
    CHECK(header.find("property uchar red") != std::string::npos);

    const PointCloud back = read_points_ply(path);
    REQUIRE(back.points.size() == 17);
    for (size_t i = 0; i < pts.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            CHECK(same_bits(back.points[i][k], pts[i][k]));
            // Colors survive 8-bit quantization to within half a step.
            CHECK(std::abs(back.colors[i][k] - cols[i][k]) <= 0.5f / 255.f + 1e-7f);
        }
    }

    // Re-saving the quantized colors is lossless from then on.
    const std::string path2 = dir.file("pc2.ply");
    write_points_ply(path2, back.points, back.colors);
    const PointCloud twice = read_points_ply(path2);
    for (size_t i = 0; i < pts.size(); ++i)
        for (int k = 0; k < 3; ++k) CHECK(twice.colors[i][k] == back.colors[i][k]);

    // Bare x,y,z clouds read with a neutral default color.
    std::ofstream bare(dir.file("bare.ply"), std::ios::binary);
    bare << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
         << "property float x\nproperty float y\nproperty float z\nend_header\n";
    const float xyz[3] = {1.f, 2.f, 3.f};
    bare.write(reinterpret_cast<const char*>(xyz), 12);
    bare.close();
    const PointCloud bare_pc = read_points_ply(dir.file("bare.ply"));
    REQUIRE(bare_pc.points.size() == 1);
    CHECK(bare_pc.points[0] == Vec3f(1.f, 2.f, 3.f));
    CHECK(bare_pc.colors[0] == Vec3f::Constant(0.5f));

    CHECK_THROWS_AS(write_points_ply(dir.file("x.ply"), pts, {}), std::invalid_argument);
}

TEST_CASE("ppm writes canonical P6 bytes and survives quantization") {
    ScratchDir dir("ppm");
    Imagef img(2, 2, 3);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = float(i * 20) / 255.f;
    const std::string path = dir.file("img.ppm");
    write_ppm(path, img);

    const std::string bytes = slurp(path);
    REQUIRE(bytes.size() == 11 + 12);
    CHECK(bytes.rfind("P6\n2 2\n255\n", 0) == 0);
    for (int i = 0; i < 12; ++i) CHECK(uint8_t(bytes[11 + i]) == i * 20);

    // k/255 values round trip exactly.
    const Imagef back = read_ppm(path);
    REQUIRE(back.same_shape(img));
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);

    // Arbitrary values come back within half a quantization step; out-of-range
    // values clamp.
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> u(-0.2f, 1.2f);
    Imagef noisy(5, 4, 3);
    for (auto& v : noisy.data) v = u(rng);
    write_ppm(path, noisy);
    const Imagef nb = read_ppm(path);
    for (size_t i = 0; i < noisy.data.size(); ++i) {
        const float clamped = std::min(1.f, std::max(0.f, noisy.data[i]));
        CHECK(std::abs(nb.data[i] - clamped) <= 0.5f / 255.f + 1e-7f);
    }

    CHECK_THROWS_AS(read_ppm(dir.file("nope.ppm")), std::runtime_error);
}

TEST_CASE("pfm is lossless and stores rows bottom to top") {
    ScratchDir dir("pfm");
    std::mt19937 rng(8);
    std::uniform_real_distribution<float> u(-10.f, 10.f);
    Imagef img(5, 4, 3);
    for (auto& v : img.data) v = u(rng);
    img.data[0] = -0.0f;
    img.data[1] = 1e-42f;

    const std::string path = dir.file("img.pfm");
    write_pfm(path, img);
    const Imagef back = read_pfm(path);
    REQUIRE(back.same_shape(img));
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(same_bits(back.data[i], img.data[i]));

    // Header and row order: the first payload row is the bottom image row.
    Imagef two(1, 2, 3);
    for (int c = 0; c < 3; ++c) {
        two.at(0, 0, c) = 0.25f;  // top row
        two.at(1, 0, c) = 0.75f;  // bottom row
    }
    const std::string tiny = dir.file("two.pfm");
    write_pfm(tiny, two);
    const std::string bytes = slurp(tiny);
    CHECK(bytes.rfind("PF\n1 2\n-1.0\n", 0) == 0);
    const size_t data_at = bytes.size() - 2u * 3u * 4u;
    float first_row[3];
    std::memcpy(first_row, bytes.data() + data_at, 12);
    CHECK(first_row[0] == 0.75f);

    CHECK_THROWS_AS(read_pfm(dir.file("nope.pfm")), std::runtime_error);
}

TEST_CASE("png round trips through 8-bit quantization") {
    ScratchDir dir("png");
    Imagef img(6, 3, 3);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = float((i * 7) % 256) / 255.f;
    const std::string path = dir.file("img.png");
    write_png(path, img);
    const Imagef back = read_png(path);
    REQUIRE(back.same_shape(img));
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);

    std::mt19937 rng(4);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    Imagef noisy(9, 7, 3);
    for (auto& v : noisy.data) v = u(rng);
    write_png(path, noisy);
    const Imagef nb = read_png(path);
    for (size_t i = 0; i < noisy.data.size(); ++i)
        CHECK(std::abs(nb.data[i] - noisy.data[i]) <= 0.5f / 255.f + 1e-7f);

    CHECK_THROWS_AS(read_png(dir.file("nope.png")), std::runtime_error);
}

TEST_CASE("read_image and write_image dispatch on the extension") {
    ScratchDir dir("dispatch");
    Imagef img(3, 2, 3);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = float(i) / 32.f;

    for (const char* ext : {"pfm", "ppm", "png"}) {
        const std::string path = dir.file(std::string("img.") + ext);
        write_image(path, img);
        const Imagef back = read_image(path);
        REQUIRE(back.same_shape(img));
        for (size_t i = 0; i < img.data.size(); ++i)
            CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5f / 255.f + 1e-7f);
    }
    CHECK_THROWS_WITH_AS(write_image(dir.file("img.tiff"), img),
                         doctest::Contains("unsupported image extension"), std::runtime_error);
    CHECK_THROWS_AS(read_image(dir.file("img.bmp")), std::runtime_error);
}

TEST_CASE("scene directory round trips cameras, targets and points") {
    ScratchDir dir("scene");
    const SyntheticScene synth = generate_synthetic(3, 6, 3, 16);
    const SceneBundle& b = synth.bundle;
    save_scene(dir.file("s"), b, "pfm");
    const SceneBundle back = load_scene(dir.file("s"));

    REQUIRE(back.cameras.size() == b.cameras.size());
    REQUIRE(back.images.size() == b.images.size());
    for (size_t k = 0; k < b.cameras.size(); ++k) {
        const Camera& a = b.cameras[k];
        const Camera& c = back.cameras[k];
        CHECK(a.width == c.width);
        CHECK(a.height == c.height);
        CHECK(a.fx == doctest::Approx(c.fx).epsilon(1e-6));
        CHECK(a.cy == doctest::Approx(c.cy).epsilon(1e-6));
        CHECK((a.rotation - c.rotation).cwiseAbs().maxCoeff() < 1e-6f);
        CHECK((a.translation - c.translation).cwiseAbs().maxCoeff() < 1e-6f);
        // PFM targets are lossless.
        REQUIRE(back.images[k].same_shape(b.images[k]));
        for (size_t i = 0; i < b.images[k].data.size(); ++i)
            CHECK(same_bits(back.images[k].data[i], b.images[k].data[i]));
    }
    REQUIRE(back.init_points.size() == b.init_points.size());
    for (size_t i = 0; i < b.init_points.size(); ++i)
        CHECK(back.init_points[i] == b.init_points[i]);
    REQUIRE(back.reference_points.size() == b.reference_points.size());
    for (size_t i = 0; i < b.reference_points.size(); ++i)
        CHECK(back.reference_points[i] == b.reference_points[i]);
}

TEST_CASE("scene loader rejects broken manifests with context") {
    ScratchDir dir("scene_err");
    const SyntheticScene synth = generate_synthetic(5, 4, 2, 8);
    const std::string root = dir.file("s");
    save_scene(root, synth.bundle, "pfm");

    const std::string manifest_path = root + "/manifest.json";
    const auto load_manifest = [&] {
        std::ifstream in(manifest_path);
        nlohmann::json j;
        in >> j;
        return j;
    };
    const auto store_manifest = [&](const nlohmann::json& j) {
        std::ofstream out(manifest_path);
        out << j.dump(2);
    };
    const nlohmann::json original = load_manifest();

    // Non-unit rotation quaternion: error names the camera.
    nlohmann::json bad = original;
    bad["cameras"][1]["rotation_wxyz"] = {0.5, 0.0, 0.0, 0.0};
    store_manifest(bad);
    CHECK_THROWS_WITH_AS(load_scene(root), doctest::Contains("camera 1"), std::runtime_error);
    try {
        load_scene(root);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("not unit") != std::string::npos);
    }

    // Missing intrinsics field.
    bad = original;
    bad["cameras"][0].erase("fx");
    store_manifest(bad);
    CHECK_THROWS_WITH_AS(load_scene(root), doctest::Contains("missing field 'fx'"),
                         std::runtime_error);

    // Camera/image resolution disagreement.
    bad = original;
    bad["cameras"][0]["width"] = 13;
    bad["cameras"][0]["cx"] = 6.5;
    store_manifest(bad);
    CHECK_THROWS_WITH_AS(load_scene(root), doctest::Contains("but the camera says"),
                         std::runtime_error);

    // Referenced image file gone.
    store_manifest(original);
    const std::string img0 = root + "/" + original["cameras"][0]["image"].get<std::string>();
    fs::remove(img0);
    CHECK_THROWS_WITH_AS(load_scene(root), doctest::Contains("image file missing"),
                         std::runtime_error);

    // No manifest at all.
    CHECK_THROWS_WITH_AS(load_scene(dir.file("does_not_exist")),
                         doctest::Contains("cannot open scene manifest"), std::runtime_error);
}

TEST_CASE("synthetic benchmark is deterministic with a pinned identity") {
    const SyntheticScene a = generate_synthetic(7, 32, 24, 128);
    const SyntheticScene b = generate_synthetic(7, 32, 24, 128);

    // The shipped benchmark's identity; a change here invalidates every
    // recorded training number, so it must never move silently.
    CHECK(scene_checksum(a) == 0xc0639c59d38d76c7ULL);
    CHECK(scene_checksum(b) == scene_checksum(a));

    REQUIRE(a.ground_truth.size() == 32);
    REQUIRE(a.bundle.cameras.size() == 24);
    REQUIRE(a.bundle.images.size() == 24);
    CHECK(a.bundle.images[0].width == 128);
    CHECK(a.bundle.images[0].height == 128);
    for (size_t i = 0; i < a.bundle.images[5].data.size(); ++i)
        REQUIRE(same_bits(a.bundle.images[5].data[i], b.bundle.images[5].data[i]));

    // Reference geometry is exactly the true centers; the initial cloud is a
    // quarter-size noisy subset.
    REQUIRE(a.bundle.reference_points.size() == 32);
    for (int i = 0; i < 32; ++i) CHECK(a.bundle.reference_points[i] == a.ground_truth.centers[i]);
    CHECK(a.bundle.init_points.size() == 8);
    CHECK(a.bundle.init_colors.size() == 8);

    // Ground truth stays inside its documented envelope.
    for (int i = 0; i < 32; ++i) {
        const float alpha = a.ground_truth.opacity(i);
        CHECK(alpha >= 0.8f);
        CHECK(alpha <= 0.99f);
        CHECK(a.ground_truth.centers[i].cwiseAbs().maxCoeff() <= 1.f);
    }
    for (const Camera& cam : a.bundle.cameras) CHECK_NOTHROW(cam.validate());

    // A different seed is a different scene.
    CHECK(scene_checksum(generate_synthetic(8, 32, 24, 128)) != scene_checksum(a));
}

TEST_SUITE_END();
