#include "glarefuse/synth.hpp"

#include "glarefuse/benchmark.hpp"
#include "glarefuse/detection_io.hpp"
#include "glarefuse/glare_mask.hpp"
#include "glarefuse/image_io.hpp"
#include "glarefuse/inpaint.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

using namespace glarefuse;
namespace fs = std::filesystem;

namespace {

double region_luma(const ImageBuffer& img, const Box& b) {
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x_min)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y_min)));
    const int x1 = std::min(img.width, static_cast<int>(std::ceil(b.x_max)));
    const int y1 = std::min(img.height, static_cast<int>(std::ceil(b.y_max)));
    double sum = 0.0;
    int n = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            if (img.channels == 1)
                sum += img.at(x, y, 0);
            else
                sum += 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                       0.114 * img.at(x, y, 2);
            ++n;
        }
    return n > 0 ? sum / n : 0.0;
}

SceneSpec small_spec(std::uint64_t seed) {
    SceneSpec s;
    s.seed = seed;
    s.width = 128;
    s.height = 128;
    s.n_heads = 6;
    s.n_glare = 2;
    return s;
}

std::string box_key(const Box& b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.9f,%.9f,%.9f,%.9f,%.9f", b.x_min, b.y_min, b.x_max,
                  b.y_max, b.score);
    return buf;
}

}  // namespace

TEST_CASE("scene generation is deterministic in the seed") {
    const Scene a = generate_scene(small_spec(17));
    const Scene b = generate_scene(small_spec(17));
    CHECK(a.image == b.image);
    CHECK(a.truth.boxes == b.truth.boxes);
    CHECK(a.glare_regions == b.glare_regions);
    const Scene c = generate_scene(small_spec(18));
    CHECK(a.image != c.image);
}

TEST_CASE("scenes deliver the requested structure") {
    const SceneSpec spec = small_spec(5);
    const Scene s = generate_scene(spec);
    CHECK(s.image.width == 128);
    CHECK(s.image.channels == 3);
    CHECK(static_cast<int>(s.truth.boxes.size()) == spec.n_heads);
    CHECK(static_cast<int>(s.glare_regions.size()) == spec.n_glare);
    CHECK(s.truth.domain == spec.domain);
    for (const Box& b : s.truth.boxes) {
        CHECK(b.x_min >= 0);
        CHECK(b.y_min >= 0);
        CHECK(b.x_max <= 128);
        CHECK(b.y_max <= 128);
    }
}

TEST_CASE("glare cores are bright enough to mask, targets are not") {
    const Scene s = generate_scene(small_spec(23));
    for (const Box& g : s.glare_regions) CHECK(region_luma(s.image, g) > 170.0);
    for (const Box& h : s.truth.boxes) CHECK(region_luma(s.image, h) < 170.0);
}

TEST_CASE("the mask chain finds synthetic glare and inpainting removes it") {
    const Scene s = generate_scene(small_spec(29));
    const GrayMask mask = build_mask(s.image, MaskParams{});
    CHECK(mask.count() > 0);
    const ImageBuffer fixed = inpaint_ns(s.image, mask);
    for (const Box& g : s.glare_regions) CHECK(region_luma(fixed, g) <= 170.0);
    // targets never get masked away: their boxes stay recognisably dark
    for (const Box& h : s.truth.boxes) CHECK(region_luma(fixed, h) < 170.0);
}

TEST_CASE("scene validation rejects out-of-band recipes") {
    SceneSpec s = small_spec(1);
    s.glare_intensity_min = 150;  // below the maskable band
    CHECK_THROWS_AS(generate_scene(s), std::invalid_argument);
    s = small_spec(1);
    s.head_intensity_min = 200;
    s.head_intensity_max = 150;  // inverted
    CHECK_THROWS_AS(generate_scene(s), std::invalid_argument);
    s = small_spec(1);
    s.width = 0;
    CHECK_THROWS_AS(generate_scene(s), std::invalid_argument);
    s = small_spec(1);
    s.n_heads = -1;
    CHECK_THROWS_AS(generate_scene(s), std::invalid_argument);
    s = small_spec(1);
    s.domain.clear();
    CHECK_THROWS_AS(generate_scene(s), std::invalid_argument);
}

TEST_CASE("simulated detections are deterministic in the seed") {
    const Scene s = generate_scene(small_spec(31));
    const DetectionSet a = simulate_detector(s.image, s.truth, s.glare_regions, {}, 7);
    const DetectionSet b = simulate_detector(s.image, s.truth, s.glare_regions, {}, 7);
    CHECK(a.boxes == b.boxes);
    const DetectionSet c = simulate_detector(s.image, s.truth, s.glare_regions, {}, 8);
    CHECK(a.boxes != c.boxes);
}

TEST_CASE("scores separate true hits from spurious boxes") {
    const Scene s = generate_scene(small_spec(37));
    SimDetectorSpec spec;
    spec.base_fp_rate = 0.3;
    const DetectionSet d = simulate_detector(s.image, s.truth, s.glare_regions, spec, 11);
    CHECK(!d.boxes.empty());
    for (const Box& b : d.boxes) {
        const bool tp_band = b.score >= spec.tp_score_min && b.score <= spec.tp_score_max;
        const bool fp_band = b.score >= spec.fp_score_min && b.score <= spec.fp_score_max;
        CHECK((tp_band || fp_band));
        CHECK(b.x_min >= 0);
        CHECK(b.y_min >= 0);
        CHECK(b.x_max <= s.image.width);
        CHECK(b.y_max <= s.image.height);
    }
}

TEST_CASE("only the brightness gate differs between variants") {
    // Same seed on the original and on the inpainted image: every box found
    // on the corrected image must also exist on the original, and the extras
    // on the original must all be spurious-score glare boxes.
    const Scene s = generate_scene(small_spec(41));
    const GrayMask mask = build_mask(s.image, MaskParams{});
    const ImageBuffer fixed = inpaint_ns(s.image, mask);
    SimDetectorSpec spec;
    spec.glare_fp_rate = 1.0;
    const DetectionSet on_orig = simulate_detector(s.image, s.truth, s.glare_regions, spec, 3);
    const DetectionSet on_fixed = simulate_detector(fixed, s.truth, s.glare_regions, spec, 3);

    std::set<std::string> orig_keys, fixed_keys;
    for (const Box& b : on_orig.boxes) orig_keys.insert(box_key(b));
    for (const Box& b : on_fixed.boxes) fixed_keys.insert(box_key(b));
    for (const auto& k : fixed_keys) CHECK(orig_keys.count(k) == 1);
    CHECK(orig_keys.size() >= fixed_keys.size());
    CHECK(orig_keys.size() - fixed_keys.size() <= s.glare_regions.size());
    int dropped_high_score = 0;
    for (const Box& b : on_orig.boxes)
        if (!fixed_keys.count(box_key(b)) && b.score > spec.fp_score_max) ++dropped_high_score;
    CHECK(dropped_high_score == 0);
}

TEST_CASE("extreme rates behave as advertised") {
    const Scene s = generate_scene(small_spec(43));
    SimDetectorSpec spec;
    spec.tp_rate = 0.0;
    spec.glare_fp_rate = 0.0;
    spec.base_fp_rate = 0.0;
    CHECK(simulate_detector(s.image, s.truth, s.glare_regions, spec, 1).boxes.empty());
    spec.tp_rate = 1.0;
    const DetectionSet all = simulate_detector(s.image, s.truth, s.glare_regions, spec, 1);
    CHECK(all.boxes.size() == s.truth.boxes.size());
}

TEST_CASE("detector spec validation") {
    const Scene s = generate_scene(small_spec(47));
    SimDetectorSpec spec;
    spec.tp_rate = 1.5;
    CHECK_THROWS_AS(simulate_detector(s.image, s.truth, s.glare_regions, spec, 1),
                    std::invalid_argument);
    spec = {};
    spec.jitter = -1.0;
    CHECK_THROWS_AS(simulate_detector(s.image, s.truth, s.glare_regions, spec, 1),
                    std::invalid_argument);
    spec = {};
    spec.fp_score_min = 0.7;  // spurious band must sit below the true band
    spec.fp_score_max = 0.99;
    CHECK_THROWS_AS(simulate_detector(s.image, s.truth, s.glare_regions, spec, 1),
                    std::invalid_argument);
}

TEST_CASE("benchmark writer lays out a loadable dataset") {
    const fs::path dir = fs::temp_directory_path() / "glarefuse_test_bench";
    fs::remove_all(dir);
    BenchmarkSpec spec;
    spec.out_dir = dir;
    spec.domains = 2;
    spec.images_per_domain = 2;
    spec.scene.width = 96;
    spec.scene.height = 96;
    spec.scene.n_heads = 4;
    spec.scene.n_glare = 1;
    write_benchmark(spec);

    std::vector<GroundTruth> truths = load_ground_truths((dir / "truth.jsonl").string());
    REQUIRE(truths.size() == 4);
    std::set<std::string> domains;
    for (const auto& t : truths) {
        domains.insert(t.domain);
        CHECK(fs::exists(dir / "images" / (t.image_id + ".png")));
        const ImageBuffer img = read_image((dir / "images" / (t.image_id + ".png")).string());
        CHECK(img.width == 96);
    }
    CHECK(domains.size() == 2);
    const auto regions = load_region_map((dir / "glare.jsonl").string());
    CHECK(regions.size() == 4);

    // byte-identical on re-generation
    const fs::path dir2 = fs::temp_directory_path() / "glarefuse_test_bench2";
    fs::remove_all(dir2);
    BenchmarkSpec spec2 = spec;
    spec2.out_dir = dir2;
    write_benchmark(spec2);
    CHECK(read_text_file((dir / "truth.jsonl").string()) ==
          read_text_file((dir2 / "truth.jsonl").string()));
    CHECK(read_image((dir / "images/dom0_000.png").string()) ==
          read_image((dir2 / "images/dom0_000.png").string()));
    fs::remove_all(dir);
    fs::remove_all(dir2);
}
