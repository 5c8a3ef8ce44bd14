#include "glarefuse/detection_io.hpp"
#include "glarefuse/image_io.hpp"

#include "glarefuse/rng.hpp"

#include <doctest.h>

#include <jpeglib.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

using namespace glarefuse;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "glarefuse_test_io";
    fs::create_directories(dir);
    return dir;
}

ImageBuffer random_image(int w, int h, int channels, SplitRng& rng) {
    ImageBuffer img(w, h, channels);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return img;
}

// Minimal baseline-JPEG writer so the reader can be tested against a real
// encoder rather than against our own code.
void write_solid_jpeg(const fs::path& path, int w, int h, std::uint8_t r, std::uint8_t g,
                      std::uint8_t b) {
    jpeg_compress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    FILE* f = std::fopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    jpeg_stdio_dest(&cinfo, f);
    cinfo.image_width = w;
    cinfo.image_height = h;
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, 100, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
    for (int x = 0; x < w; ++x) {
        row[3 * x] = r;
        row[3 * x + 1] = g;
        row[3 * x + 2] = b;
    }
    JSAMPROW rows[1] = {row.data()};
    while (cinfo.next_scanline < cinfo.image_height) jpeg_write_scanlines(&cinfo, rows, 1);
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    std::fclose(f);
}

}  // namespace

TEST_CASE("png round-trips rgb and gray pixels exactly") {
    SplitRng rng(808);
    const fs::path dir = scratch();
    const ImageBuffer rgb = random_image(31, 22, 3, rng);
    write_png(dir / "rgb.png", rgb);
    CHECK(read_image(dir / "rgb.png") == rgb);

    const ImageBuffer gray = random_image(17, 9, 1, rng);
    write_png(dir / "gray.png", gray);
    CHECK(read_image(dir / "gray.png") == gray);
}

TEST_CASE("jpeg files from a real encoder decode to the expected colour") {
    const fs::path dir = scratch();
    write_solid_jpeg(dir / "solid.jpg", 16, 12, 200, 80, 40);
    const ImageBuffer img = read_image(dir / "solid.jpg");
    CHECK(img.width == 16);
    CHECK(img.height == 12);
    CHECK(img.channels == 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            CHECK(std::abs(img.at(x, y, 0) - 200) <= 4);
            CHECK(std::abs(img.at(x, y, 1) - 80) <= 4);
            CHECK(std::abs(img.at(x, y, 2) - 40) <= 4);
        }
}

TEST_CASE("unrecognised or missing files are rejected") {
    const fs::path dir = scratch();
    write_text_file(dir / "junk.png", "definitely not a png");
    CHECK_THROWS_AS(read_image(dir / "junk.png"), std::runtime_error);
    CHECK_THROWS_AS(read_image(dir / "no_such_file.png"), std::runtime_error);
}

TEST_CASE("detection sets round-trip through json exactly") {
    DetectionSet s;
    s.image_id = "img_007";
    s.source_id = "inpainted";
    s.model_weight = 2.5;
    s.boxes = {Box{1.25, 2.5, 10.125, 20.0625, 0.87654321, 0},
               Box{5, 6, 7, 8, 0.25, 3}};
    const DetectionSet back = detection_set_from_json(detection_set_to_json(s));
    CHECK(back.image_id == s.image_id);
    CHECK(back.source_id == s.source_id);
    CHECK(back.model_weight == s.model_weight);
    CHECK(back.boxes == s.boxes);
}

TEST_CASE("boxes parse with defaulted score and label") {
    const Box b = box_from_json(nlohmann::json::parse(R"({"bbox": [0, 1, 2, 3]})"));
    CHECK(b.score == 1.0);
    CHECK(b.label == 0);
    CHECK_THROWS(box_from_json(nlohmann::json::parse(R"({"bbox": [0, 1, 2]})")));
}

TEST_CASE("ground truth domains default when missing or blank") {
    GroundTruth gt = ground_truth_from_json(
        nlohmann::json::parse(R"({"image_id": "a", "boxes": [{"bbox": [0,0,5,5]}]})"));
    CHECK(gt.domain == "default");
    gt = ground_truth_from_json(nlohmann::json::parse(
        R"({"image_id": "a", "domain": "", "boxes": [{"bbox": [0,0,5,5]}]})"));
    CHECK(gt.domain == "default");
    gt = ground_truth_from_json(nlohmann::json::parse(
        R"({"image_id": "a", "domain": "indoor", "boxes": []})"));
    CHECK(gt.domain == "indoor");
    CHECK(gt.boxes.empty());
}

TEST_CASE("jsonl loader skips blank lines and reports bad ones by position") {
    const fs::path dir = scratch();
    const fs::path file = dir / "dets.jsonl";
    write_text_file(file,
                    R"({"image_id": "a", "source_id": "m", "boxes": []})"
                    "\n\n"
                    R"({"image_id": "b", "source_id": "m", "boxes": []})"
                    "\n");
    const std::vector<DetectionSet> sets = load_detection_sets(file);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].image_id == "a");
    CHECK(sets[1].image_id == "b");

    write_text_file(file, "{\"image_id\": \"a\", \"source_id\": \"m\", \"boxes\": []}\nnot json\n");
    try {
        load_detection_sets(file);
        FAIL("expected a parse failure");
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2") != std::string::npos);  // line number
    }
}

TEST_CASE("a directory of json files loads in name order") {
    const fs::path dir = scratch() / "setdir";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text_file(dir / "b.json", R"({"image_id": "later", "source_id": "m", "boxes": []})");
    write_text_file(dir / "a.json", R"({"image_id": "first", "source_id": "m", "boxes": []})");
    write_text_file(dir / "ignore.txt", "not json");
    const std::vector<DetectionSet> sets = load_detection_sets(dir);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].image_id == "first");
    CHECK(sets[1].image_id == "later");
}

TEST_CASE("region records round-trip through the map loader") {
    const fs::path dir = scratch();
    const fs::path file = dir / "regions.jsonl";
    const std::vector<Box> boxes = {Box{0, 0, 9, 9, 1.0, 0}, Box{20, 20, 30, 31, 1.0, 0}};
    std::string lines = region_record_to_json("img1", boxes).dump() + "\n" +
                        region_record_to_json("img2", {}).dump() + "\n";
    write_text_file(file, lines);
    const auto map = load_region_map(file);
    REQUIRE(map.size() == 2);
    CHECK(map.at("img1") == boxes);
    CHECK(map.at("img2").empty());
}

TEST_CASE("text files round-trip bytes and report missing paths") {
    const fs::path dir = scratch();
    const std::string content = "line1\nline2\n\x01\x02 binary-ish\n";
    write_text_file(dir / "t.txt", content);
    CHECK(read_text_file(dir / "t.txt") == content);
    CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), std::runtime_error);
}
