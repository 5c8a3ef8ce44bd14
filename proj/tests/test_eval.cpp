#include "glarefuse/eval.hpp"

#include "glarefuse/geometry.hpp"
#include "glarefuse/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

using namespace glarefuse;

namespace {

std::vector<Box> random_boxes(int max_boxes, SplitRng& rng) {
    std::vector<Box> out;
    const int n = rng.uniform_int(0, max_boxes);
    for (int i = 0; i < n; ++i) {
        const double x0 = rng.uniform(0, 50);
        const double y0 = rng.uniform(0, 50);
        out.push_back(Box{x0, y0, x0 + rng.uniform(5, 25), y0 + rng.uniform(5, 25),
                          rng.uniform(0.1, 1.0), 0});
    }
    return out;
}

}  // namespace

TEST_CASE("perfect predictions match one-to-one") {
    const std::vector<Box> gts = {Box{0, 0, 10, 10, 1.0, 0}, Box{30, 30, 45, 45, 1.0, 0}};
    std::vector<Box> preds = gts;
    preds[0].score = 0.9;
    preds[1].score = 0.8;
    const MatchResult r = match(preds, gts, 0.5, 0.0);
    CHECK(r.tp == 2);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
    REQUIRE(r.pairs.size() == 2);
    CHECK(r.pairs[0].iou == doctest::Approx(1.0));
}

TEST_CASE("an overlap exactly at the threshold is not a match") {
    const std::vector<Box> gts = {Box{0, 0, 10, 5, 1.0, 0}};
    const std::vector<Box> preds = {Box{0, 0, 10, 10, 0.9, 0}};  // iou == 0.5
    const MatchResult r = match(preds, gts, 0.5, 0.0);
    CHECK(r.tp == 0);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
}

TEST_CASE("higher-scoring predictions claim ground truth first") {
    const std::vector<Box> gts = {Box{0, 0, 10, 10, 1.0, 0}};
    const std::vector<Box> preds = {Box{0, 0, 10, 10, 0.5, 0}, Box{1, 0, 11, 10, 0.9, 0}};
    const MatchResult r = match(preds, gts, 0.5, 0.0);
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
    CHECK(r.fn == 0);
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0].pred_index == 1);  // the 0.9 box, at its original index
    CHECK(r.pairs[0].gt_index == 0);
}

TEST_CASE("each prediction takes the ground truth it overlaps most") {
    // both candidates overlap above the threshold; the second is closer
    const std::vector<Box> gts = {Box{0, 0, 10, 10, 1.0, 0}, Box{2, 0, 12, 10, 1.0, 0}};
    const std::vector<Box> preds = {Box{2, 0, 11, 10, 0.9, 0}};
    const MatchResult r = match(preds, gts, 0.5, 0.0);
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0].gt_index == 1);
    CHECK(r.pairs[0].iou == doctest::Approx(0.9));
    CHECK(r.fn == 1);
}

TEST_CASE("predictions below the confidence threshold are invisible") {
    const std::vector<Box> gts = {Box{0, 0, 10, 10, 1.0, 0}};
    const std::vector<Box> preds = {Box{0, 0, 10, 10, 0.2, 0}, Box{40, 40, 50, 50, 0.21, 0}};
    const MatchResult r = match(preds, gts, 0.5, 0.25);
    CHECK(r.tp == 0);
    CHECK(r.fp == 0);  // filtered, not false positives
    CHECK(r.fn == 1);
}

TEST_CASE("matching labels is required") {
    const std::vector<Box> gts = {Box{0, 0, 10, 10, 1.0, 1}};
    const std::vector<Box> preds = {Box{0, 0, 10, 10, 0.9, 0}};
    const MatchResult r = match(preds, gts, 0.5, 0.0);
    CHECK(r.tp == 0);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
}

TEST_CASE("match validates its thresholds") {
    CHECK_THROWS_AS(match({}, {}, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(match({}, {}, 1.5, 0.0), std::invalid_argument);
}

TEST_CASE("greedy matching never beats the optimal assignment") {
    SplitRng rng(271828);
    for (int trial = 0; trial < 300; ++trial) {
        const std::vector<Box> preds = random_boxes(6, rng);
        const std::vector<Box> gts = random_boxes(6, rng);
        const MatchResult r = match(preds, gts, 0.5, 0.0);
        const int best = oracles::optimal_match_tp(preds, gts, 0.5);
        CHECK(r.tp <= best);
        CHECK(r.tp + r.fp == static_cast<int>(preds.size()));
        CHECK(r.tp + r.fn == static_cast<int>(gts.size()));
    }
}

TEST_CASE("image accuracy counts true positives against all errors") {
    CHECK(image_accuracy(MatchResult{3, 1, 1, {}}) == doctest::Approx(0.6));
    CHECK(image_accuracy(MatchResult{0, 0, 0, {}}) == 1.0);  // empty scene, no noise
    CHECK(image_accuracy(MatchResult{0, 2, 0, {}}) == 0.0);
}

TEST_CASE("domain accuracy averages images, then domains, unweighted") {
    std::vector<std::pair<std::string, std::vector<double>>> grouped = {
        {"a", {1.0, 0.5}},
        {"b", {0.8}},
    };
    const DomainReport r = ada(grouped);
    CHECK(r.per_domain.at("a").mean_accuracy == doctest::Approx(0.75));
    CHECK(r.per_domain.at("a").images == 2);
    CHECK(r.per_domain.at("b").mean_accuracy == doctest::Approx(0.8));
    CHECK(r.ada == doctest::Approx(0.775));
}

TEST_CASE("a large domain cannot drown out a small one") {
    std::vector<std::pair<std::string, std::vector<double>>> grouped = {
        {"big", std::vector<double>(100, 0.0)},
        {"small", {1.0}},
    };
    CHECK(ada(grouped).ada == doctest::Approx(0.5));
}

TEST_CASE("repeated domain names merge before averaging") {
    std::vector<std::pair<std::string, std::vector<double>>> grouped = {
        {"a", {1.0}},
        {"a", {0.0}},
        {"b", {1.0}},
    };
    const DomainReport r = ada(grouped);
    CHECK(r.per_domain.at("a").images == 2);
    CHECK(r.ada == doctest::Approx(0.75));
}

TEST_CASE("ada rejects empty input") {
    CHECK_THROWS_AS(ada({}), std::invalid_argument);
    std::vector<std::pair<std::string, std::vector<double>>> grouped = {{"a", {}}};
    CHECK_THROWS_AS(ada(grouped), std::invalid_argument);
}

TEST_CASE("report tables render CSV with fixed precision") {
    ReportTable t;
    t.rows = {"original", "original+inpainted"};
    t.thresholds = {0.25, 0.3};
    t.values = {{0.5, 0.625}, {0.75, 0.8125}};
    CHECK(t.to_csv() ==
          "combination,0.25,0.3\n"
          "original,0.500000,0.625000\n"
          "original+inpainted,0.750000,0.812500\n");
    const std::string pretty = t.to_pretty();
    CHECK(pretty.find("combination") != std::string::npos);
    CHECK(pretty.find("0.8125") != std::string::npos);
}
