#pragma once

#include "glarefuse/eval.hpp"
#include "glarefuse/image.hpp"
#include "glarefuse/wbf.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace glarefuse {

// Scene recipe: elliptical target blobs plus soft-edged gray glare patches on
// a flat darker background. Glare intensities must stay inside the maskable
// band so the mask chain can find them.
struct SceneSpec {
    std::uint64_t seed = 1;
    int width = 256;
    int height = 256;
    int n_heads = 12;
    int n_glare = 3;
    int head_intensity_min = 120;
    int head_intensity_max = 160;
    int glare_intensity_min = 200;  // >= 170 keeps glare detectable
    int glare_intensity_max = 255;
    int background_intensity = 60;
    std::string domain = "dom0";
};

struct Scene {
    ImageBuffer image;
    GroundTruth truth;              // one box per target blob; image_id left empty
    std::vector<Box> glare_regions; // core extent of each glare patch
};

Scene generate_scene(const SceneSpec& spec);

// Detector stand-in with a brightness-coupled failure mode: targets are found
// at tp_rate regardless of pixels, glare cores produce false boxes only while
// their pixels are still bright. False-positive scores sit below true-positive
// scores, mirroring low-confidence spurious detections.
struct SimDetectorSpec {
    double tp_rate = 0.9;
    double glare_fp_rate = 0.8;
    double base_fp_rate = 0.05;  // chance of an unconditional stray box, per target
    double jitter = 1.5;         // max corner perturbation in pixels
    double tp_score_min = 0.60;
    double tp_score_max = 0.95;
    double fp_score_min = 0.30;
    double fp_score_max = 0.45;
};

// All random draws are made in a fixed order before any pixel test, so two
// variants of the same scene with the same seed share their true-positive and
// stray boxes; only the brightness gate can differ.
DetectionSet simulate_detector(const ImageBuffer& img, const GroundTruth& truth,
                               const std::vector<Box>& glare_regions,
                               const SimDetectorSpec& spec, std::uint64_t seed);

}  // namespace glarefuse
