#pragma once

#include "glarefuse/geometry.hpp"

#include <string>
#include <vector>

namespace glarefuse {

// All scored boxes one model or image variant produced for one image.
struct DetectionSet {
    std::string image_id;
    std::string source_id;
    std::vector<Box> boxes;
    double model_weight = 1.0;
};

enum class ScoreMode { Mean, WeightedMean };

struct FusionParams {
    double iou_thr = 0.55;
    double skip_box_thr = 0.0;
    ScoreMode score_mode = ScoreMode::WeightedMean;
    // Scale each fused score by min(models_in_cluster, models_total) / models_total
    // so boxes confirmed by fewer sources lose confidence.
    bool rescale_by_models = true;
};

// Weighted boxes fusion across detection sets for the same image. Boxes are
// processed in descending score order; each joins the first cluster (in
// creation order, same label) whose running fused box overlaps it with
// IoU > iou_thr, else starts a new cluster. Fused coordinates are averages
// weighted by score * model_weight. A single input set passes through
// unchanged apart from the skip filter and the final sort: an ensemble of
// one has nothing to corroborate, so its boxes are never merged.
DetectionSet fuse(const std::vector<DetectionSet>& sets,
                  const FusionParams& params = {});

}  // namespace glarefuse
