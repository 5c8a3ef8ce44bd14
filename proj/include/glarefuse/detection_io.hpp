#pragma once

#include "glarefuse/eval.hpp"
#include "glarefuse/wbf.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace glarefuse {

// Box <-> {"bbox": [x_min, y_min, x_max, y_max], "score": s, "label": l}.
// score defaults to 1 and label to 0 when absent.
nlohmann::json box_to_json(const Box& box, bool with_score = true);
Box box_from_json(const nlohmann::json& j);

nlohmann::json detection_set_to_json(const DetectionSet& set);
DetectionSet detection_set_from_json(const nlohmann::json& j);

// Ground truth mirrors the detection format minus scores, plus a domain tag
// (missing tags read as "default").
nlohmann::json ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

// Loaders accept either a .jsonl file (one document per line) or a directory
// of .json files, read in name order.
std::vector<DetectionSet> load_detection_sets(const std::filesystem::path& path);
std::vector<GroundTruth> load_ground_truths(const std::filesystem::path& path);

// Plain {"image_id", "boxes"} records, e.g. glare-region sidecars.
nlohmann::json region_record_to_json(const std::string& image_id,
                                     const std::vector<Box>& boxes);
std::map<std::string, std::vector<Box>> load_region_map(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace glarefuse
