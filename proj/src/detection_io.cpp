#include "glarefuse/detection_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace glarefuse {

using nlohmann::json;

nlohmann::json box_to_json(const Box& box, bool with_score) {
    json j{{"bbox", {box.x_min, box.y_min, box.x_max, box.y_max}}, {"label", box.label}};
    if (with_score) j["score"] = box.score;
    return j;
}

Box box_from_json(const nlohmann::json& j) {
    const auto& bb = j.at("bbox");
    if (!bb.is_array() || bb.size() != 4)
        throw std::invalid_argument("box: bbox must be [x_min, y_min, x_max, y_max]");
    return Box(bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
               bb[3].get<double>(), j.value("score", 1.0), j.value("label", 0));
}

nlohmann::json detection_set_to_json(const DetectionSet& set) {
    json boxes = json::array();
    for (const Box& b : set.boxes) boxes.push_back(box_to_json(b, true));
    return {{"image_id", set.image_id},
            {"source_id", set.source_id},
            {"model_weight", set.model_weight},
            {"boxes", boxes}};
}

DetectionSet detection_set_from_json(const nlohmann::json& j) {
    DetectionSet s;
    s.image_id = j.at("image_id").get<std::string>();
    s.source_id = j.value("source_id", std::string{});
    s.model_weight = j.value("model_weight", 1.0);
    for (const auto& b : j.at("boxes")) s.boxes.push_back(box_from_json(b));
    return s;
}

nlohmann::json ground_truth_to_json(const GroundTruth& gt) {
    json boxes = json::array();
    for (const Box& b : gt.boxes) boxes.push_back(box_to_json(b, false));
    return {{"image_id", gt.image_id}, {"domain", gt.domain}, {"boxes", boxes}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    GroundTruth gt;
    gt.image_id = j.at("image_id").get<std::string>();
    gt.domain = j.value("domain", std::string{"default"});
    if (gt.domain.empty()) gt.domain = "default";
    for (const auto& b : j.at("boxes")) gt.boxes.push_back(box_from_json(b));
    return gt;
}

nlohmann::json region_record_to_json(const std::string& image_id,
                                     const std::vector<Box>& boxes) {
    json arr = json::array();
    for (const Box& b : boxes) arr.push_back(box_to_json(b, false));
    return {{"image_id", image_id}, {"boxes", arr}};
}

namespace {

// One parsed JSON document per record, from a .jsonl file or a directory of
// .json files visited in name order.
std::vector<json> load_documents(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    std::vector<json> docs;
    auto parse = [&](const std::string& text, const std::string& where) {
        try {
            docs.push_back(json::parse(text));
        } catch (const json::exception& e) {
            throw std::runtime_error("malformed JSON in " + where + ": " + e.what());
        }
    };

    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) parse(read_text_file(f), f.string());
        return docs;
    }

    if (!fs::exists(path))
        throw std::runtime_error("no such file or directory: " + path.string());

    const std::string text = read_text_file(path);
    if (path.extension() == ".jsonl") {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            parse(line, path.string() + ":" + std::to_string(lineno));
        }
    } else {
        parse(text, path.string());
    }
    return docs;
}

}  // namespace

std::vector<DetectionSet> load_detection_sets(const std::filesystem::path& path) {
    std::vector<DetectionSet> out;
    for (const json& doc : load_documents(path)) out.push_back(detection_set_from_json(doc));
    return out;
}

std::vector<GroundTruth> load_ground_truths(const std::filesystem::path& path) {
    std::vector<GroundTruth> out;
    for (const json& doc : load_documents(path)) out.push_back(ground_truth_from_json(doc));
    return out;
}

std::map<std::string, std::vector<Box>> load_region_map(const std::filesystem::path& path) {
    std::map<std::string, std::vector<Box>> out;
    for (const json& doc : load_documents(path)) {
        const std::string id = doc.at("image_id").get<std::string>();
        auto& dst = out[id];
        for (const auto& b : doc.at("boxes")) dst.push_back(box_from_json(b));
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace glarefuse
