#pragma once

#include "glarefuse/eval.hpp"
#include "glarefuse/glare_mask.hpp"
#include "glarefuse/inpaint.hpp"
#include "glarefuse/synth.hpp"
#include "glarefuse/wbf.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace glarefuse {

struct DetectorError : std::runtime_error {
    enum class Kind { Spawn, NonZeroExit, Timeout, BadOutput };

    Kind kind;
    int exit_code;

    DetectorError(Kind k, const std::string& msg, int code = 0)
        : std::runtime_error(msg), kind(k), exit_code(code) {}
};

// Runs `command <image_path>` through /bin/sh and parses one detection JSON
// document from its stdout. Throws DetectorError on spawn failure, non-zero
// exit, timeout, or unparseable output.
DetectionSet run_detector_command(const std::string& command,
                                  const std::filesystem::path& image_path,
                                  double timeout_seconds = 120.0);

enum class DetectorKind { Simulated, Command, Files };

struct DetectorConfig {
    DetectorKind kind = DetectorKind::Simulated;
    std::string command;              // Command mode
    std::filesystem::path files_dir;  // Files mode: <dir>/<variant>.jsonl or <dir>/<variant>/
    SimDetectorSpec sim;              // Simulated mode
    double timeout_seconds = 120.0;
};

// Overrides DetectorConfig::command when set in the environment.
inline constexpr const char* kDetectorEnvVar = "GLAREFUSE_DETECTOR";

struct PipelineConfig {
    std::filesystem::path image_dir;
    std::filesystem::path truth_path;  // empty = no evaluation
    std::filesystem::path glare_path;  // glare sidecar for the simulated detector
    std::vector<std::string> variants = {"original", "inpainted", "smoothed"};
    DetectorConfig detector;
    MaskParams mask;
    InpaintParams inpaint;
    FusionParams fusion;
    std::vector<double> confidences = {0.25, 0.30, 0.35};
    double eval_iou = 0.5;
    std::filesystem::path out_dir;
    int workers = 1;
    std::uint64_t seed = 1;
    bool save_overlays = false;
    bool save_masks = false;
    bool save_variant_images = false;
};

struct PipelineResult {
    ReportTable table;  // empty without ground truth
    // combination label -> confidence threshold -> domain breakdown
    std::map<std::string, std::map<double, DomainReport>> reports;
    int images_ok = 0;
    int images_failed = 0;
    std::vector<std::string> failures;

    int exit_code() const { return images_failed == 0 ? 0 : 1; }
};

// Produces image variants, collects per-variant detections, fuses every
// combination that includes the original set, evaluates against ground truth
// when present, and writes detections, fused results, the report and optional
// overlays/masks under cfg.out_dir. Configuration problems throw
// std::invalid_argument; per-image problems are collected as failures.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Inpainted image with an extra smoothing pass over a band straddling the
// mask boundary; stands in for a learned glare-correction model.
ImageBuffer smooth_variant(const ImageBuffer& inpainted, const GrayMask& mask);

// RGB copy of the image with box outlines burned in.
ImageBuffer render_overlay(const ImageBuffer& img, const std::vector<Box>& boxes);

}  // namespace glarefuse
