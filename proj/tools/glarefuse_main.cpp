#include "glarefuse/benchmark.hpp"
#include "glarefuse/detection_io.hpp"
#include "glarefuse/eval.hpp"
#include "glarefuse/glare_mask.hpp"
#include "glarefuse/image_io.hpp"
#include "glarefuse/inpaint.hpp"
#include "glarefuse/pipeline.hpp"
#include "glarefuse/rng.hpp"
#include "glarefuse/synth.hpp"
#include "glarefuse/wbf.hpp"

#include <CLI11.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace glarefuse;

namespace {

struct MaskOpts {
    int low = 170;
    int high = 255;
    int blur = 9;
    double sigma = -1.0;  // <= 0 derives sigma from the kernel size
    int erode_iters = 2;
    int dilate_iters = 4;
    int morph = 3;

    MaskParams to_params() const {
        MaskParams p;
        p.low = low;
        p.high = high;
        p.blur_kernel = blur;
        p.blur_sigma = sigma > 0.0 ? sigma : default_blur_sigma(blur);
        p.erode_iters = erode_iters;
        p.dilate_iters = dilate_iters;
        p.morph_kernel = morph;
        return p;
    }
};

void add_mask_opts(CLI::App* cmd, MaskOpts& o) {
    cmd->add_option("--low", o.low, "lower brightness threshold")->capture_default_str();
    cmd->add_option("--high", o.high, "upper brightness threshold")->capture_default_str();
    cmd->add_option("--blur", o.blur, "Gaussian kernel size (odd)")->capture_default_str();
    cmd->add_option("--sigma", o.sigma, "Gaussian sigma (default: derived from the kernel)");
    cmd->add_option("--erode", o.erode_iters, "erosion iterations")->capture_default_str();
    cmd->add_option("--dilate", o.dilate_iters, "dilation iterations")->capture_default_str();
    cmd->add_option("--morph-kernel", o.morph, "structuring element size (odd)")
        ->capture_default_str();
}

void add_inpaint_opts(CLI::App* cmd, InpaintParams& p) {
    cmd->add_option("--radius", p.radius, "context margin around the mask")->capture_default_str();
    cmd->add_option("--max-iters", p.max_iters, "iteration cap per channel")->capture_default_str();
    cmd->add_option("--dt", p.dt, "update step size")->capture_default_str();
    cmd->add_option("--tol", p.tol, "mean-update stopping tolerance")->capture_default_str();
    cmd->add_option("--diffusion-weight", p.diffusion_weight, "smoothing pass weight")
        ->capture_default_str();
    cmd->add_option("--diffusion-interleave", p.diffusion_interleave,
                    "smoothing pass period in transport steps (0 = off)")
        ->capture_default_str();
}

struct FuseOpts {
    double iou_thr = 0.55;
    double skip_thr = 0.0;
    std::string score_mode = "weighted-mean";
    bool no_rescale = false;

    FusionParams to_params() const {
        FusionParams p;
        p.iou_thr = iou_thr;
        p.skip_box_thr = skip_thr;
        if (score_mode == "mean")
            p.score_mode = ScoreMode::Mean;
        else if (score_mode == "weighted-mean")
            p.score_mode = ScoreMode::WeightedMean;
        else
            throw std::invalid_argument("score mode must be 'mean' or 'weighted-mean'");
        p.rescale_by_models = !no_rescale;
        return p;
    }
};

void add_fuse_opts(CLI::App* cmd, FuseOpts& o) {
    cmd->add_option("--iou-thr", o.iou_thr, "cluster membership IoU threshold")
        ->capture_default_str();
    cmd->add_option("--skip-thr", o.skip_thr, "drop boxes scored below this before fusing")
        ->capture_default_str();
    cmd->add_option("--score-mode", o.score_mode, "mean | weighted-mean")->capture_default_str();
    cmd->add_flag("--no-rescale", o.no_rescale, "keep scores of partially-confirmed clusters");
}

void add_sim_opts(CLI::App* cmd, SimDetectorSpec& s) {
    cmd->add_option("--tp-rate", s.tp_rate, "true-positive rate")->capture_default_str();
    cmd->add_option("--glare-fp-rate", s.glare_fp_rate, "glare false-positive rate")
        ->capture_default_str();
    cmd->add_option("--base-fp-rate", s.base_fp_rate, "stray false-positive rate")
        ->capture_default_str();
    cmd->add_option("--jitter", s.jitter, "box corner jitter in pixels")->capture_default_str();
}

GrayMask mask_for(const ImageBuffer& img, const std::string& mask_path, const MaskOpts& opts) {
    if (mask_path.empty()) return build_mask(img, opts.to_params());
    return mask_from_image(to_grayscale(read_image(mask_path)));
}

int cmd_mask(const std::string& input, const std::string& output, const MaskOpts& opts) {
    const GrayMask m = build_mask(read_image(input), opts.to_params());
    write_png(output, mask_to_image(m));
    std::printf("mask: %zu of %zu pixels marked\n", m.count(), m.bits.size());
    return 0;
}

int cmd_inpaint(const std::string& input, const std::string& output, const std::string& mask_path,
                const std::string& save_mask, const MaskOpts& mopts, const InpaintParams& ip) {
    const ImageBuffer img = read_image(input);
    const GrayMask m = mask_for(img, mask_path, mopts);
    if (!save_mask.empty()) write_png(save_mask, mask_to_image(m));
    InpaintStats stats;
    write_png(output, inpaint_ns(img, m, ip, &stats));
    for (std::size_t c = 0; c < stats.iterations.size(); ++c)
        std::printf("inpaint: channel %zu converged in %d iterations\n", c, stats.iterations[c]);
    return 0;
}

int cmd_fuse(const std::vector<std::string>& inputs, const std::string& output,
             const FuseOpts& fopts, const std::vector<double>& weights) {
    if (!weights.empty() && weights.size() != inputs.size())
        throw std::invalid_argument("--weights must list one weight per input file");
    std::vector<DetectionSet> sets;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        DetectionSet s = detection_set_from_json(nlohmann::json::parse(read_text_file(inputs[i])));
        if (!weights.empty()) s.model_weight = weights[i];
        sets.push_back(std::move(s));
    }
    const std::string text = detection_set_to_json(fuse(sets, fopts.to_params())).dump(2) + "\n";
    if (output.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_text_file(output, text);
    return 0;
}

int cmd_eval(const std::string& dets_path, const std::string& truth_path, double iou_val,
             std::vector<double> confs, const std::string& output) {
    const std::vector<GroundTruth> truths = load_ground_truths(truth_path);
    if (truths.empty()) throw std::invalid_argument("eval: ground truth is empty");
    std::map<std::string, DetectionSet> dets;
    for (DetectionSet& s : load_detection_sets(dets_path)) dets[s.image_id] = std::move(s);

    ReportTable table;
    table.rows.push_back("detections");
    table.thresholds = confs;
    std::vector<double> row;
    for (double conf : confs) {
        std::map<std::string, std::vector<double>> by_domain;
        for (const GroundTruth& gt : truths) {
            static const std::vector<Box> kNoBoxes;
            const auto it = dets.find(gt.image_id);
            const std::vector<Box>& preds = it == dets.end() ? kNoBoxes : it->second.boxes;
            by_domain[gt.domain].push_back(image_accuracy(match(preds, gt.boxes, iou_val, conf)));
        }
        row.push_back(
            ada(std::vector<std::pair<std::string, std::vector<double>>>(by_domain.begin(),
                                                                         by_domain.end()))
                .ada);
    }
    table.values.push_back(std::move(row));
    std::fputs(table.to_pretty().c_str(), stdout);
    if (!output.empty()) write_text_file(output, table.to_csv());
    return 0;
}

int cmd_synth(const BenchmarkSpec& spec) {
    write_benchmark(spec);
    std::printf("synth: wrote %d images under %s\n", spec.domains * spec.images_per_domain,
                spec.out_dir.string().c_str());
    return 0;
}

int cmd_simdet(const std::string& image_path, const std::string& truth_path,
               const std::string& glare_path, std::uint64_t seed, const SimDetectorSpec& spec) {
    const std::string id = fs::path(image_path).stem().string();
    const GroundTruth* truth = nullptr;
    std::vector<GroundTruth> truths = load_ground_truths(truth_path);
    for (const GroundTruth& gt : truths)
        if (gt.image_id == id) {
            truth = &gt;
            break;
        }
    if (!truth) throw std::invalid_argument("simdet: no ground truth entry for '" + id + "'");
    std::vector<Box> regions;
    if (!glare_path.empty()) {
        auto region_map = load_region_map(glare_path);
        if (auto it = region_map.find(id); it != region_map.end()) regions = it->second;
    }
    const DetectionSet set =
        simulate_detector(read_image(image_path), *truth, regions, spec, seed);
    std::fputs((detection_set_to_json(set).dump(2) + "\n").c_str(), stdout);
    return 0;
}

int cmd_run(PipelineConfig& cfg, const std::string& detector_spec, const MaskOpts& mopts,
            const FuseOpts& fopts) {
    cfg.mask = mopts.to_params();
    cfg.fusion = fopts.to_params();
    if (detector_spec == "sim") {
        cfg.detector.kind = DetectorKind::Simulated;
    } else if (detector_spec.rfind("cmd:", 0) == 0) {
        cfg.detector.kind = DetectorKind::Command;
        cfg.detector.command = detector_spec.substr(4);
    } else if (detector_spec.rfind("files:", 0) == 0) {
        cfg.detector.kind = DetectorKind::Files;
        cfg.detector.files_dir = detector_spec.substr(6);
    } else {
        throw std::invalid_argument("--detector must be sim, cmd:<command> or files:<dir>");
    }

    const PipelineResult result = run_pipeline(cfg);
    if (!result.table.rows.empty()) std::fputs(result.table.to_pretty().c_str(), stdout);
    std::printf("run: %d image(s) processed, %d failed\n", result.images_ok,
                result.images_failed);
    for (const std::string& f : result.failures) std::fprintf(stderr, "failed %s\n", f.c_str());
    return result.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Glare-aware detection post-processing"};
    app.require_subcommand(1);

    // mask
    auto* mask_cmd = app.add_subcommand("mask", "Build a glare mask from an image");
    std::string mask_in, mask_out;
    MaskOpts mask_opts;
    mask_cmd->add_option("input", mask_in, "input image (PNG or JPEG)")->required();
    mask_cmd->add_option("-o,--out", mask_out, "output mask PNG")->required();
    add_mask_opts(mask_cmd, mask_opts);

    // inpaint
    auto* inp_cmd = app.add_subcommand("inpaint", "Inpaint glare regions of an image");
    std::string inp_in, inp_out, inp_mask, inp_save_mask;
    MaskOpts inp_mask_opts;
    InpaintParams inp_params;
    inp_cmd->add_option("input", inp_in, "input image (PNG or JPEG)")->required();
    inp_cmd->add_option("-o,--out", inp_out, "output PNG")->required();
    inp_cmd->add_option("--mask", inp_mask, "mask PNG (0 = keep, 255 = inpaint); built when omitted");
    inp_cmd->add_option("--save-mask", inp_save_mask, "also write the mask used");
    add_mask_opts(inp_cmd, inp_mask_opts);
    add_inpaint_opts(inp_cmd, inp_params);

    // fuse
    auto* fuse_cmd = app.add_subcommand("fuse", "Fuse detection sets for one image");
    std::vector<std::string> fuse_inputs;
    std::string fuse_out;
    std::vector<double> fuse_weights;
    FuseOpts fuse_opts;
    fuse_cmd->add_option("inputs", fuse_inputs, "detection JSON files")->required()->expected(-1);
    fuse_cmd->add_option("-o,--out", fuse_out, "output JSON (default stdout)");
    fuse_cmd->add_option("--weights", fuse_weights, "per-input model weights")->delimiter(',');
    add_fuse_opts(fuse_cmd, fuse_opts);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score detections against ground truth");
    std::string eval_dets, eval_truth, eval_out;
    double eval_iou_val = 0.5;
    std::vector<double> eval_confs = {0.25, 0.30, 0.35};
    eval_cmd->add_option("--dets", eval_dets, "detections (.jsonl or directory)")->required();
    eval_cmd->add_option("--truth", eval_truth, "ground truth (.jsonl or directory)")->required();
    eval_cmd->add_option("--iou", eval_iou_val, "match IoU threshold")->capture_default_str();
    eval_cmd->add_option("--conf", eval_confs, "confidence thresholds")->delimiter(',');
    eval_cmd->add_option("-o,--out", eval_out, "also write the table as CSV");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic benchmark");
    BenchmarkSpec bench;
    std::vector<int> head_range{120, 160}, glare_range{200, 255};
    std::string synth_out;
    synth_cmd->add_option("-o,--out", synth_out, "benchmark directory")->required();
    synth_cmd->add_option("--domains", bench.domains, "number of domains")->capture_default_str();
    synth_cmd->add_option("--per-domain", bench.images_per_domain, "images per domain")
        ->capture_default_str();
    synth_cmd->add_option("--seed", bench.seed, "benchmark seed")->capture_default_str();
    synth_cmd->add_option("--width", bench.scene.width, "image width")->capture_default_str();
    synth_cmd->add_option("--height", bench.scene.height, "image height")->capture_default_str();
    synth_cmd->add_option("--heads", bench.scene.n_heads, "target blobs per image")
        ->capture_default_str();
    synth_cmd->add_option("--glare", bench.scene.n_glare, "glare patches per image")
        ->capture_default_str();
    synth_cmd->add_option("--background", bench.scene.background_intensity, "background intensity")
        ->capture_default_str();
    synth_cmd->add_option("--head-intensity", head_range, "target intensity range lo,hi")
        ->delimiter(',')
        ->expected(1, 2);
    synth_cmd->add_option("--glare-intensity", glare_range, "glare intensity range lo,hi")
        ->delimiter(',')
        ->expected(1, 2);

    // simdet
    auto* simdet_cmd =
        app.add_subcommand("simdet", "Run the simulated detector on one image (prints JSON)");
    std::string sd_image, sd_truth, sd_glare;
    std::uint64_t sd_seed = 1;
    SimDetectorSpec sd_spec;
    simdet_cmd->add_option("image", sd_image, "image path")->required();
    simdet_cmd->add_option("--truth", sd_truth, "ground truth (.jsonl or directory)")->required();
    simdet_cmd->add_option("--glare", sd_glare, "glare-region sidecar (.jsonl or directory)");
    simdet_cmd->add_option("--seed", sd_seed, "detector seed")->capture_default_str();
    add_sim_opts(simdet_cmd, sd_spec);

    // run
    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline over an image directory");
    PipelineConfig run_cfg;
    MaskOpts run_mask_opts;
    FuseOpts run_fuse_opts;
    std::string run_detector = "sim";
    std::string run_images, run_truth, run_glare, run_out;
    run_cmd->add_option("--images", run_images, "image directory");
    run_cmd->add_option("--truth", run_truth, "ground truth (.jsonl or directory)");
    run_cmd->add_option("--glare", run_glare, "glare-region sidecar for the simulated detector");
    run_cmd->add_option("--out", run_out, "output directory")->required();
    run_cmd->add_option("--variants", run_cfg.variants, "image variants to detect on")
        ->delimiter(',')
        ->capture_default_str();
    run_cmd->add_option("--detector", run_detector, "sim | cmd:<command> | files:<dir>")
        ->capture_default_str();
    run_cmd->add_option("--conf", run_cfg.confidences, "confidence thresholds")->delimiter(',');
    run_cmd->add_option("--iou", run_cfg.eval_iou, "evaluation IoU threshold")
        ->capture_default_str();
    run_cmd->add_option("--seed", run_cfg.seed, "pipeline seed")->capture_default_str();
    run_cmd->add_option("--workers", run_cfg.workers, "parallel image workers")
        ->capture_default_str();
    run_cmd->add_option("--timeout", run_cfg.detector.timeout_seconds,
                        "external detector timeout in seconds")
        ->capture_default_str();
    run_cmd->add_flag("--overlays", run_cfg.save_overlays, "write fused-box overlays");
    run_cmd->add_flag("--save-masks", run_cfg.save_masks, "write glare masks");
    run_cmd->add_flag("--save-variants", run_cfg.save_variant_images, "write variant images");
    add_mask_opts(run_cmd, run_mask_opts);
    add_inpaint_opts(run_cmd, run_cfg.inpaint);
    add_fuse_opts(run_cmd, run_fuse_opts);
    add_sim_opts(run_cmd, run_cfg.detector.sim);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (mask_cmd->parsed()) return cmd_mask(mask_in, mask_out, mask_opts);
        if (inp_cmd->parsed())
            return cmd_inpaint(inp_in, inp_out, inp_mask, inp_save_mask, inp_mask_opts, inp_params);
        if (fuse_cmd->parsed()) return cmd_fuse(fuse_inputs, fuse_out, fuse_opts, fuse_weights);
        if (eval_cmd->parsed())
            return cmd_eval(eval_dets, eval_truth, eval_iou_val, eval_confs, eval_out);
        if (synth_cmd->parsed()) {
            bench.out_dir = synth_out;
            bench.scene.head_intensity_min = head_range.front();
            bench.scene.head_intensity_max = head_range.back();
            bench.scene.glare_intensity_min = glare_range.front();
            bench.scene.glare_intensity_max = glare_range.back();
            return cmd_synth(bench);
        }
        if (simdet_cmd->parsed()) return cmd_simdet(sd_image, sd_truth, sd_glare, sd_seed, sd_spec);
        if (run_cmd->parsed()) {
            run_cfg.image_dir = run_images;
            run_cfg.truth_path = run_truth;
            run_cfg.glare_path = run_glare;
            run_cfg.out_dir = run_out;
            return cmd_run(run_cfg, run_detector, run_mask_opts, run_fuse_opts);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
