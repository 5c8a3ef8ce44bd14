#include "glarefuse/pipeline.hpp"

#include "glarefuse/detection_io.hpp"
#include "glarefuse/image_io.hpp"
#include "glarefuse/rng.hpp"

#include <json.hpp>

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <set>
#include <thread>

namespace glarefuse {

namespace fs = std::filesystem;

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += '\'';
    return out;
}

}  // namespace

DetectionSet run_detector_command(const std::string& command,
                                  const std::filesystem::path& image_path,
                                  double timeout_seconds) {
    using Kind = DetectorError::Kind;
    if (command.empty()) throw DetectorError(Kind::Spawn, "detector command is empty");
    const std::string line = command + " " + shell_quote(image_path.string());

    int fds[2];
    if (pipe(fds) != 0)
        throw DetectorError(Kind::Spawn,
                            std::string("pipe() failed: ") + std::strerror(errno));
    const pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        throw DetectorError(Kind::Spawn,
                            std::string("fork() failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        dup2(fds[1], STDOUT_FILENO);
        close(fds[0]);
        close(fds[1]);
        execl("/bin/sh", "sh", "-c", line.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(fds[1]);

    std::string output;
    bool timed_out = false;
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_seconds);
    char buf[4096];
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            timed_out = true;
            break;
        }
        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        pollfd pfd{fds[0], POLLIN, 0};
        const int pr = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining + 1, 200)));
        if (pr < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (pr == 0) continue;
        const ssize_t n = read(fds[0], buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (n == 0) break;
        output.append(buf, static_cast<std::size_t>(n));
    }
    close(fds[0]);

    int status = 0;
    if (timed_out) {
        kill(pid, SIGKILL);
        waitpid(pid, &status, 0);
        char msg[96];
        std::snprintf(msg, sizeof msg, "detector timed out after %.1f s", timeout_seconds);
        throw DetectorError(Kind::Timeout, msg);
    }
    waitpid(pid, &status, 0);
    if (WIFSIGNALED(status))
        throw DetectorError(Kind::NonZeroExit,
                            "detector killed by signal " + std::to_string(WTERMSIG(status)),
                            128 + WTERMSIG(status));
    if (WIFEXITED(status) && WEXITSTATUS(status) != 0)
        throw DetectorError(Kind::NonZeroExit,
                            "detector exited with code " + std::to_string(WEXITSTATUS(status)),
                            WEXITSTATUS(status));

    try {
        return detection_set_from_json(nlohmann::json::parse(output));
    } catch (const std::exception& e) {
        throw DetectorError(Kind::BadOutput,
                            std::string("detector produced unusable JSON: ") + e.what());
    }
}

ImageBuffer smooth_variant(const ImageBuffer& inpainted, const GrayMask& mask) {
    if (mask.width != inpainted.width || mask.height != inpainted.height)
        throw std::invalid_argument("smooth_variant: mask and image dimensions differ");
    if (mask.count() == 0) return inpainted;

    const GrayMask outer = dilate(mask, 3, 2);
    const GrayMask inner = erode(mask, 3, 2);

    ImageBuffer out = inpainted;
    ImageBuffer channel(inpainted.width, inpainted.height, 1);
    for (int c = 0; c < inpainted.channels; ++c) {
        for (int y = 0; y < inpainted.height; ++y)
            for (int x = 0; x < inpainted.width; ++x)
                channel.at(x, y) = inpainted.at(x, y, c);
        const ImageBuffer blurred = gaussian_blur(channel, 5, default_blur_sigma(5));
        // Re-blend only the band straddling the mask boundary.
        for (int y = 0; y < inpainted.height; ++y)
            for (int x = 0; x < inpainted.width; ++x)
                if (outer.test(x, y) && !inner.test(x, y)) out.at(x, y, c) = blurred.at(x, y);
    }
    return out;
}

ImageBuffer render_overlay(const ImageBuffer& img, const std::vector<Box>& boxes) {
    ImageBuffer rgb(img.width, img.height, 3);
    if (img.channels == 3) {
        rgb.data = img.data;
    } else {
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            rgb.data[3 * i] = img.data[i];
            rgb.data[3 * i + 1] = img.data[i];
            rgb.data[3 * i + 2] = img.data[i];
        }
    }

    auto paint = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= rgb.width || y >= rgb.height) return;
        rgb.at(x, y, 0) = 230;
        rgb.at(x, y, 1) = 40;
        rgb.at(x, y, 2) = 40;
    };
    for (const Box& b : boxes) {
        const int x0 = static_cast<int>(std::lround(b.x_min));
        const int y0 = static_cast<int>(std::lround(b.y_min));
        const int x1 = static_cast<int>(std::lround(b.x_max)) - 1;
        const int y1 = static_cast<int>(std::lround(b.y_max)) - 1;
        for (int t = 0; t < 2; ++t) {
            for (int x = x0; x <= x1; ++x) {
                paint(x, y0 + t);
                paint(x, y1 - t);
            }
            for (int y = y0; y <= y1; ++y) {
                paint(x0 + t, y);
                paint(x1 - t, y);
            }
        }
    }
    return rgb;
}

namespace {

struct ImageTask {
    std::string id;
    fs::path image_path;  // empty in files mode
};

struct ImageOutcome {
    bool ok = false;
    std::string error;
    std::string domain;
    bool has_truth = false;
    std::vector<DetectionSet> variant_sets;  // aligned with cfg.variants
    std::vector<DetectionSet> combo_fused;   // aligned with the combo list
};

std::vector<std::vector<std::string>> make_combos(const std::vector<std::string>& variants) {
    std::vector<std::string> extras;
    for (const std::string& v : variants)
        if (v != "original") extras.push_back(v);
    std::vector<std::vector<std::string>> combos;
    for (unsigned m = 0; m < (1u << extras.size()); ++m) {
        std::vector<std::string> c{"original"};
        for (std::size_t i = 0; i < extras.size(); ++i)
            if (m >> i & 1u) c.push_back(extras[i]);
        combos.push_back(std::move(c));
    }
    return combos;
}

std::string combo_label(const std::vector<std::string>& combo) {
    std::string s;
    for (const std::string& v : combo) {
        if (!s.empty()) s += '+';
        s += v;
    }
    return s;
}

void validate_config(const PipelineConfig& cfg, const DetectorConfig& det) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("run: " + msg); };

    if (cfg.variants.empty()) fail("at least one variant is required");
    if (std::find(cfg.variants.begin(), cfg.variants.end(), "original") == cfg.variants.end())
        fail("the variant list must include 'original'");
    std::set<std::string> seen(cfg.variants.begin(), cfg.variants.end());
    if (seen.size() != cfg.variants.size()) fail("duplicate variant names");
    if (det.kind != DetectorKind::Files)
        for (const std::string& v : cfg.variants)
            if (v != "original" && v != "inpainted" && v != "smoothed")
                fail("unknown variant '" + v + "'");

    if (cfg.out_dir.empty()) fail("an output directory is required");
    if (cfg.workers < 1) fail("workers must be at least 1");
    if (cfg.confidences.empty()) fail("at least one confidence threshold is required");
    for (double c : cfg.confidences)
        if (!(c >= 0.0 && c <= 1.0)) fail("confidence thresholds must lie in [0, 1]");
    if (!(cfg.eval_iou > 0.0 && cfg.eval_iou <= 1.0)) fail("eval IoU must lie in (0, 1]");

    switch (det.kind) {
        case DetectorKind::Files:
            if (det.files_dir.empty() || !fs::is_directory(det.files_dir))
                fail("files detector mode needs an existing detection directory");
            break;
        case DetectorKind::Command:
            if (det.command.empty()) fail("command detector mode needs a command");
            [[fallthrough]];
        case DetectorKind::Simulated:
            if (cfg.image_dir.empty() || !fs::is_directory(cfg.image_dir))
                fail("an existing image directory is required");
            break;
    }
    if (det.kind == DetectorKind::Simulated && cfg.truth_path.empty())
        fail("the simulated detector needs ground truth");
    if (!(det.timeout_seconds > 0.0)) fail("detector timeout must be positive");

    // Dry runs surface parameter problems as configuration errors instead of
    // per-image failures.
    try {
        build_mask(ImageBuffer(3, 3, 1), cfg.mask);
        inpaint_ns(ImageBuffer(3, 3, 1), GrayMask(3, 3, false), cfg.inpaint);
        fuse({DetectionSet{"probe", "probe", {}, 1.0}}, cfg.fusion);
        simulate_detector(ImageBuffer(3, 3, 1), GroundTruth{"probe", "probe", {}}, {},
                          det.sim, 0);
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
}

bool variant_listed(const std::vector<std::string>& variants, const char* name) {
    return std::find(variants.begin(), variants.end(), name) != variants.end();
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    DetectorConfig det = cfg.detector;
    if (det.kind == DetectorKind::Command)
        if (const char* env = std::getenv(kDetectorEnvVar); env && *env) det.command = env;
    validate_config(cfg, det);

    const auto combos = make_combos(cfg.variants);

    std::map<std::string, GroundTruth> truth_map;
    if (!cfg.truth_path.empty())
        for (GroundTruth& gt : load_ground_truths(cfg.truth_path))
            truth_map[gt.image_id] = std::move(gt);
    std::map<std::string, std::vector<Box>> glare_map;
    if (!cfg.glare_path.empty()) glare_map = load_region_map(cfg.glare_path);

    // Files mode: detections come straight from disk, keyed per variant.
    std::map<std::string, std::map<std::string, DetectionSet>> files_sets;
    if (det.kind == DetectorKind::Files)
        for (const std::string& v : cfg.variants) {
            const fs::path jsonl = det.files_dir / (v + ".jsonl");
            const fs::path dir = det.files_dir / v;
            std::vector<DetectionSet> sets;
            if (fs::is_regular_file(jsonl))
                sets = load_detection_sets(jsonl);
            else if (fs::is_directory(dir))
                sets = load_detection_sets(dir);
            else
                throw std::invalid_argument("run: no detections for variant '" + v + "' under " +
                                            det.files_dir.string());
            auto& dst = files_sets[v];
            for (DetectionSet& s : sets) dst[s.image_id] = std::move(s);
        }

    std::vector<ImageTask> tasks;
    if (det.kind == DetectorKind::Files) {
        for (const auto& [id, set] : files_sets.at("original")) {
            ImageTask t{id, {}};
            for (const char* ext : {".png", ".jpg", ".jpeg"}) {
                const fs::path p = cfg.image_dir / (id + ext);
                if (!cfg.image_dir.empty() && fs::exists(p)) {
                    t.image_path = p;
                    break;
                }
            }
            tasks.push_back(std::move(t));
        }
    } else {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(cfg.image_dir)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = entry.path().extension().string();
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const fs::path& p : files) tasks.push_back({p.stem().string(), p});
        if (tasks.empty()) throw std::invalid_argument("run: no images in " + cfg.image_dir.string());
    }

    fs::create_directories(cfg.out_dir / "fused");
    fs::create_directories(cfg.out_dir / "detections");
    if (cfg.save_overlays) fs::create_directories(cfg.out_dir / "overlays");
    if (cfg.save_masks) fs::create_directories(cfg.out_dir / "masks");
    const bool write_variant_images =
        det.kind == DetectorKind::Command || cfg.save_variant_images;
    if (write_variant_images)
        for (const std::string& v : cfg.variants)
            fs::create_directories(cfg.out_dir / "variants" / v);

    const bool need_mask = variant_listed(cfg.variants, "inpainted") ||
                           variant_listed(cfg.variants, "smoothed");

    auto process = [&](const ImageTask& task) -> ImageOutcome {
        ImageOutcome oc;
        const GroundTruth* truth = nullptr;
        if (auto it = truth_map.find(task.id); it != truth_map.end()) truth = &it->second;
        if (!cfg.truth_path.empty() && !truth)
            throw std::runtime_error("no ground truth entry for image '" + task.id + "'");
        if (truth) {
            oc.has_truth = true;
            oc.domain = truth->domain;
        }

        if (det.kind == DetectorKind::Files) {
            for (const std::string& v : cfg.variants) {
                const auto& by_id = files_sets.at(v);
                const auto it = by_id.find(task.id);
                if (it == by_id.end())
                    throw std::runtime_error("variant '" + v + "' has no detections for image '" +
                                             task.id + "'");
                oc.variant_sets.push_back(it->second);
            }
        } else {
            const ImageBuffer original = read_image(task.image_path);
            std::optional<GrayMask> mask;
            std::optional<ImageBuffer> inpainted, smoothed;
            if (need_mask) {
                mask = build_mask(original, cfg.mask);
                if (cfg.save_masks)
                    write_png(cfg.out_dir / "masks" / (task.id + ".png"), mask_to_image(*mask));
            }
            auto variant_image = [&](const std::string& v) -> const ImageBuffer& {
                if (v == "original") return original;
                if (!inpainted) inpainted = inpaint_ns(original, *mask, cfg.inpaint);
                if (v == "inpainted") return *inpainted;
                if (!smoothed) smoothed = smooth_variant(*inpainted, *mask);
                return *smoothed;
            };

            for (const std::string& v : cfg.variants) {
                const ImageBuffer& img = variant_image(v);
                fs::path img_path = task.image_path;
                if (write_variant_images) {
                    const fs::path p = cfg.out_dir / "variants" / v / (task.id + ".png");
                    write_png(p, img);
                    if (v != "original") img_path = p;
                }
                DetectionSet set;
                if (det.kind == DetectorKind::Simulated) {
                    std::vector<Box> regions;
                    if (auto it = glare_map.find(task.id); it != glare_map.end())
                        regions = it->second;
                    set = simulate_detector(img, *truth, regions, det.sim,
                                            stable_hash(cfg.seed, task.id));
                } else {
                    set = run_detector_command(det.command, img_path, det.timeout_seconds);
                }
                set.image_id = task.id;
                set.source_id = v;
                oc.variant_sets.push_back(std::move(set));
            }
        }

        for (const auto& combo : combos) {
            if (combo.size() == 1) {
                // The plain original row reports the raw detector output.
                const auto idx = static_cast<std::size_t>(
                    std::find(cfg.variants.begin(), cfg.variants.end(), "original") -
                    cfg.variants.begin());
                oc.combo_fused.push_back(oc.variant_sets[idx]);
                continue;
            }
            std::vector<DetectionSet> members;
            for (const std::string& v : combo) {
                const auto idx = static_cast<std::size_t>(
                    std::find(cfg.variants.begin(), cfg.variants.end(), v) -
                    cfg.variants.begin());
                members.push_back(oc.variant_sets[idx]);
            }
            oc.combo_fused.push_back(fuse(members, cfg.fusion));
        }

        write_text_file(cfg.out_dir / "fused" / (task.id + ".json"),
                        detection_set_to_json(oc.combo_fused.back()).dump(2) + "\n");
        if (cfg.save_overlays && !task.image_path.empty()) {
            const ImageBuffer img = read_image(task.image_path);
            write_png(cfg.out_dir / "overlays" / (task.id + ".png"),
                      render_overlay(img, oc.combo_fused.back().boxes));
        }
        oc.ok = true;
        return oc;
    };

    std::vector<ImageOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                outcomes[i] = process(tasks[i]);
            } catch (const std::exception& e) {
                outcomes[i] = ImageOutcome{};
                outcomes[i].error = e.what();
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    PipelineResult result;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (outcomes[i].ok)
            ++result.images_ok;
        else {
            ++result.images_failed;
            result.failures.push_back(tasks[i].id + ": " + outcomes[i].error);
        }
    }

    // Per-variant detections, one JSONL per variant, in image order.
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
        std::string lines;
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (outcomes[i].ok) lines += detection_set_to_json(outcomes[i].variant_sets[v]).dump() + "\n";
        write_text_file(cfg.out_dir / "detections" / (cfg.variants[v] + ".jsonl"), lines);
    }

    // Evaluation, when ground truth is available.
    bool any_truth = false;
    for (const ImageOutcome& oc : outcomes) any_truth |= oc.ok && oc.has_truth;
    if (any_truth) {
        result.table.thresholds = cfg.confidences;
        for (std::size_t ci = 0; ci < combos.size(); ++ci) {
            const std::string label = combo_label(combos[ci]);
            result.table.rows.push_back(label);
            std::vector<double> row;
            for (double conf : cfg.confidences) {
                std::map<std::string, std::vector<double>> by_domain;
                for (std::size_t i = 0; i < tasks.size(); ++i) {
                    const ImageOutcome& oc = outcomes[i];
                    if (!oc.ok || !oc.has_truth) continue;
                    const GroundTruth& gt = truth_map.at(tasks[i].id);
                    const MatchResult m =
                        match(oc.combo_fused[ci].boxes, gt.boxes, cfg.eval_iou, conf);
                    by_domain[oc.domain].push_back(image_accuracy(m));
                }
                std::vector<std::pair<std::string, std::vector<double>>> grouped(
                    by_domain.begin(), by_domain.end());
                const DomainReport rep = ada(grouped);
                row.push_back(rep.ada);
                result.reports[label][conf] = rep;
            }
            result.table.values.push_back(std::move(row));
        }
        write_text_file(cfg.out_dir / "report.csv", result.table.to_csv());
    }

    return result;
}

}  // namespace glarefuse
