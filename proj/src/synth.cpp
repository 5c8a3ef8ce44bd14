#include "glarefuse/synth.hpp"

#include "glarefuse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace glarefuse {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Position-keyed noise in [-amp, amp]; independent of draw order.
int texture_noise(std::uint64_t key, int x, int y, int amp) {
    if (amp <= 0) return 0;
    const std::uint64_t h =
        splitmix64(key ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) ^
                   static_cast<std::uint32_t>(y));
    return static_cast<int>(h % static_cast<std::uint64_t>(2 * amp + 1)) - amp;
}

std::uint8_t u8(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

struct Rgb {
    std::uint8_t r, g, b;
};

// Dark green field tone; luma stays around 0.81 * intensity.
Rgb background_color(int intensity) {
    return {u8(0.55 * intensity), u8(1.0 * intensity), u8(0.5 * intensity)};
}

// Yellow-green target tone; luma stays around 0.94 * value, below the glare band.
Rgb head_color(int value) {
    return {u8(1.0 * value), u8(1.0 * value), u8(0.5 * value)};
}

struct Extent {
    double x0, y0, x1, y1;
};

bool overlaps(const Extent& a, const Extent& b, double margin) {
    return a.x0 - margin < b.x1 && b.x0 - margin < a.x1 && a.y0 - margin < b.y1 &&
           b.y0 - margin < a.y1;
}

struct PixelBounds {
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    void add(int x, int y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    }
    bool empty() const { return x1 < 0; }
    Box to_box() const { return Box(x0, y0, x1 + 1, y1 + 1); }
};

constexpr double kGlareCore = 0.65;  // normalized radius of the flat bright core
constexpr double kMargin = 4.0;      // minimum gap between blob extents

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
    require(spec.width > 0 && spec.height > 0, "generate_scene: dimensions must be positive");
    require(spec.n_heads >= 0 && spec.n_glare >= 0, "generate_scene: blob counts must be non-negative");
    require(0 <= spec.head_intensity_min && spec.head_intensity_min <= spec.head_intensity_max &&
                spec.head_intensity_max <= 255,
            "generate_scene: head intensity range invalid");
    require(170 <= spec.glare_intensity_min &&
                spec.glare_intensity_min <= spec.glare_intensity_max &&
                spec.glare_intensity_max <= 255,
            "generate_scene: glare intensity range must lie inside [170, 255]");
    require(0 <= spec.background_intensity && spec.background_intensity <= 255,
            "generate_scene: background intensity invalid");
    require(!spec.domain.empty(), "generate_scene: domain tag must be non-empty");

    SplitRng rng(spec.seed);
    const int w = spec.width, h = spec.height;

    Scene scene;
    scene.image = ImageBuffer(w, h, 3);
    const Rgb bg = background_color(spec.background_intensity);
    for (std::size_t i = 0; i < scene.image.pixel_count(); ++i) {
        scene.image.data[3 * i] = bg.r;
        scene.image.data[3 * i + 1] = bg.g;
        scene.image.data[3 * i + 2] = bg.b;
    }
    scene.truth.domain = spec.domain;

    std::vector<Extent> occupied;
    auto place = [&](double ax_lo, double ax_hi) -> Extent {
        for (int attempt = 0; attempt < 300; ++attempt) {
            const double ax = rng.uniform(ax_lo, ax_hi);
            const double ay = rng.uniform(ax_lo, ax_hi);
            if (2.0 * ax + 2.0 >= w || 2.0 * ay + 2.0 >= h) continue;
            const double cx = rng.uniform(ax + 1.0, w - ax - 1.0);
            const double cy = rng.uniform(ay + 1.0, h - ay - 1.0);
            const Extent e{cx - ax, cy - ay, cx + ax, cy + ay};
            bool free = true;
            for (const Extent& o : occupied)
                if (overlaps(e, o, kMargin)) {
                    free = false;
                    break;
                }
            if (free) {
                occupied.push_back(e);
                return e;
            }
        }
        throw std::runtime_error("generate_scene: could not place a blob within the retry budget");
    };

    const int head_amp =
        std::min(6, (spec.head_intensity_max - spec.head_intensity_min) / 2);
    for (int i = 0; i < spec.n_heads; ++i) {
        const Extent e = place(5.0, 12.0);
        const double cx = 0.5 * (e.x0 + e.x1), cy = 0.5 * (e.y0 + e.y1);
        const double ax = 0.5 * (e.x1 - e.x0), ay = 0.5 * (e.y1 - e.y0);
        const int base = rng.uniform_int(spec.head_intensity_min + head_amp,
                                         spec.head_intensity_max - head_amp);
        const std::uint64_t noise_key = splitmix64(spec.seed ^ (0x48ull << 56) ^ static_cast<std::uint64_t>(i));

        PixelBounds pb;
        const int y_lo = std::max(0, static_cast<int>(std::floor(e.y0)));
        const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(e.y1)));
        const int x_lo = std::max(0, static_cast<int>(std::floor(e.x0)));
        const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(e.x1)));
        for (int y = y_lo; y <= y_hi; ++y)
            for (int x = x_lo; x <= x_hi; ++x) {
                const double dx = (x + 0.5 - cx) / ax;
                const double dy = (y + 0.5 - cy) / ay;
                if (dx * dx + dy * dy > 1.0) continue;
                const int v = std::clamp(base + texture_noise(noise_key, x, y, head_amp),
                                         spec.head_intensity_min, spec.head_intensity_max);
                const Rgb c = head_color(v);
                scene.image.at(x, y, 0) = c.r;
                scene.image.at(x, y, 1) = c.g;
                scene.image.at(x, y, 2) = c.b;
                pb.add(x, y);
            }
        if (pb.empty())
            throw std::runtime_error("generate_scene: produced an empty target blob");
        scene.truth.boxes.push_back(pb.to_box());
    }

    for (int i = 0; i < spec.n_glare; ++i) {
        const Extent e = place(9.0, 22.0);
        const double cx = 0.5 * (e.x0 + e.x1), cy = 0.5 * (e.y0 + e.y1);
        const double ax = 0.5 * (e.x1 - e.x0), ay = 0.5 * (e.y1 - e.y0);
        const int v = rng.uniform_int(spec.glare_intensity_min, spec.glare_intensity_max);

        PixelBounds core;
        const int y_lo = std::max(0, static_cast<int>(std::floor(e.y0)));
        const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(e.y1)));
        const int x_lo = std::max(0, static_cast<int>(std::floor(e.x0)));
        const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(e.x1)));
        for (int y = y_lo; y <= y_hi; ++y)
            for (int x = x_lo; x <= x_hi; ++x) {
                const double dx = (x + 0.5 - cx) / ax;
                const double dy = (y + 0.5 - cy) / ay;
                const double r = std::sqrt(dx * dx + dy * dy);
                if (r > 1.0) continue;
                if (r <= kGlareCore) {
                    scene.image.at(x, y, 0) = static_cast<std::uint8_t>(v);
                    scene.image.at(x, y, 1) = static_cast<std::uint8_t>(v);
                    scene.image.at(x, y, 2) = static_cast<std::uint8_t>(v);
                    core.add(x, y);
                } else {
                    // Smoothstep falloff from the bright core to the background.
                    const double u = std::clamp((1.0 - r) / (1.0 - kGlareCore), 0.0, 1.0);
                    const double s = u * u * (3.0 - 2.0 * u);
                    scene.image.at(x, y, 0) = u8(bg.r + (v - bg.r) * s);
                    scene.image.at(x, y, 1) = u8(bg.g + (v - bg.g) * s);
                    scene.image.at(x, y, 2) = u8(bg.b + (v - bg.b) * s);
                }
            }
        if (core.empty())
            throw std::runtime_error("generate_scene: produced an empty glare core");
        scene.glare_regions.push_back(core.to_box());
    }

    return scene;
}

namespace {

double mean_luma(const ImageBuffer& img, const Box& region) {
    const int x0 = std::max(0, static_cast<int>(std::floor(region.x_min)));
    const int y0 = std::max(0, static_cast<int>(std::floor(region.y_min)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(region.x_max)) - 1);
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(region.y_max)) - 1);
    if (x1 < x0 || y1 < y0) return 0.0;
    double sum = 0.0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (img.channels == 1)
                sum += img.at(x, y);
            else
                sum += 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                       0.114 * img.at(x, y, 2);
        }
    return sum / (static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1));
}

void check_rate(double v, const char* msg) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(msg);
}

}  // namespace

DetectionSet simulate_detector(const ImageBuffer& img, const GroundTruth& truth,
                               const std::vector<Box>& glare_regions,
                               const SimDetectorSpec& spec, std::uint64_t seed) {
    check_rate(spec.tp_rate, "simulate_detector: tp_rate must lie in [0, 1]");
    check_rate(spec.glare_fp_rate, "simulate_detector: glare_fp_rate must lie in [0, 1]");
    check_rate(spec.base_fp_rate, "simulate_detector: base_fp_rate must lie in [0, 1]");
    require(spec.jitter >= 0.0, "simulate_detector: jitter must be non-negative");
    require(0.0 <= spec.tp_score_min && spec.tp_score_min <= spec.tp_score_max &&
                spec.tp_score_max <= 1.0,
            "simulate_detector: tp score range invalid");
    require(0.0 <= spec.fp_score_min && spec.fp_score_min <= spec.fp_score_max &&
                spec.fp_score_max <= 1.0,
            "simulate_detector: fp score range invalid");
    require(spec.fp_score_min <= spec.tp_score_min && spec.fp_score_max <= spec.tp_score_max,
            "simulate_detector: fp scores must not exceed tp scores");

    SplitRng rng(seed);
    const double w = img.width, h = img.height;

    auto jittered = [&](const Box& b, double score) -> Box {
        const double dx0 = rng.uniform(-spec.jitter, spec.jitter);
        const double dy0 = rng.uniform(-spec.jitter, spec.jitter);
        const double dx1 = rng.uniform(-spec.jitter, spec.jitter);
        const double dy1 = rng.uniform(-spec.jitter, spec.jitter);
        const double x0 = std::clamp(b.x_min + dx0, 0.0, w - 1.0);
        const double y0 = std::clamp(b.y_min + dy0, 0.0, h - 1.0);
        const double x1 = std::clamp(b.x_max + dx1, x0 + 0.5, w);
        const double y1 = std::clamp(b.y_max + dy1, y0 + 0.5, h);
        return Box(x0, y0, x1, y1, score, b.label);
    };

    DetectionSet out{truth.image_id, "sim", {}, 1.0};

    for (const Box& b : truth.boxes) {
        if (!rng.bernoulli(spec.tp_rate)) continue;
        const double s = rng.uniform(spec.tp_score_min, spec.tp_score_max);
        out.boxes.push_back(jittered(b, s));
    }

    // Glare boxes: draws happen before the pixel test so identical seeds give
    // identical candidates on every variant of the scene.
    for (const Box& g : glare_regions) {
        if (!rng.bernoulli(spec.glare_fp_rate)) continue;
        const double s = rng.uniform(spec.fp_score_min, spec.fp_score_max);
        const Box candidate = jittered(g, s);
        if (mean_luma(img, g) > 170.0) out.boxes.push_back(candidate);
    }

    // Stray boxes anywhere in the frame, image independent.
    for (std::size_t i = 0; i < truth.boxes.size(); ++i) {
        if (!rng.bernoulli(spec.base_fp_rate)) continue;
        const double bw = rng.uniform(8.0, 24.0);
        const double bh = rng.uniform(8.0, 24.0);
        const double cx = rng.uniform(0.0, w);
        const double cy = rng.uniform(0.0, h);
        const double s = rng.uniform(spec.fp_score_min, spec.fp_score_max);
        const double x0 = std::clamp(cx - 0.5 * bw, 0.0, w - 1.0);
        const double y0 = std::clamp(cy - 0.5 * bh, 0.0, h - 1.0);
        const double x1 = std::clamp(cx + 0.5 * bw, x0 + 0.5, w);
        const double y1 = std::clamp(cy + 0.5 * bh, y0 + 0.5, h);
        out.boxes.push_back(Box(x0, y0, x1, y1, s, 0));
    }

    return out;
}

}  // namespace glarefuse
