#include "glarefuse/glare_mask.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace glarefuse {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_odd_kernel(int kernel) {
    require(kernel >= 1 && kernel % 2 == 1, "kernel size must be odd and positive");
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

std::vector<double> gaussian_taps(int kernel, double sigma) {
    const int r = kernel / 2;
    std::vector<double> taps(static_cast<std::size_t>(kernel));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        taps[i + r] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += taps[i + r];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// One separable pass; erode requires the whole window set and in bounds,
// dilate any set pixel in the clipped window. Prefix sums keep it O(n).
GrayMask morph_pass_h(const GrayMask& m, int r, bool erode_mode) {
    GrayMask out(m.width, m.height);
    std::vector<int> prefix(static_cast<std::size_t>(m.width) + 1, 0);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x)
            prefix[x + 1] = prefix[x] + (m.test(x, y) ? 1 : 0);
        for (int x = 0; x < m.width; ++x) {
            bool v;
            if (erode_mode) {
                const int lo = x - r, hi = x + r;
                v = lo >= 0 && hi < m.width && prefix[hi + 1] - prefix[lo] == 2 * r + 1;
            } else {
                const int lo = std::max(0, x - r), hi = std::min(m.width - 1, x + r);
                v = prefix[hi + 1] - prefix[lo] > 0;
            }
            out.set(x, y, v);
        }
    }
    return out;
}

GrayMask morph_pass_v(const GrayMask& m, int r, bool erode_mode) {
    GrayMask out(m.width, m.height);
    std::vector<int> prefix(static_cast<std::size_t>(m.height) + 1, 0);
    for (int x = 0; x < m.width; ++x) {
        for (int y = 0; y < m.height; ++y)
            prefix[y + 1] = prefix[y] + (m.test(x, y) ? 1 : 0);
        for (int y = 0; y < m.height; ++y) {
            bool v;
            if (erode_mode) {
                const int lo = y - r, hi = y + r;
                v = lo >= 0 && hi < m.height && prefix[hi + 1] - prefix[lo] == 2 * r + 1;
            } else {
                const int lo = std::max(0, y - r), hi = std::min(m.height - 1, y + r);
                v = prefix[hi + 1] - prefix[lo] > 0;
            }
            out.set(x, y, v);
        }
    }
    return out;
}

GrayMask morph(const GrayMask& mask, int kernel, int iters, bool erode_mode) {
    check_odd_kernel(kernel);
    require(iters >= 0, "iterations must be non-negative");
    const int r = kernel / 2;
    GrayMask cur = mask;
    for (int i = 0; i < iters; ++i)
        cur = morph_pass_v(morph_pass_h(cur, r, erode_mode), r, erode_mode);
    return cur;
}

}  // namespace

ImageBuffer to_grayscale(const ImageBuffer& img) {
    if (img.channels == 1) return img;
    require(img.channels == 3, "to_grayscale: unsupported channel count");
    ImageBuffer out(img.width, img.height, 1);
    for (std::size_t i = 0, n = img.pixel_count(); i < n; ++i) {
        const double r = img.data[3 * i];
        const double g = img.data[3 * i + 1];
        const double b = img.data[3 * i + 2];
        out.data[i] = static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
    }
    return out;
}

ImageBuffer gaussian_blur(const ImageBuffer& gray, int kernel, double sigma) {
    require(gray.channels == 1, "gaussian_blur: expects a single-channel image");
    check_odd_kernel(kernel);
    require(sigma > 0.0, "gaussian_blur: sigma must be positive");
    const auto taps = gaussian_taps(kernel, sigma);
    const int r = kernel / 2, w = gray.width, h = gray.height;

    std::vector<double> tmp(gray.pixel_count());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -r; k <= r; ++k)
                s += taps[k + r] * gray.at(clampi(x + k, 0, w - 1), y);
            tmp[static_cast<std::size_t>(y) * w + x] = s;
        }

    ImageBuffer out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -r; k <= r; ++k)
                s += taps[k + r] * tmp[static_cast<std::size_t>(clampi(y + k, 0, h - 1)) * w + x];
            out.at(x, y) = static_cast<std::uint8_t>(
                std::lround(std::clamp(s, 0.0, 255.0)));
        }
    return out;
}

GrayMask threshold(const ImageBuffer& gray, int low, int high) {
    require(gray.channels == 1, "threshold: expects a single-channel image");
    require(low <= high, "threshold: low must not exceed high");
    require(low >= 0 && high <= 255, "threshold: bounds must lie in [0, 255]");
    GrayMask out(gray.width, gray.height);
    for (std::size_t i = 0, n = gray.data.size(); i < n; ++i)
        out.bits[i] = (gray.data[i] >= low && gray.data[i] <= high) ? 1 : 0;
    return out;
}

GrayMask erode(const GrayMask& mask, int kernel, int iters) {
    return morph(mask, kernel, iters, true);
}

GrayMask dilate(const GrayMask& mask, int kernel, int iters) {
    return morph(mask, kernel, iters, false);
}

GrayMask build_mask(const ImageBuffer& img, const MaskParams& p) {
    const ImageBuffer blurred = gaussian_blur(to_grayscale(img), p.blur_kernel, p.blur_sigma);
    GrayMask m = threshold(blurred, p.low, p.high);
    m = erode(m, p.morph_kernel, p.erode_iters);
    return dilate(m, p.morph_kernel, p.dilate_iters);
}

ImageBuffer mask_to_image(const GrayMask& mask) {
    ImageBuffer out(mask.width, mask.height, 1);
    for (std::size_t i = 0, n = mask.bits.size(); i < n; ++i)
        out.data[i] = mask.bits[i] ? 255 : 0;
    return out;
}

GrayMask mask_from_image(const ImageBuffer& img) {
    require(img.channels == 1, "mask_from_image: expects a single-channel image");
    GrayMask out(img.width, img.height);
    for (std::size_t i = 0, n = img.data.size(); i < n; ++i)
        out.bits[i] = img.data[i] >= 128 ? 1 : 0;
    return out;
}

}  // namespace glarefuse
