#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace glarefuse {

// Row-major 8-bit image, 1 (gray) or 3 (RGB) channels.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(checked_size(w, h, c), fill) {}

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    bool operator==(const ImageBuffer&) const = default;

private:
    static std::size_t checked_size(int w, int h, int c) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("ImageBuffer: dimensions must be positive");
        if (c != 1 && c != 3)
            throw std::invalid_argument("ImageBuffer: channels must be 1 or 3");
        return static_cast<std::size_t>(w) * h * c;
    }
};

// Binary per-pixel mask; a set bit marks a pixel to inpaint.
struct GrayMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // one 0/1 entry per pixel

    GrayMask() = default;
    GrayMask(int w, int h, bool fill = false)
        : width(w), height(h), bits(checked_size(w, h), fill ? 1 : 0) {}

    bool test(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits) n += b != 0;
        return n;
    }

    bool operator==(const GrayMask&) const = default;

private:
    static std::size_t checked_size(int w, int h) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("GrayMask: dimensions must be positive");
        return static_cast<std::size_t>(w) * h;
    }
};

}  // namespace glarefuse
