#pragma once

#include "glarefuse/image.hpp"

namespace glarefuse {

// Conventional kernel-to-sigma mapping used when only a kernel size is given.
constexpr double default_blur_sigma(int kernel) {
    return 0.3 * ((kernel - 1) * 0.5 - 1.0) + 0.8;
}

// Parameters of the glare-mask chain:
// grayscale -> Gaussian blur -> band threshold -> erode -> dilate.
struct MaskParams {
    int low = 170;
    int high = 255;
    int blur_kernel = 9;
    double blur_sigma = default_blur_sigma(9);
    int erode_iters = 2;
    int dilate_iters = 4;
    int morph_kernel = 3;
};

// BT.601 luma, rounded to nearest. Single-channel input passes through.
ImageBuffer to_grayscale(const ImageBuffer& img);

// Separable Gaussian with replicated edges. Accumulates in double precision
// and rounds once at the end.
ImageBuffer gaussian_blur(const ImageBuffer& gray, int kernel, double sigma);

// Inclusive band threshold: low <= value <= high.
GrayMask threshold(const ImageBuffer& gray, int low, int high);

// Square structuring element; pixels outside the image count as unset, so
// erosion clears a border of kernel/2 per iteration.
GrayMask erode(const GrayMask& mask, int kernel, int iters);
GrayMask dilate(const GrayMask& mask, int kernel, int iters);

GrayMask build_mask(const ImageBuffer& img, const MaskParams& params);

// PNG-facing representation: 0 = keep, 255 = inpaint.
ImageBuffer mask_to_image(const GrayMask& mask);
GrayMask mask_from_image(const ImageBuffer& img);

}  // namespace glarefuse
