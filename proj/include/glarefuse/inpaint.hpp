#pragma once

#include "glarefuse/image.hpp"

#include <vector>

namespace glarefuse {

struct InpaintParams {
    // Width of the unmasked context band around the mask bounding box that
    // participates in the solve; pixels further out are ignored.
    int radius = 3;
    int max_iters = 300;
    double dt = 0.1;
    // Stop once the mean absolute per-pixel update drops below tol.
    double tol = 1e-3;
    double diffusion_weight = 1.0;
    // Run one anisotropic smoothing pass after every N transport steps; 0 = off.
    int diffusion_interleave = 2;
};

// Convergence trace, one entry per channel.
struct InpaintStats {
    std::vector<int> iterations;
    std::vector<std::vector<double>> residuals;
};

// Laplace solve inside the mask with Dirichlet data from unmasked pixels and
// replicated image borders. Also the initializer for inpaint_ns.
ImageBuffer harmonic_fill(const ImageBuffer& img, const GrayMask& mask,
                          int max_iters, double tol);

// Fluid-style inpainting: transports the image Laplacian along isophotes with
// an upwind gradient magnitude, interleaved with curvature-driven smoothing,
// starting from a harmonic fill. Unmasked pixels are never written; masked
// results stay inside the unmasked intensity range of each channel.
ImageBuffer inpaint_ns(const ImageBuffer& img, const GrayMask& mask,
                       const InpaintParams& params = {},
                       InpaintStats* stats = nullptr);

}  // namespace glarefuse
