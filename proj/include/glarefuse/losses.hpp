#pragma once

#include "glarefuse/geometry.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace glarefuse {

// Per-pixel loss weights: 1/0.01 inside ground-truth boxes, 1/0.99 elsewhere.
// Membership is evaluated at pixel centers against the half-open box region.
struct PenaltyMatrix {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

PenaltyMatrix penalty_matrix(int width, int height, const std::vector<Box>& boxes);

// Squared error weighted by the penalty matrix, summed over pixels. pred and
// target may stack several images; their length must be a multiple of the
// matrix size.
double masked_mse_loss(std::span<const double> pred, std::span<const double> target,
                       const PenaltyMatrix& penalty);

// 0.5 x^2 / beta for |x| < beta, |x| - 0.5 beta otherwise.
double smooth_l1(double x, double beta = 1.0);

}  // namespace glarefuse
