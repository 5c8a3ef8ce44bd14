#include "glarefuse/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace glarefuse {

PenaltyMatrix penalty_matrix(int width, int height, const std::vector<Box>& boxes) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("penalty_matrix: dimensions must be positive");

    const double inside = 1.0 / 0.01;
    const double outside = 1.0 / 0.99;

    PenaltyMatrix p;
    p.width = width;
    p.height = height;
    p.values.assign(static_cast<std::size_t>(width) * height, outside);
    for (const Box& b : boxes)
        for (int y = 0; y < height; ++y) {
            const double cy = y + 0.5;
            if (cy < b.y_min || cy >= b.y_max) continue;
            for (int x = 0; x < width; ++x) {
                const double cx = x + 0.5;
                if (cx >= b.x_min && cx < b.x_max)
                    p.values[static_cast<std::size_t>(y) * width + x] = inside;
            }
        }
    return p;
}

double masked_mse_loss(std::span<const double> pred, std::span<const double> target,
                       const PenaltyMatrix& penalty) {
    const std::size_t n = penalty.values.size();
    if (n == 0) throw std::invalid_argument("masked_mse_loss: empty penalty matrix");
    if (pred.size() != target.size() || pred.empty() || pred.size() % n != 0)
        throw std::invalid_argument(
            "masked_mse_loss: pred/target must be equal-sized stacks of the matrix shape");

    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        loss += d * d * penalty.values[i % n];
    }
    return loss;
}

double smooth_l1(double x, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1: beta must be positive");
    const double ax = std::abs(x);
    if (ax < beta) return 0.5 * x * x / beta;
    return ax - 0.5 * beta;
}

}  // namespace glarefuse
