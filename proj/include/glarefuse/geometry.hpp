#pragma once

#include <stdexcept>

namespace glarefuse {

// Axis-aligned detection box in continuous image coordinates, origin at the
// top-left corner. Covers the half-open region [x_min, x_max) x [y_min, y_max).
struct Box {
    double x_min;
    double y_min;
    double x_max;
    double y_max;
    double score;
    int label;

    Box(double x0, double y0, double x1, double y1, double s = 1.0, int l = 0)
        : x_min(x0), y_min(y0), x_max(x1), y_max(y1), score(s), label(l) {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw std::invalid_argument("Box: extents must be strictly positive");
        if (!(score >= 0.0 && score <= 1.0))
            throw std::invalid_argument("Box: score must lie in [0, 1]");
        if (label < 0)
            throw std::invalid_argument("Box: label must be non-negative");
    }

    bool operator==(const Box&) const = default;
};

double area(const Box& b) noexcept;

// Intersection over union; 0 for boxes that only touch along an edge.
double iou(const Box& a, const Box& b) noexcept;

}  // namespace glarefuse
