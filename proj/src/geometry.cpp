#include "glarefuse/geometry.hpp"

#include <algorithm>

namespace glarefuse {

double area(const Box& b) noexcept {
    return (b.x_max - b.x_min) * (b.y_max - b.y_min);
}

double iou(const Box& a, const Box& b) noexcept {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (area(a) + area(b) - inter);
}

}  // namespace glarefuse
