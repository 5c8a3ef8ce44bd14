#include "glarefuse/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace glarefuse {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

constexpr double kGradEps = 1e-8;

// Crop of the image the solver works on: mask bounding box plus a margin of
// unmasked context. Anything outside never participates.
struct Workspace {
    int ox = 0, oy = 0;  // crop origin in image coordinates
    int w = 0, h = 0;
    std::vector<std::uint8_t> masked;          // crop-local mask
    std::vector<std::pair<int, int>> px;       // crop-local masked coordinates

    bool is_masked(int x, int y) const {
        return masked[static_cast<std::size_t>(y) * w + x] != 0;
    }
};

Workspace make_workspace(const GrayMask& mask, int margin) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.test(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    x0 = std::max(0, x0 - margin);
    y0 = std::max(0, y0 - margin);
    x1 = std::min(mask.width - 1, x1 + margin);
    y1 = std::min(mask.height - 1, y1 + margin);

    Workspace ws;
    ws.ox = x0;
    ws.oy = y0;
    ws.w = x1 - x0 + 1;
    ws.h = y1 - y0 + 1;
    ws.masked.assign(static_cast<std::size_t>(ws.w) * ws.h, 0);
    for (int y = 0; y < ws.h; ++y)
        for (int x = 0; x < ws.w; ++x)
            if (mask.test(x0 + x, y0 + y)) {
                ws.masked[static_cast<std::size_t>(y) * ws.w + x] = 1;
                ws.px.emplace_back(x, y);
            }
    return ws;
}

// Channel values on the crop; masked pixels start at the unmasked mean so the
// first sweeps have sane data. Returns the allowed [min, max] range.
std::pair<double, double> load_field(const ImageBuffer& img, const Workspace& ws,
                                     int c, std::vector<double>& field) {
    field.resize(static_cast<std::size_t>(ws.w) * ws.h);
    double lo = 255.0, hi = 0.0, sum = 0.0;
    std::size_t n_unmasked = 0;
    for (int y = 0; y < ws.h; ++y)
        for (int x = 0; x < ws.w; ++x) {
            const double v = img.at(ws.ox + x, ws.oy + y, c);
            field[static_cast<std::size_t>(y) * ws.w + x] = v;
            if (!ws.is_masked(x, y)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
                ++n_unmasked;
            }
        }
    // The crop always contains unmasked context: either the margin ring or,
    // when the mask spans the whole frame, the holes inside it.
    const double mean = sum / static_cast<double>(n_unmasked);
    for (auto [x, y] : ws.px) field[static_cast<std::size_t>(y) * ws.w + x] = mean;
    return {lo, hi};
}

// Gauss-Seidel sweeps of the Laplace equation over masked pixels; clamped
// reads replicate the crop border. Returns completed sweep count.
int solve_harmonic(std::vector<double>& field, const Workspace& ws,
                   int max_iters, double tol) {
    const int w = ws.w, h = ws.h;
    auto val = [&](int x, int y) -> double {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return field[static_cast<std::size_t>(y) * w + x];
    };
    int sweeps = 0;
    for (int it = 0; it < max_iters; ++it) {
        double change = 0.0;
        for (auto [x, y] : ws.px) {
            const double v =
                0.25 * (val(x - 1, y) + val(x + 1, y) + val(x, y - 1) + val(x, y + 1));
            change += std::abs(v - field[static_cast<std::size_t>(y) * w + x]);
            field[static_cast<std::size_t>(y) * w + x] = v;
        }
        ++sweeps;
        if (change / static_cast<double>(ws.px.size()) < tol) break;
    }
    return sweeps;
}

void check_common(const ImageBuffer& img, const GrayMask& mask) {
    require(mask.width == img.width && mask.height == img.height,
            "inpaint: mask and image dimensions differ");
    if (mask.count() == mask.bits.size())
        throw std::invalid_argument("inpaint: mask covers the entire image");
}

// One workspace per connected blob of the mask, so a few small patches do not
// force a frame-sized solve. Blobs whose margin bands could reach each other's
// pixels are merged until every crop contains only its own unknowns.
std::vector<Workspace> make_group_workspaces(const GrayMask& mask, int margin) {
    const int w = mask.width, h = mask.height;
    struct Rect {
        int x0, y0, x1, y1;
    };
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<Rect> comps;
    std::vector<int> stack;
    for (int sy = 0; sy < h; ++sy)
        for (int sx = 0; sx < w; ++sx) {
            if (!mask.test(sx, sy) || label[static_cast<std::size_t>(sy) * w + sx] >= 0) continue;
            const int id = static_cast<int>(comps.size());
            comps.push_back({sx, sy, sx, sy});
            label[static_cast<std::size_t>(sy) * w + sx] = id;
            stack.assign(1, sy * w + sx);
            while (!stack.empty()) {
                const int px = stack.back() % w, py = stack.back() / w;
                stack.pop_back();
                Rect& r = comps[id];
                r.x0 = std::min(r.x0, px);
                r.y0 = std::min(r.y0, py);
                r.x1 = std::max(r.x1, px);
                r.y1 = std::max(r.y1, py);
                const int nbr[4][2] = {{px - 1, py}, {px + 1, py}, {px, py - 1}, {px, py + 1}};
                for (const auto& nb : nbr) {
                    const int nx = nb[0], ny = nb[1];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    auto& l = label[static_cast<std::size_t>(ny) * w + nx];
                    if (l >= 0 || !mask.test(nx, ny)) continue;
                    l = id;
                    stack.push_back(ny * w + nx);
                }
            }
        }

    std::vector<int> parent(comps.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int v) {
        return parent[v] == v ? v : parent[v] = find(parent[v]);
    };

    // Merge to a fixpoint: afterwards no group's expanded box touches another
    // group's core box, so each crop sees no foreign masked pixels.
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<int, Rect> roots;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const int r = find(static_cast<int>(i));
            auto it = roots.find(r);
            if (it == roots.end()) {
                roots.emplace(r, comps[i]);
            } else {
                it->second.x0 = std::min(it->second.x0, comps[i].x0);
                it->second.y0 = std::min(it->second.y0, comps[i].y0);
                it->second.x1 = std::max(it->second.x1, comps[i].x1);
                it->second.y1 = std::max(it->second.y1, comps[i].y1);
            }
        }
        for (auto a = roots.begin(); a != roots.end(); ++a)
            for (auto b = std::next(a); b != roots.end(); ++b) {
                const Rect& ra = a->second;
                const Rect& rb = b->second;
                const bool touches = ra.x0 - margin <= rb.x1 && rb.x0 <= ra.x1 + margin &&
                                     ra.y0 - margin <= rb.y1 && rb.y0 <= ra.y1 + margin;
                if (touches && find(a->first) != find(b->first)) {
                    parent[find(a->first)] = find(b->first);
                    changed = true;
                }
            }
    }

    std::map<int, Rect> final_rects;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const int r = find(static_cast<int>(i));
        auto it = final_rects.find(r);
        if (it == final_rects.end()) {
            final_rects.emplace(r, comps[i]);
        } else {
            it->second.x0 = std::min(it->second.x0, comps[i].x0);
            it->second.y0 = std::min(it->second.y0, comps[i].y0);
            it->second.x1 = std::max(it->second.x1, comps[i].x1);
            it->second.y1 = std::max(it->second.y1, comps[i].y1);
        }
    }

    std::vector<Workspace> out;
    for (const auto& [root, r] : final_rects) {
        const int x0 = std::max(0, r.x0 - margin);
        const int y0 = std::max(0, r.y0 - margin);
        const int x1 = std::min(w - 1, r.x1 + margin);
        const int y1 = std::min(h - 1, r.y1 + margin);
        Workspace ws;
        ws.ox = x0;
        ws.oy = y0;
        ws.w = x1 - x0 + 1;
        ws.h = y1 - y0 + 1;
        ws.masked.assign(static_cast<std::size_t>(ws.w) * ws.h, 0);
        for (int y = 0; y < ws.h; ++y)
            for (int x = 0; x < ws.w; ++x)
                if (mask.test(x0 + x, y0 + y)) {
                    ws.masked[static_cast<std::size_t>(y) * ws.w + x] = 1;
                    ws.px.emplace_back(x, y);
                }
        out.push_back(std::move(ws));
    }
    return out;
}

void write_back(ImageBuffer& out, const Workspace& ws, int c,
                const std::vector<double>& field) {
    for (auto [x, y] : ws.px)
        out.at(ws.ox + x, ws.oy + y, c) = static_cast<std::uint8_t>(
            std::lround(std::clamp(field[static_cast<std::size_t>(y) * ws.w + x], 0.0, 255.0)));
}

// Solves one channel on one crop: harmonic initialization, then transport of
// the Laplacian along isophote normals with upwind advancement, interleaved
// with curvature-driven smoothing. Writes the masked pixels into `out` and
// returns the iteration count; per-iteration residuals land in res_hist.
int transport_channel(const ImageBuffer& img, const Workspace& ws, int c,
                      const InpaintParams& p, ImageBuffer& out,
                      std::vector<double>& res_hist) {
    const int w = ws.w, h = ws.h;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> field, snap(n), lap(n);
    auto sq = [](double v) { return v * v; };

    const auto [lo, hi] = load_field(img, ws, c, field);
    solve_harmonic(field, ws, p.max_iters, p.tol);

    auto sval = [&](int x, int y) -> double {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return snap[static_cast<std::size_t>(y) * w + x];
    };
    auto slap = [&](int x, int y) -> double {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return lap[static_cast<std::size_t>(y) * w + x];
    };

    int iters_done = 0;
    for (int it = 1; it <= p.max_iters; ++it) {
        snap = field;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                lap[static_cast<std::size_t>(y) * w + x] =
                    sval(x + 1, y) + sval(x - 1, y) + sval(x, y + 1) + sval(x, y - 1) -
                    4.0 * sval(x, y);

        // Transport step: move the Laplacian along isophote normals,
        // advancing with the upwind gradient magnitude.
        double change = 0.0;
        for (auto [x, y] : ws.px) {
            const double dlx = slap(x + 1, y) - slap(x - 1, y);
            const double dly = slap(x, y + 1) - slap(x, y - 1);
            const double ix = 0.5 * (sval(x + 1, y) - sval(x - 1, y));
            const double iy = 0.5 * (sval(x, y + 1) - sval(x, y - 1));
            const double nx = -iy, ny = ix;
            const double nn = std::sqrt(nx * nx + ny * ny);
            const double beta = (dlx * nx + dly * ny) / (nn + kGradEps);

            const double fx = sval(x + 1, y) - sval(x, y);
            const double bx = sval(x, y) - sval(x - 1, y);
            const double fy = sval(x, y + 1) - sval(x, y);
            const double by = sval(x, y) - sval(x, y - 1);
            double g;
            if (beta > 0.0)
                g = std::sqrt(sq(std::min(bx, 0.0)) + sq(std::max(fx, 0.0)) +
                              sq(std::min(by, 0.0)) + sq(std::max(fy, 0.0)));
            else
                g = std::sqrt(sq(std::max(bx, 0.0)) + sq(std::min(fx, 0.0)) +
                              sq(std::max(by, 0.0)) + sq(std::min(fy, 0.0)));

            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            const double v = std::clamp(snap[idx] + p.dt * beta * g, lo, hi);
            change += std::abs(v - snap[idx]);
            field[idx] = v;
        }

        // Interleaved anisotropic smoothing: curvature motion keeps the
        // transported values coherent without flattening edges.
        if (p.diffusion_interleave > 0 && p.diffusion_weight > 0.0 &&
            it % p.diffusion_interleave == 0) {
            snap = field;
            for (auto [x, y] : ws.px) {
                const double ix = 0.5 * (sval(x + 1, y) - sval(x - 1, y));
                const double iy = 0.5 * (sval(x, y + 1) - sval(x, y - 1));
                const double ixx = sval(x + 1, y) - 2.0 * sval(x, y) + sval(x - 1, y);
                const double iyy = sval(x, y + 1) - 2.0 * sval(x, y) + sval(x, y - 1);
                const double ixy = 0.25 * (sval(x + 1, y + 1) + sval(x - 1, y - 1) -
                                           sval(x + 1, y - 1) - sval(x - 1, y + 1));
                const double curv = (ixx * iy * iy - 2.0 * ix * iy * ixy + iyy * ix * ix) /
                                    (ix * ix + iy * iy + kGradEps);

                const std::size_t idx = static_cast<std::size_t>(y) * w + x;
                const double v =
                    std::clamp(snap[idx] + p.dt * p.diffusion_weight * curv, lo, hi);
                change += std::abs(v - snap[idx]);
                field[idx] = v;
            }
        }

        const double res = change / static_cast<double>(ws.px.size());
        res_hist.push_back(res);
        iters_done = it;
        if (res < p.tol) break;
    }

    write_back(out, ws, c, field);
    return iters_done;
}

}  // namespace

ImageBuffer harmonic_fill(const ImageBuffer& img, const GrayMask& mask,
                          int max_iters, double tol) {
    check_common(img, mask);
    require(max_iters >= 1, "harmonic_fill: max_iters must be at least 1");
    require(tol >= 0.0, "harmonic_fill: tol must be non-negative");
    ImageBuffer out = img;
    if (mask.count() == 0) return out;

    // Full-frame workspace: the fill uses all available context.
    Workspace ws = make_workspace(mask, std::max(mask.width, mask.height));
    std::vector<double> field;
    for (int c = 0; c < img.channels; ++c) {
        load_field(img, ws, c, field);
        solve_harmonic(field, ws, max_iters, tol);
        write_back(out, ws, c, field);
    }
    return out;
}

ImageBuffer inpaint_ns(const ImageBuffer& img, const GrayMask& mask,
                       const InpaintParams& p, InpaintStats* stats) {
    check_common(img, mask);
    require(p.radius >= 0, "inpaint: radius must be non-negative");
    require(p.max_iters >= 1, "inpaint: max_iters must be at least 1");
    require(p.dt > 0.0, "inpaint: dt must be positive");
    require(p.tol >= 0.0, "inpaint: tol must be non-negative");
    require(p.diffusion_weight >= 0.0, "inpaint: diffusion_weight must be non-negative");
    require(p.diffusion_interleave >= 0, "inpaint: diffusion_interleave must be non-negative");

    if (stats) {
        stats->iterations.clear();
        stats->residuals.clear();
    }
    ImageBuffer out = img;
    if (mask.count() == 0) {
        if (stats) {
            stats->iterations.assign(img.channels, 0);
            stats->residuals.assign(img.channels, {});
        }
        return out;
    }

    const std::vector<Workspace> groups = make_group_workspaces(mask, std::max(1, p.radius));
    std::vector<int> iters_by_ch(img.channels, 0);
    std::vector<std::vector<double>> res_by_ch(img.channels);

    for (const Workspace& ws : groups)
        for (int c = 0; c < img.channels; ++c) {
            std::vector<double> res_hist;
            const int iters_done = transport_channel(img, ws, c, p, out, res_hist);
            // Report the slowest blob per channel; ties keep the first trace.
            if (iters_done > iters_by_ch[c]) {
                iters_by_ch[c] = iters_done;
                res_by_ch[c] = std::move(res_hist);
            }
        }

    if (stats) {
        stats->iterations = std::move(iters_by_ch);
        stats->residuals = std::move(res_by_ch);
    }
    return out;
}

}  // namespace glarefuse
