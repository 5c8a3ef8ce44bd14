#include "glarefuse/wbf.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string_view>
#include <tuple>
#include <vector>

namespace glarefuse {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

struct Member {
    Box box;
    double weight;  // model weight of the source set
    std::string_view source;
};

// Deterministic processing order: score first, then geometry so ties cannot
// depend on input order. Equal keys are fully interchangeable in the sums.
auto member_key(const Member& m) {
    return std::make_tuple(-m.box.score, m.box.x_min, m.box.y_min, m.box.x_max,
                           m.box.y_max, m.box.label, m.weight);
}

struct Cluster {
    std::vector<Member> members;
    int label;
    double sum_w = 0.0;  // sum of score * model_weight
    double sx0 = 0.0, sy0 = 0.0, sx1 = 0.0, sy1 = 0.0;
    double fx0, fy0, fx1, fy1;  // current fused coordinates

    explicit Cluster(const Member& m) : label(m.box.label) { add(m); }

    void add(const Member& m) {
        members.push_back(m);
        const double w = m.box.score * m.weight;
        sum_w += w;
        sx0 += w * m.box.x_min;
        sy0 += w * m.box.y_min;
        sx1 += w * m.box.x_max;
        sy1 += w * m.box.y_max;
        if (members.size() == 1) {
            // Exact pass-through for singleton clusters.
            fx0 = m.box.x_min;
            fy0 = m.box.y_min;
            fx1 = m.box.x_max;
            fy1 = m.box.y_max;
        } else if (sum_w > 0.0) {
            fx0 = sx0 / sum_w;
            fy0 = sy0 / sum_w;
            fx1 = sx1 / sum_w;
            fy1 = sy1 / sum_w;
        } else {
            // All member scores are zero; fall back to the plain average.
            double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
            for (const Member& mm : members) {
                x0 += mm.box.x_min;
                y0 += mm.box.y_min;
                x1 += mm.box.x_max;
                y1 += mm.box.y_max;
            }
            const double inv = 1.0 / static_cast<double>(members.size());
            fx0 = x0 * inv;
            fy0 = y0 * inv;
            fx1 = x1 * inv;
            fy1 = y1 * inv;
        }
    }

    double fused_score(ScoreMode mode) const {
        // Singleton clusters keep their score bit-exact; averaging one value
        // through (w * s) / w would only add rounding noise.
        if (members.size() == 1) return members.front().box.score;
        double s = 0.0;
        if (mode == ScoreMode::Mean) {
            for (const Member& m : members) s += m.box.score;
            return s / static_cast<double>(members.size());
        }
        double ww = 0.0;
        for (const Member& m : members) {
            s += m.weight * m.box.score;
            ww += m.weight;
        }
        return s / ww;  // model weights are validated positive
    }

    int distinct_sources() const {
        std::set<std::string_view> seen;
        for (const Member& m : members) seen.insert(m.source);
        return static_cast<int>(seen.size());
    }
};

}  // namespace

DetectionSet fuse(const std::vector<DetectionSet>& sets, const FusionParams& p) {
    require(!sets.empty(), "fuse: at least one detection set is required");
    require(p.iou_thr > 0.0 && p.iou_thr <= 1.0, "fuse: iou_thr must lie in (0, 1]");
    require(p.skip_box_thr >= 0.0 && p.skip_box_thr <= 1.0,
            "fuse: skip_box_thr must lie in [0, 1]");

    const std::string& image_id = sets.front().image_id;
    for (const DetectionSet& s : sets) {
        if (s.image_id != image_id)
            throw std::invalid_argument("fuse: detection sets reference different images");
        require(s.model_weight > 0.0, "fuse: model weights must be positive");
    }

    std::vector<Member> all;
    for (const DetectionSet& s : sets)
        for (const Box& b : s.boxes)
            if (b.score >= p.skip_box_thr) all.push_back({b, s.model_weight, s.source_id});
    std::stable_sort(all.begin(), all.end(), [](const Member& a, const Member& b) {
        return member_key(a) < member_key(b);
    });

    // An ensemble of one has nothing to fuse: boxes pass through untouched so
    // the single-set call is an exact identity (modulo the sort and the skip
    // filter). Clustering applies only when sets can actually corroborate.
    const bool cluster_enabled = sets.size() > 1;

    std::vector<Cluster> clusters;
    for (const Member& m : all) {
        bool joined = false;
        if (cluster_enabled)
            for (Cluster& cl : clusters) {
                if (cl.label != m.box.label) continue;
                const Box running(cl.fx0, cl.fy0, cl.fx1, cl.fy1);
                if (iou(running, m.box) > p.iou_thr) {
                    cl.add(m);
                    joined = true;
                    break;
                }
            }
        if (!joined) clusters.emplace_back(m);
    }

    const int total_models = static_cast<int>(sets.size());
    std::vector<Box> fused;
    fused.reserve(clusters.size());
    for (const Cluster& cl : clusters) {
        double score = cl.fused_score(p.score_mode);
        if (p.rescale_by_models) {
            const int tc = cl.distinct_sources();
            score *= static_cast<double>(std::min(tc, total_models)) /
                     static_cast<double>(total_models);
        }
        fused.emplace_back(cl.fx0, cl.fy0, cl.fx1, cl.fy1, score, cl.label);
    }
    std::sort(fused.begin(), fused.end(), [](const Box& a, const Box& b) {
        return std::make_tuple(-a.score, a.x_min, a.y_min, a.x_max, a.y_max, a.label) <
               std::make_tuple(-b.score, b.x_min, b.y_min, b.x_max, b.y_max, b.label);
    });

    return DetectionSet{image_id, "wbf", std::move(fused), 1.0};
}

}  // namespace glarefuse
