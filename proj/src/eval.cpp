#include "glarefuse/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <tuple>

namespace glarefuse {

MatchResult match(const std::vector<Box>& preds, const std::vector<Box>& gts,
                  double iou_thr, double conf_thr) {
    if (!(iou_thr > 0.0 && iou_thr <= 1.0))
        throw std::invalid_argument("match: iou_thr must lie in (0, 1]");

    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(preds.size()); ++i)
        if (preds[i].score >= conf_thr) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const Box& pa = preds[a];
        const Box& pb = preds[b];
        return std::make_tuple(-pa.score, pa.x_min, pa.y_min, pa.x_max, pa.y_max) <
               std::make_tuple(-pb.score, pb.x_min, pb.y_min, pb.x_max, pb.y_max);
    });

    MatchResult r;
    std::vector<char> taken(gts.size(), 0);
    for (int i : order) {
        int best = -1;
        double best_iou = 0.0;
        for (int j = 0; j < static_cast<int>(gts.size()); ++j) {
            if (taken[j] || preds[i].label != gts[j].label) continue;
            const double v = iou(preds[i], gts[j]);
            if (v > best_iou) {  // strict: ties keep the lowest index
                best = j;
                best_iou = v;
            }
        }
        if (best >= 0 && best_iou > iou_thr) {
            taken[best] = 1;
            r.pairs.push_back({i, best, best_iou});
        }
    }
    r.tp = static_cast<int>(r.pairs.size());
    r.fp = static_cast<int>(order.size()) - r.tp;
    r.fn = static_cast<int>(gts.size()) - r.tp;
    return r;
}

double image_accuracy(const MatchResult& m) {
    const int denom = m.tp + m.fp + m.fn;
    if (denom == 0) return 1.0;
    return static_cast<double>(m.tp) / static_cast<double>(denom);
}

DomainReport ada(const std::vector<std::pair<std::string, std::vector<double>>>&
                     domain_accuracies) {
    if (domain_accuracies.empty())
        throw std::invalid_argument("ada: at least one domain is required");

    std::map<std::string, std::vector<double>> merged;
    for (const auto& [name, accs] : domain_accuracies) {
        auto& dst = merged[name];
        dst.insert(dst.end(), accs.begin(), accs.end());
    }

    DomainReport rep;
    double total = 0.0;
    for (const auto& [name, accs] : merged) {
        if (accs.empty())
            throw std::invalid_argument("ada: domain '" + name + "' has no images");
        double sum = 0.0;
        for (double a : accs) sum += a;
        const double mean = sum / static_cast<double>(accs.size());
        rep.per_domain[name] = {static_cast<int>(accs.size()), mean};
        total += mean;
    }
    rep.ada = total / static_cast<double>(merged.size());
    return rep;
}

namespace {

std::string fmt_threshold(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", t);
    return buf;
}

std::string fmt_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string ReportTable::to_csv() const {
    std::string out = "combination";
    for (double t : thresholds) {
        out += ',';
        out += fmt_threshold(t);
    }
    out += '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out += rows[r];
        for (std::size_t c = 0; c < thresholds.size(); ++c) {
            out += ',';
            out += fmt_value(values[r][c]);
        }
        out += '\n';
    }
    return out;
}

std::string ReportTable::to_pretty() const {
    std::size_t label_w = 11;  // "combination"
    for (const std::string& r : rows) label_w = std::max(label_w, r.size());

    std::string out = "combination";
    out.append(label_w - 11, ' ');
    for (double t : thresholds) {
        const std::string cell = fmt_threshold(t);
        out.append(10 - std::min<std::size_t>(9, cell.size()), ' ');
        out += cell;
    }
    out += '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out += rows[r];
        out.append(label_w - rows[r].size(), ' ');
        for (std::size_t c = 0; c < thresholds.size(); ++c) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%10.4f", values[r][c]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace glarefuse
