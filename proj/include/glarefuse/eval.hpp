#pragma once

#include "glarefuse/geometry.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace glarefuse {

struct GroundTruth {
    std::string image_id;
    std::string domain;
    std::vector<Box> boxes;
};

// Indices refer to positions in the vectors passed to match().
struct MatchPair {
    int pred_index;
    int gt_index;
    double iou;
};

struct MatchResult {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::vector<MatchPair> pairs;
};

// Greedy one-to-one matching: predictions at or above conf_thr are visited in
// descending score order and take the unmatched ground-truth box of highest
// IoU, provided that IoU strictly exceeds iou_thr.
MatchResult match(const std::vector<Box>& preds, const std::vector<Box>& gts,
                  double iou_thr, double conf_thr);

// TP / (TP + FP + FN); an empty image with no predictions scores 1.
double image_accuracy(const MatchResult& m);

struct DomainStats {
    int images = 0;
    double mean_accuracy = 0.0;
};

struct DomainReport {
    std::map<std::string, DomainStats> per_domain;
    double ada = 0.0;  // unweighted mean of the per-domain means
};

// Entries sharing a domain name are merged before averaging, so the result
// does not depend on input order.
DomainReport ada(const std::vector<std::pair<std::string, std::vector<double>>>&
                     domain_accuracies);

// Accuracy table: one row per detection-set combination, one column per
// confidence threshold.
struct ReportTable {
    std::vector<std::string> rows;
    std::vector<double> thresholds;
    std::vector<std::vector<double>> values;  // [row][threshold]

    std::string to_csv() const;
    std::string to_pretty() const;
};

}  // namespace glarefuse
