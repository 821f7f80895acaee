#pragma once

#include <cstddef>
#include <vector>

#include "ridesplit/gbm.hpp"

namespace ridesplit {

struct Explanation {
    double phi0 = 0.0;            // expected prediction over the background
    std::vector<double> phi;      // per-feature attribution
    double prediction = 0.0;
};

// exact interventional Shapley values: every coalition value is the mean
// model output over background rows with coalition features taken from the
// explained row; enumerates all 2^F subsets, so F is capped at 16
Explanation shapley_exact(const BoostedModel& model, const std::vector<double>& row,
                          const Dataset& background);

struct ImportanceEntry {
    std::size_t feature = 0;
    double importance = 0.0;
};

// mean absolute attribution, sorted descending; equal values keep feature order
std::vector<ImportanceEntry> shap_importance(
    const std::vector<Explanation>& explanations);

struct PdpResult {
    std::vector<std::size_t> features;       // one or two feature indices
    std::vector<std::vector<double>> grids;  // grid values per feature
    // 1D: values[i]; 2D: values[i * grids[1].size() + k], row-major
    std::vector<double> values;
    // reference-sample count per grid bin (midpoint boundaries), same layout
    std::vector<std::size_t> histogram;
};

// evenly spaced quantile grid over observed values, endpoints included
std::vector<double> quantile_grid(std::vector<double> values, std::size_t points);

constexpr std::size_t kDefaultPdpGrid = 20;

// empirical marginal effect: mean prediction over the reference set with the
// chosen features pinned to each grid point (or 2D grid cell)
PdpResult pdp(const BoostedModel& model, const Dataset& reference,
              const std::vector<std::size_t>& features,
              std::vector<std::vector<double>> grids = {},
              std::size_t grid_points = kDefaultPdpGrid);

struct DependenceRow {
    double x_j = 0.0;
    double phi_j = 0.0;
    double x_h = 0.0;
};

// one row per explained sample, no aggregation
std::vector<DependenceRow> shap_dependence(const std::vector<Explanation>& explanations,
                                           const Dataset& rows, std::size_t feature_j,
                                           std::size_t feature_h);

}  // namespace ridesplit
