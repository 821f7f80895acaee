#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ridesplit {

// column-major so histogram passes stream one feature at a time
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> columns;  // [n_features][n_rows]
    std::vector<double> target;

    std::size_t n_rows() const { return target.size(); }
    std::size_t n_features() const { return columns.size(); }
    std::vector<double> row(std::size_t i) const;
    void check() const;  // throws when column lengths disagree
};

enum class Growth { level_wise, leaf_wise };

std::string to_string(Growth g);
Growth growth_from_string(const std::string& s);

struct Hyperparams {
    int iterations = 100;
    double learning_rate = 0.1;
    int depth = 6;
    int n_bins = 255;
    int min_samples_leaf = 20;
    Growth growth = Growth::level_wise;
    int max_leaves = 0;  // 0 means 2^depth
};

void validate_hyperparams(const Hyperparams& hp);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(const double* row) const;
    int n_leaves() const;
};

struct BoostedModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> bin_edges;  // per feature, ascending
    std::vector<Tree> trees;
    std::vector<double> loss_trace;  // train MSE after each round
    Hyperparams hp;

    double predict_row(const double* row, std::size_t n_features) const;
    double predict_row(const std::vector<double>& row) const;
    std::vector<double> predict(const Dataset& data) const;

    void save_file(const std::string& path) const;
    static BoostedModel load_file(const std::string& path);
};

// RMSE on eval rows after each listed round, filled during one training pass;
// boosting prefixes are identical, so this equals training each count separately
struct EvalTrace {
    std::vector<int> checkpoints;
    std::vector<double> rmse;
};

BoostedModel train_gbm(const Dataset& train, const Hyperparams& hp,
                       const Dataset* eval = nullptr,
                       const std::vector<int>* checkpoints = nullptr,
                       EvalTrace* trace = nullptr);

struct SplitResult {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

SplitResult train_test_split(const Dataset& data, double train_ratio, std::uint64_t seed);

// disjoint, exhaustive, sizes differing by at most one
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k,
                                                    std::uint64_t seed);

struct HyperGrid {
    std::vector<int> iterations = {2000, 2500, 3000, 3500, 4000, 4500, 5000};
    std::vector<double> learning_rates = {0.005, 0.01, 0.05};
    std::vector<int> depths = {3, 4, 5, 6, 7, 8};
};

struct ComboScore {
    Hyperparams hp;
    double mean_cv_rmse = 0.0;
};

struct GridSearchResult {
    Hyperparams best;
    double best_rmse = 0.0;
    std::vector<ComboScore> combos;  // every evaluated combination
};

// exhaustive k-fold search; ties broken by fewer iterations, then smaller
// depth, then lower learning rate; fold partition is fixed by seed
GridSearchResult grid_search_cv(const Dataset& train, const HyperGrid& grid,
                                const Hyperparams& base, int k, std::uint64_t seed);

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> r2;  // empty when the target has zero variance
};

Metrics evaluate(const std::vector<double>& predictions,
                 const std::vector<double>& targets);

struct OlsModel {
    double intercept = 0.0;
    std::vector<double> coef;
    std::vector<std::string> feature_names;
    double predict_row(const std::vector<double>& row) const;
    std::vector<double> predict(const Dataset& data) const;
};

// least squares via column-pivoted QR; throws naming dependent columns
OlsModel ols_fit(const Dataset& train);

}  // namespace ridesplit
