#include "ridesplit/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "ridesplit/rng.hpp"
#include "ridesplit/stats.hpp"

namespace ridesplit {

std::vector<double> Dataset::row(std::size_t i) const {
    std::vector<double> out(columns.size());
    for (std::size_t f = 0; f < columns.size(); ++f) out[f] = columns[f][i];
    return out;
}

void Dataset::check() const {
    if (feature_names.size() != columns.size())
        throw std::invalid_argument("dataset: feature name count differs from columns");
    for (const auto& c : columns)
        if (c.size() != target.size())
            throw std::invalid_argument("dataset: ragged columns");
}

std::string to_string(Growth g) {
    return g == Growth::level_wise ? "level_wise" : "leaf_wise";
}

Growth growth_from_string(const std::string& s) {
    if (s == "level_wise") return Growth::level_wise;
    if (s == "leaf_wise") return Growth::leaf_wise;
    throw std::invalid_argument("unknown growth strategy: " + s);
}

void validate_hyperparams(const Hyperparams& hp) {
    if (hp.iterations < 1)
        throw std::invalid_argument("hyperparams: iterations must be >= 1");
    if (!(hp.learning_rate > 0.0 && hp.learning_rate <= 1.0))
        throw std::invalid_argument("hyperparams: learning_rate must be in (0, 1]");
    if (hp.depth < 1) throw std::invalid_argument("hyperparams: depth must be >= 1");
    if (hp.n_bins < 2 || hp.n_bins > 255)
        throw std::invalid_argument("hyperparams: n_bins must be in [2, 255]");
    if (hp.min_samples_leaf < 1)
        throw std::invalid_argument("hyperparams: min_samples_leaf must be >= 1");
    if (hp.max_leaves < 0)
        throw std::invalid_argument("hyperparams: max_leaves must be >= 0");
}

double Tree::predict(const double* row) const {
    if (nodes.empty()) return 0.0;
    int i = 0;
    while (nodes[i].feature >= 0)
        i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                        : nodes[i].right;
    return nodes[i].value;
}

int Tree::n_leaves() const {
    int n = 0;
    for (const auto& node : nodes)
        if (node.feature < 0) ++n;
    return n;
}

double BoostedModel::predict_row(const double* row, std::size_t n_features) const {
    if (n_features != feature_names.size())
        throw std::invalid_argument("predict: row has " + std::to_string(n_features) +
                                    " features, model expects " +
                                    std::to_string(feature_names.size()));
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(row);
    return base_score + learning_rate * sum;
}

double BoostedModel::predict_row(const std::vector<double>& row) const {
    return predict_row(row.data(), row.size());
}

std::vector<double> BoostedModel::predict(const Dataset& data) const {
    data.check();
    if (data.n_features() != feature_names.size())
        throw std::invalid_argument("predict: dataset has " +
                                    std::to_string(data.n_features()) +
                                    " features, model expects " +
                                    std::to_string(feature_names.size()));
    std::vector<double> out(data.n_rows());
    std::vector<double> row(data.n_features());
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (std::size_t f = 0; f < data.n_features(); ++f) row[f] = data.columns[f][i];
        out[i] = predict_row(row.data(), row.size());
    }
    return out;
}

namespace {

constexpr double kMinGain = 1e-12;  // refuses numerically-zero splits

struct BinnedMatrix {
    std::vector<std::vector<double>> edges;        // per feature, ascending
    std::vector<std::vector<std::uint8_t>> codes;  // per feature, per row
    std::vector<int> bins;                         // per feature, edges+1
    std::vector<int> offsets;                      // feature start in flat layout
    int total_bins = 0;
};

// bin index: number of edges strictly below x, so x <= edges[b] holds for
// every row coded <= b and train-time bins agree with predict-time thresholds
int code_of(const std::vector<double>& edges, double x) {
    return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), x) -
                            edges.begin());
}

BinnedMatrix bin_dataset(const Dataset& d, int n_bins) {
    BinnedMatrix bm;
    const std::size_t n = d.n_rows();
    bm.edges.resize(d.n_features());
    bm.codes.resize(d.n_features());
    bm.bins.resize(d.n_features());
    bm.offsets.resize(d.n_features());
    for (std::size_t f = 0; f < d.n_features(); ++f) {
        std::vector<double> sorted = d.columns[f];
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> distinct = sorted;
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        auto& edges = bm.edges[f];
        if (static_cast<int>(distinct.size()) <= n_bins) {
            // midpoint edges reproduce the exact split search
            for (std::size_t i = 1; i < distinct.size(); ++i)
                edges.push_back(distinct[i - 1] + (distinct[i] - distinct[i - 1]) / 2.0);
        } else {
            for (int b = 1; b < n_bins; ++b)
                edges.push_back(quantile_sorted(sorted, static_cast<double>(b) / n_bins));
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        }
        bm.bins[f] = static_cast<int>(edges.size()) + 1;
        auto& codes = bm.codes[f];
        codes.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            codes[i] = static_cast<std::uint8_t>(code_of(edges, d.columns[f][i]));
        bm.offsets[f] = bm.total_bins;
        bm.total_bins += bm.bins[f];
    }
    return bm;
}

struct Histogram {
    std::vector<double> sum;
    std::vector<std::int32_t> count;
    void reset(int total_bins) {
        sum.assign(total_bins, 0.0);
        count.assign(total_bins, 0);
    }
    // this = parent - other, reusing parent storage
    void subtract_from(Histogram&& parent, const Histogram& other) {
        sum = std::move(parent.sum);
        count = std::move(parent.count);
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] -= other.sum[i];
            count[i] -= other.count[i];
        }
    }
};

struct SplitInfo {
    double gain = 0.0;
    int feature = -1;
    int bin = -1;
    double sum_left = 0.0;
    std::int32_t n_left = 0;
    bool valid() const { return feature >= 0; }
};

struct NodeState {
    int tree_node = -1;
    std::size_t begin = 0;
    std::size_t end = 0;
    int depth = 0;
    double sum = 0.0;
    std::int32_t count = 0;
    Histogram hist;
    SplitInfo best;
};

class TreeBuilder {
   public:
    TreeBuilder(const BinnedMatrix& bm, const Hyperparams& hp, std::size_t n_rows)
        : bm_(bm), hp_(hp), idx_(n_rows) {
        for (std::size_t i = 0; i < n_rows; ++i) idx_[i] = static_cast<std::uint32_t>(i);
        max_leaves_ = hp.max_leaves > 0 ? hp.max_leaves
                                        : (hp.depth >= 30 ? std::numeric_limits<int>::max()
                                                          : (1 << hp.depth));
    }

    struct LeafRange {
        std::size_t begin;
        std::size_t end;
        double value;
    };

    Tree build(const std::vector<double>& residuals, std::vector<LeafRange>& leaves);
    const std::vector<std::uint32_t>& index() const { return idx_; }

   private:
    void build_histogram(NodeState& node, const std::vector<double>& residuals);
    SplitInfo find_best_split(const NodeState& node) const;
    // returns the partition midpoint
    std::size_t apply_split(NodeState& node);

    const BinnedMatrix& bm_;
    const Hyperparams& hp_;
    std::vector<std::uint32_t> idx_;
    std::vector<double> gathered_;
    int max_leaves_ = 0;
};

void TreeBuilder::build_histogram(NodeState& node, const std::vector<double>& residuals) {
    node.hist.reset(bm_.total_bins);
    const std::size_t n = node.end - node.begin;
    gathered_.resize(n);
    for (std::size_t i = 0; i < n; ++i) gathered_[i] = residuals[idx_[node.begin + i]];
    for (std::size_t f = 0; f < bm_.codes.size(); ++f) {
        const auto& codes = bm_.codes[f];
        const int off = bm_.offsets[f];
        double* sums = node.hist.sum.data() + off;
        std::int32_t* counts = node.hist.count.data() + off;
        for (std::size_t i = 0; i < n; ++i) {
            const int b = codes[idx_[node.begin + i]];
            sums[b] += gathered_[i];
            counts[b] += 1;
        }
    }
}

SplitInfo TreeBuilder::find_best_split(const NodeState& node) const {
    SplitInfo best;
    const double parent = node.sum * node.sum / node.count;
    for (std::size_t f = 0; f < bm_.codes.size(); ++f) {
        const int nb = bm_.bins[f];
        if (nb < 2) continue;
        const int off = bm_.offsets[f];
        double sum_l = 0.0;
        std::int32_t n_l = 0;
        for (int b = 0; b < nb - 1; ++b) {
            sum_l += node.hist.sum[off + b];
            n_l += node.hist.count[off + b];
            const std::int32_t n_r = node.count - n_l;
            if (n_l < hp_.min_samples_leaf) continue;
            if (n_r < hp_.min_samples_leaf) break;
            const double sum_r = node.sum - sum_l;
            const double gain = sum_l * sum_l / n_l + sum_r * sum_r / n_r - parent;
            if (gain <= kMinGain) continue;
            // strict improvement keeps the first-seen (feature, bin) on ties
            if (!best.valid() || gain > best.gain) {
                best.gain = gain;
                best.feature = static_cast<int>(f);
                best.bin = b;
                best.sum_left = sum_l;
                best.n_left = n_l;
            }
        }
    }
    return best;
}

std::size_t TreeBuilder::apply_split(NodeState& node) {
    const auto& codes = bm_.codes[node.best.feature];
    const std::uint8_t cut = static_cast<std::uint8_t>(node.best.bin);
    auto mid_it = std::partition(idx_.begin() + node.begin, idx_.begin() + node.end,
                                 [&](std::uint32_t i) { return codes[i] <= cut; });
    return static_cast<std::size_t>(mid_it - idx_.begin());
}

Tree TreeBuilder::build(const std::vector<double>& residuals,
                        std::vector<LeafRange>& leaves) {
    Tree tree;
    leaves.clear();

    NodeState root;
    root.tree_node = 0;
    root.begin = 0;
    root.end = idx_.size();
    root.depth = 0;
    for (std::uint32_t i : idx_) root.sum += residuals[i];
    root.count = static_cast<std::int32_t>(idx_.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, root.sum / root.count});
    build_histogram(root, residuals);
    root.best = find_best_split(root);

    // leaf_wise expands the highest-gain candidate next; level_wise takes the
    // earliest pushed, which walks whole depth layers in order
    std::deque<NodeState> open;
    open.push_back(std::move(root));
    int n_leaves = 1;

    auto can_expand = [&](const NodeState& s) {
        return s.best.valid() && s.depth < hp_.depth &&
               s.count >= 2 * hp_.min_samples_leaf;
    };

    while (n_leaves < max_leaves_) {
        std::size_t pick = open.size();
        if (hp_.growth == Growth::leaf_wise) {
            double best_gain = -1.0;
            for (std::size_t i = 0; i < open.size(); ++i) {
                if (!can_expand(open[i])) continue;
                if (pick == open.size() || open[i].best.gain > best_gain) {
                    best_gain = open[i].best.gain;
                    pick = i;
                }
            }
        } else {
            for (std::size_t i = 0; i < open.size(); ++i) {
                if (can_expand(open[i])) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick == open.size()) break;
        NodeState node = std::move(open[pick]);
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));

        const std::size_t mid = apply_split(node);
        NodeState left, right;
        left.begin = node.begin;
        left.end = mid;
        right.begin = mid;
        right.end = node.end;
        left.depth = right.depth = node.depth + 1;
        left.sum = node.best.sum_left;
        left.count = node.best.n_left;
        right.sum = node.sum - left.sum;
        right.count = node.count - left.count;

        // smaller child scans; the sibling comes from subtraction
        if (left.count <= right.count) {
            build_histogram(left, residuals);
            right.hist.subtract_from(std::move(node.hist), left.hist);
        } else {
            build_histogram(right, residuals);
            left.hist.subtract_from(std::move(node.hist), right.hist);
        }

        left.tree_node = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({-1, 0.0, -1, -1, left.sum / left.count});
        right.tree_node = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({-1, 0.0, -1, -1, right.sum / right.count});
        // parent reference taken only after the children were appended: the
        // push_backs above may reallocate the node storage
        auto& parent = tree.nodes[node.tree_node];
        parent.feature = node.best.feature;
        parent.threshold = bm_.edges[node.best.feature][node.best.bin];
        parent.left = left.tree_node;
        parent.right = right.tree_node;
        ++n_leaves;

        left.best = find_best_split(left);
        right.best = find_best_split(right);
        if (!can_expand(left)) left.hist = Histogram{};
        if (!can_expand(right)) right.hist = Histogram{};
        open.push_back(std::move(left));
        open.push_back(std::move(right));
    }

    // whatever was never expanded is a leaf
    for (const auto& s : open)
        leaves.push_back({s.begin, s.end, tree.nodes[s.tree_node].value});
    return tree;
}

}  // namespace

BoostedModel train_gbm(const Dataset& train, const Hyperparams& hp,
                       const Dataset* eval, const std::vector<int>* checkpoints,
                       EvalTrace* trace) {
    train.check();
    validate_hyperparams(hp);
    const std::size_t n = train.n_rows();
    if (n == 0) throw std::invalid_argument("train_gbm: empty training set");
    if (eval) {
        eval->check();
        if (eval->n_features() != train.n_features())
            throw std::invalid_argument("train_gbm: eval feature count mismatch");
    }

    BoostedModel model;
    model.learning_rate = hp.learning_rate;
    model.feature_names = train.feature_names;
    model.hp = hp;

    double mean = 0.0;
    for (double y : train.target) mean += y;
    mean /= static_cast<double>(n);
    model.base_score = mean;

    BinnedMatrix bm = bin_dataset(train, hp.n_bins);
    model.bin_edges = bm.edges;

    std::vector<double> residuals(n);
    for (std::size_t i = 0; i < n; ++i) residuals[i] = train.target[i] - mean;

    // eval rows kept row-major so per-tree prediction walks are sequential
    std::vector<double> eval_rows;
    std::vector<double> eval_pred;
    std::size_t n_eval = 0;
    if (eval) {
        n_eval = eval->n_rows();
        eval_rows.resize(n_eval * eval->n_features());
        for (std::size_t i = 0; i < n_eval; ++i)
            for (std::size_t f = 0; f < eval->n_features(); ++f)
                eval_rows[i * eval->n_features() + f] = eval->columns[f][i];
        eval_pred.assign(n_eval, model.base_score);
    }
    std::vector<int> cps;
    if (checkpoints) {
        cps = *checkpoints;
        std::sort(cps.begin(), cps.end());
        cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    }
    std::size_t next_cp = 0;
    if (trace) {
        trace->checkpoints.clear();
        trace->rmse.clear();
    }

    TreeBuilder builder(bm, hp, n);
    std::vector<TreeBuilder::LeafRange> leaves;
    model.trees.reserve(static_cast<std::size_t>(hp.iterations));
    model.loss_trace.reserve(static_cast<std::size_t>(hp.iterations));

    for (int round = 0; round < hp.iterations; ++round) {
        Tree tree = builder.build(residuals, leaves);
        const auto& idx = builder.index();
        for (const auto& leaf : leaves) {
            const double step = hp.learning_rate * leaf.value;
            for (std::size_t i = leaf.begin; i < leaf.end; ++i)
                residuals[idx[i]] -= step;
        }
        double sse = 0.0;
        for (double r : residuals) sse += r * r;
        model.loss_trace.push_back(sse / static_cast<double>(n));

        if (eval) {
            for (std::size_t i = 0; i < n_eval; ++i)
                eval_pred[i] += hp.learning_rate *
                                tree.predict(eval_rows.data() + i * eval->n_features());
            while (next_cp < cps.size() && cps[next_cp] == round + 1) {
                double esse = 0.0;
                for (std::size_t i = 0; i < n_eval; ++i) {
                    const double d = eval_pred[i] - eval->target[i];
                    esse += d * d;
                }
                if (trace) {
                    trace->checkpoints.push_back(cps[next_cp]);
                    trace->rmse.push_back(
                        n_eval ? std::sqrt(esse / static_cast<double>(n_eval)) : 0.0);
                }
                ++next_cp;
            }
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

SplitResult train_test_split(const Dataset& data, double train_ratio,
                             std::uint64_t seed) {
    data.check();
    const std::size_t n = data.n_rows();
    if (n < 5) throw std::invalid_argument("train_test_split: need at least 5 rows");
    const auto n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_ratio));
    if (n_train < 1 || n_train >= n)
        throw std::invalid_argument("train_test_split: ratio leaves an empty side");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    SplitResult out;
    out.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    auto gather = [&](const std::vector<std::size_t>& rows) {
        Dataset d;
        d.feature_names = data.feature_names;
        d.columns.resize(data.n_features());
        for (std::size_t f = 0; f < data.n_features(); ++f) {
            d.columns[f].reserve(rows.size());
            for (std::size_t r : rows) d.columns[f].push_back(data.columns[f][r]);
        }
        d.target.reserve(rows.size());
        for (std::size_t r : rows) d.target.push_back(data.target[r]);
        return d;
    };
    out.train = gather(out.train_indices);
    out.test = gather(out.test_indices);
    return out;
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k,
                                                    std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
    if (n < static_cast<std::size_t>(k))
        throw std::invalid_argument("kfold: fewer rows than folds");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    const std::size_t base = n / static_cast<std::size_t>(k);
    std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (auto& fold : folds) {
        std::size_t len = base + (extra > 0 ? 1 : 0);
        if (extra > 0) --extra;
        fold.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return folds;
}

GridSearchResult grid_search_cv(const Dataset& train, const HyperGrid& grid,
                                const Hyperparams& base, int k, std::uint64_t seed) {
    train.check();
    if (grid.iterations.empty() || grid.learning_rates.empty() || grid.depths.empty())
        throw std::invalid_argument("grid_search_cv: empty grid axis");
    const std::size_t n = train.n_rows();
    auto folds = kfold_indices(n, k, seed);

    std::vector<int> iters = grid.iterations;
    std::sort(iters.begin(), iters.end());
    const int max_iters = iters.back();

    // folds materialize once; each (lr, depth) pair trains to the largest
    // iteration count and reads RMSE at every checkpoint, since boosting
    // prefixes coincide with separately trained shorter models
    std::vector<Dataset> fold_train(folds.size());
    std::vector<Dataset> fold_val(folds.size());
    {
        std::vector<char> in_fold(n);
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::fill(in_fold.begin(), in_fold.end(), 0);
            for (std::size_t r : folds[f]) in_fold[r] = 1;
            Dataset& tr = fold_train[f];
            Dataset& va = fold_val[f];
            tr.feature_names = va.feature_names = train.feature_names;
            tr.columns.resize(train.n_features());
            va.columns.resize(train.n_features());
            for (std::size_t i = 0; i < n; ++i) {
                Dataset& dst = in_fold[i] ? va : tr;
                for (std::size_t c = 0; c < train.n_features(); ++c)
                    dst.columns[c].push_back(train.columns[c][i]);
                dst.target.push_back(train.target[i]);
            }
        }
    }

    GridSearchResult result;
    bool have_best = false;
    for (int depth : grid.depths) {
        for (double lr : grid.learning_rates) {
            std::vector<double> rmse_sum(iters.size(), 0.0);
            for (std::size_t f = 0; f < folds.size(); ++f) {
                Hyperparams hp = base;
                hp.iterations = max_iters;
                hp.learning_rate = lr;
                hp.depth = depth;
                EvalTrace trace;
                train_gbm(fold_train[f], hp, &fold_val[f], &iters, &trace);
                for (std::size_t c = 0; c < iters.size(); ++c)
                    rmse_sum[c] += trace.rmse[c];
            }
            for (std::size_t c = 0; c < iters.size(); ++c) {
                ComboScore combo;
                combo.hp = base;
                combo.hp.iterations = iters[c];
                combo.hp.learning_rate = lr;
                combo.hp.depth = depth;
                combo.mean_cv_rmse = rmse_sum[c] / static_cast<double>(folds.size());
                result.combos.push_back(combo);
                const auto key = [](const ComboScore& s) {
                    return std::make_tuple(s.mean_cv_rmse, s.hp.iterations, s.hp.depth,
                                           s.hp.learning_rate);
                };
                if (!have_best || key(combo) < key(ComboScore{result.best, result.best_rmse})) {
                    result.best = combo.hp;
                    result.best_rmse = combo.mean_cv_rmse;
                    have_best = true;
                }
            }
        }
    }
    std::sort(result.combos.begin(), result.combos.end(),
              [](const ComboScore& a, const ComboScore& b) {
                  return std::make_tuple(a.hp.iterations, a.hp.depth, a.hp.learning_rate) <
                         std::make_tuple(b.hp.iterations, b.hp.depth, b.hp.learning_rate);
              });
    return result;
}

Metrics evaluate(const std::vector<double>& predictions,
                 const std::vector<double>& targets) {
    if (predictions.size() != targets.size())
        throw std::invalid_argument("evaluate: length mismatch");
    if (targets.empty()) throw std::invalid_argument("evaluate: empty test set");
    const auto n = static_cast<double>(targets.size());
    double sse = 0.0, sae = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double d = predictions[i] - targets[i];
        sse += d * d;
        sae += std::abs(d);
        mean_y += targets[i];
    }
    mean_y /= n;
    double sst = 0.0;
    for (double y : targets) sst += (y - mean_y) * (y - mean_y);
    Metrics m;
    m.rmse = std::sqrt(sse / n);
    m.mae = sae / n;
    if (sst > 0.0) m.r2 = 1.0 - sse / sst;
    return m;
}

namespace {

nlohmann::json tree_to_json(const Tree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    return nodes;
}

Tree tree_from_json(const nlohmann::json& j) {
    Tree t;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.value = n.at(4).get<double>();
        t.nodes.push_back(node);
    }
    return t;
}

}  // namespace

void BoostedModel::save_file(const std::string& path) const {
    nlohmann::json j;
    j["format"] = "gbm-model";
    j["version"] = 1;
    j["base_score"] = base_score;
    j["learning_rate"] = learning_rate;
    j["feature_names"] = feature_names;
    j["bin_edges"] = bin_edges;
    j["hyperparams"] = {{"iterations", hp.iterations},
                        {"learning_rate", hp.learning_rate},
                        {"depth", hp.depth},
                        {"n_bins", hp.n_bins},
                        {"min_samples_leaf", hp.min_samples_leaf},
                        {"growth", to_string(hp.growth)},
                        {"max_leaves", hp.max_leaves}};
    nlohmann::json trees_json = nlohmann::json::array();
    for (const auto& t : trees) trees_json.push_back(tree_to_json(t));
    j["trees"] = std::move(trees_json);
    j["loss_trace"] = loss_trace;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write model: " + path);
    os << j.dump(1) << '\n';
}

BoostedModel BoostedModel::load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open model: " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    if (j.value("format", "") != std::string("gbm-model"))
        throw std::runtime_error("not a model file: " + path);
    if (j.value("version", 0) != 1)
        throw std::runtime_error("unsupported model version in " + path);
    BoostedModel m;
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.bin_edges = j.at("bin_edges").get<std::vector<std::vector<double>>>();
    const auto& hj = j.at("hyperparams");
    m.hp.iterations = hj.at("iterations").get<int>();
    m.hp.learning_rate = hj.at("learning_rate").get<double>();
    m.hp.depth = hj.at("depth").get<int>();
    m.hp.n_bins = hj.at("n_bins").get<int>();
    m.hp.min_samples_leaf = hj.at("min_samples_leaf").get<int>();
    m.hp.growth = growth_from_string(hj.at("growth").get<std::string>());
    m.hp.max_leaves = hj.at("max_leaves").get<int>();
    for (const auto& tj : j.at("trees")) m.trees.push_back(tree_from_json(tj));
    m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    return m;
}

double OlsModel::predict_row(const std::vector<double>& row) const {
    if (row.size() != coef.size())
        throw std::invalid_argument("ols predict: feature count mismatch");
    double y = intercept;
    for (std::size_t i = 0; i < coef.size(); ++i) y += coef[i] * row[i];
    return y;
}

std::vector<double> OlsModel::predict(const Dataset& data) const {
    data.check();
    std::vector<double> out(data.n_rows());
    for (std::size_t i = 0; i < data.n_rows(); ++i) out[i] = predict_row(data.row(i));
    return out;
}

}  // namespace ridesplit
