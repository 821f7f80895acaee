#include "ridesplit/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace ridesplit {

Explanation shapley_exact(const BoostedModel& model, const std::vector<double>& row,
                          const Dataset& background) {
    background.check();
    const std::size_t nf = model.feature_names.size();
    if (row.size() != nf)
        throw std::invalid_argument("shapley_exact: row feature count mismatch");
    if (background.n_features() != nf)
        throw std::invalid_argument("shapley_exact: background feature count mismatch");
    if (background.n_rows() == 0)
        throw std::invalid_argument("shapley_exact: empty background set");
    if (nf > 16)
        throw std::invalid_argument(
            "shapley_exact: subset enumeration needs <= 16 features, got " +
            std::to_string(nf));

    const std::size_t n_subsets = std::size_t{1} << nf;
    const std::size_t nb = background.n_rows();

    // coalition values f_S for every subset
    std::vector<double> f(n_subsets, 0.0);
    std::vector<double> z(nf);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t mask = 0; mask < n_subsets; ++mask) {
            for (std::size_t j = 0; j < nf; ++j)
                z[j] = (mask >> j) & 1u ? row[j] : background.columns[j][b];
            f[mask] += model.predict_row(z.data(), nf);
        }
    }
    for (auto& v : f) v /= static_cast<double>(nb);

    // w(s) = s! (F - s - 1)! / F!; 16! is exactly representable
    std::vector<double> fact(nf + 1, 1.0);
    for (std::size_t i = 1; i <= nf; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    std::vector<double> w(nf);
    for (std::size_t s = 0; s < nf; ++s) w[s] = fact[s] * fact[nf - s - 1] / fact[nf];

    Explanation ex;
    ex.phi0 = f[0];
    ex.prediction = model.predict_row(row.data(), nf);
    ex.phi.assign(nf, 0.0);
    for (std::size_t j = 0; j < nf; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        for (std::size_t mask = 0; mask < n_subsets; ++mask) {
            if (mask & bit) continue;
            const auto s = static_cast<std::size_t>(std::popcount(mask));
            ex.phi[j] += w[s] * (f[mask | bit] - f[mask]);
        }
    }
    return ex;
}

std::vector<ImportanceEntry> shap_importance(
    const std::vector<Explanation>& explanations) {
    if (explanations.empty())
        throw std::invalid_argument("shap_importance: no explanations");
    const std::size_t nf = explanations.front().phi.size();
    std::vector<ImportanceEntry> out(nf);
    for (std::size_t j = 0; j < nf; ++j) out[j].feature = j;
    for (const auto& ex : explanations) {
        if (ex.phi.size() != nf)
            throw std::invalid_argument("shap_importance: ragged explanations");
        for (std::size_t j = 0; j < nf; ++j) out[j].importance += std::abs(ex.phi[j]);
    }
    for (auto& e : out) e.importance /= static_cast<double>(explanations.size());
    std::stable_sort(out.begin(), out.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) {
                         return a.importance > b.importance;
                     });
    return out;
}

std::vector<double> quantile_grid(std::vector<double> values, std::size_t points) {
    if (values.empty()) throw std::invalid_argument("quantile_grid: no values");
    if (points < 2) throw std::invalid_argument("quantile_grid: need >= 2 points");
    std::sort(values.begin(), values.end());
    std::vector<double> grid;
    grid.reserve(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double p = static_cast<double>(k) / static_cast<double>(points - 1);
        const double h = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(h);
        const double frac = h - static_cast<double>(lo);
        const double v = lo + 1 < values.size()
                             ? values[lo] + frac * (values[lo + 1] - values[lo])
                             : values[lo];
        grid.push_back(v);
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

namespace {

// midpoint-boundary bin of v in an ascending grid
std::size_t grid_bin(const std::vector<double>& grid, double v) {
    std::size_t bin = 0;
    while (bin + 1 < grid.size() && v > (grid[bin] + grid[bin + 1]) / 2.0) ++bin;
    return bin;
}

}  // namespace

PdpResult pdp(const BoostedModel& model, const Dataset& reference,
              const std::vector<std::size_t>& features,
              std::vector<std::vector<double>> grids, std::size_t grid_points) {
    reference.check();
    if (reference.n_rows() == 0) throw std::invalid_argument("pdp: empty reference set");
    if (features.empty() || features.size() > 2)
        throw std::invalid_argument("pdp: needs one or two features");
    for (std::size_t f : features)
        if (f >= reference.n_features())
            throw std::invalid_argument("pdp: feature index out of range");
    if (reference.n_features() != model.feature_names.size())
        throw std::invalid_argument("pdp: reference feature count mismatch");

    if (grids.empty()) {
        for (std::size_t f : features)
            grids.push_back(quantile_grid(reference.columns[f], grid_points));
    }
    if (grids.size() != features.size())
        throw std::invalid_argument("pdp: one grid per feature required");

    PdpResult res;
    res.features = features;
    res.grids = std::move(grids);

    const std::size_t n = reference.n_rows();
    std::vector<double> row(reference.n_features());
    auto averaged = [&](const std::vector<std::pair<std::size_t, double>>& pinned) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < reference.n_features(); ++f)
                row[f] = reference.columns[f][i];
            for (const auto& [f, v] : pinned) row[f] = v;
            sum += model.predict_row(row.data(), row.size());
        }
        return sum / static_cast<double>(n);
    };

    if (features.size() == 1) {
        const auto& g = res.grids[0];
        res.values.reserve(g.size());
        res.histogram.assign(g.size(), 0);
        for (double v : g) res.values.push_back(averaged({{features[0], v}}));
        for (std::size_t i = 0; i < n; ++i)
            ++res.histogram[grid_bin(g, reference.columns[features[0]][i])];
    } else {
        const auto& g1 = res.grids[0];
        const auto& g2 = res.grids[1];
        res.values.reserve(g1.size() * g2.size());
        res.histogram.assign(g1.size() * g2.size(), 0);
        for (double v1 : g1)
            for (double v2 : g2)
                res.values.push_back(
                    averaged({{features[0], v1}, {features[1], v2}}));
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t b1 = grid_bin(g1, reference.columns[features[0]][i]);
            const std::size_t b2 = grid_bin(g2, reference.columns[features[1]][i]);
            ++res.histogram[b1 * g2.size() + b2];
        }
    }
    return res;
}

std::vector<DependenceRow> shap_dependence(const std::vector<Explanation>& explanations,
                                           const Dataset& rows, std::size_t feature_j,
                                           std::size_t feature_h) {
    rows.check();
    if (explanations.size() != rows.n_rows())
        throw std::invalid_argument("shap_dependence: explanation/row count mismatch");
    if (feature_j >= rows.n_features() || feature_h >= rows.n_features())
        throw std::invalid_argument("shap_dependence: feature index out of range");
    std::vector<DependenceRow> out;
    out.reserve(explanations.size());
    for (std::size_t i = 0; i < explanations.size(); ++i) {
        DependenceRow r;
        r.x_j = rows.columns[feature_j][i];
        r.phi_j = explanations[i].phi.at(feature_j);
        r.x_h = rows.columns[feature_h][i];
        out.push_back(r);
    }
    return out;
}

}  // namespace ridesplit
