#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "ridesplit/gbm.hpp"

namespace ridesplit {

OlsModel ols_fit(const Dataset& train) {
    train.check();
    const auto n = static_cast<Eigen::Index>(train.n_rows());
    const auto p = static_cast<Eigen::Index>(train.n_features());
    if (n < p + 1)
        throw std::invalid_argument("ols_fit: fewer rows than coefficients");

    Eigen::MatrixXd X(n, p + 1);
    X.col(0).setOnes();
    for (Eigen::Index f = 0; f < p; ++f)
        for (Eigen::Index i = 0; i < n; ++i)
            X(i, f + 1) = train.columns[static_cast<std::size_t>(f)]
                                       [static_cast<std::size_t>(i)];
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = train.target[static_cast<std::size_t>(i)];

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p + 1) {
        // the permutation puts dependent columns after the first rank() slots
        const auto& perm = qr.colsPermutation().indices();
        std::string cols;
        for (Eigen::Index k = qr.rank(); k < p + 1; ++k) {
            if (!cols.empty()) cols += ", ";
            const Eigen::Index c = perm(k);
            cols += c == 0 ? std::string("intercept")
                           : train.feature_names[static_cast<std::size_t>(c - 1)];
        }
        throw std::runtime_error("ols_fit: singular design matrix; dependent columns: " +
                                 cols);
    }

    Eigen::VectorXd beta = qr.solve(y);
    OlsModel model;
    model.intercept = beta(0);
    model.coef.resize(static_cast<std::size_t>(p));
    for (Eigen::Index f = 0; f < p; ++f)
        model.coef[static_cast<std::size_t>(f)] = beta(f + 1);
    model.feature_names = train.feature_names;
    return model;
}

}  // namespace ridesplit
