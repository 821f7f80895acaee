#ifndef RIDESPLIT_STATS_HPP
#define RIDESPLIT_STATS_HPP

#include <optional>
#include <vector>

namespace ridesplit {

// Quantiles use linear interpolation between order statistics
// (h = (n-1)p, the numpy default). Medians and the IQR filter both go
// through here so the rule is fixed in exactly one place.
double quantile_sorted(const std::vector<double>& sorted, double p);
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

double mean(const std::vector<double>& values);

/// Pearson correlation; nullopt when either column is constant.
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

}  // namespace ridesplit

#endif
