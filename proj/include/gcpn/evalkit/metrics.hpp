#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gcpn::evalkit {

// Inputs must have equal length >= 2. Correlations of a constant input throw
// UndefinedCorrelation.
double pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average (fractional) ranks.
double spearman(std::span<const double> x, std::span<const double> y);
// Tau-b, tie corrected. O(n log n).
double kendall(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

double mse(std::span<const double> pred, std::span<const double> target);
double rmse(std::span<const double> pred, std::span<const double> target);
double accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> target);

struct AxisCorrelations {
  double pearson = 0, spearman = 0, kendall = 0;
};

// Correlations for [n × 3] row-major vectors, computed per coordinate axis
// and then averaged.
AxisCorrelations per_axis_correlations(std::span<const double> pred, std::span<const double> target,
                                       std::map<std::string, double>* per_axis = nullptr);

// Applies `metric` within each group and averages over groups.
double group_average(std::span<const double> pred, std::span<const double> target,
                     std::span<const std::uint32_t> groups,
                     double (*metric)(std::span<const double>, std::span<const double>));

struct MetricReport {
  std::size_t n_samples = 0;
  std::map<std::string, double> metrics;

  // One `key=value` per line, keys sorted.
  std::string to_text() const;
  std::string to_json() const;
};

}  // namespace gcpn::evalkit
