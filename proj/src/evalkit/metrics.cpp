#include "gcpn/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

#include "gcpn/errors.hpp"

namespace gcpn::evalkit {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
  }
  if (x.size() < 2) throw DimensionError(std::string(what) + ": need at least 2 samples");
}

// Number of pairs tied within runs of equal values of a sorted sequence.
template <typename Eq>
std::uint64_t tied_pairs(std::size_t n, Eq equal) {
  std::uint64_t ties = 0, run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

// Merge sort counting inversions (strictly decreasing pairs).
std::uint64_t sort_count_swaps(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                               std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = sort_count_swaps(v, buf, lo, mid) + sort_count_swaps(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j + 1);  // mean of positions i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  try {
    return pearson(rx, ry);
  } catch (const UndefinedCorrelation&) {
    throw UndefinedCorrelation("spearman: constant input");
  }
}

double kendall(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "kendall");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t tx = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[order[a]] == x[order[b]]; });
  const std::uint64_t txy = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::uint64_t discordant = sort_count_swaps(ys, buf, 0, n);
  const std::uint64_t ty = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });
  if (tx == total || ty == total) throw UndefinedCorrelation("kendall: constant input");
  // Pairs tied in neither coordinate split into concordant and discordant.
  const std::uint64_t untied = total - tx - ty + txy;
  const double concordant = static_cast<double>(untied) - static_cast<double>(discordant);
  const double num = concordant - static_cast<double>(discordant);
  const double den = std::sqrt(static_cast<double>(total - tx)) * std::sqrt(static_cast<double>(total - ty));
  return std::clamp(num / den, -1.0, 1.0);
}

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) throw DimensionError("mse: size mismatch or empty");
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> target) { return std::sqrt(mse(pred, target)); }

double accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> target) {
  if (pred.size() != target.size() || pred.empty()) throw DimensionError("accuracy: size mismatch or empty");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == target[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

AxisCorrelations per_axis_correlations(std::span<const double> pred, std::span<const double> target,
                                       std::map<std::string, double>* per_axis) {
  if (pred.size() != target.size() || pred.size() % 3 != 0) {
    throw DimensionError("per_axis_correlations: expected matching [n x 3] inputs");
  }
  const std::size_t n = pred.size() / 3;
  AxisCorrelations avg;
  const char* axes = "xyz";
  for (std::size_t d = 0; d < 3; ++d) {
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = pred[i * 3 + d];
      t[i] = target[i * 3 + d];
    }
    const double pr = pearson(p, t), sp = spearman(p, t), kd = kendall(p, t);
    avg.pearson += pr / 3;
    avg.spearman += sp / 3;
    avg.kendall += kd / 3;
    if (per_axis) {
      const std::string a(1, axes[d]);
      (*per_axis)["pearson_" + a] = pr;
      (*per_axis)["spearman_" + a] = sp;
      (*per_axis)["kendall_" + a] = kd;
    }
  }
  return avg;
}

double group_average(std::span<const double> pred, std::span<const double> target,
                     std::span<const std::uint32_t> groups,
                     double (*metric)(std::span<const double>, std::span<const double>)) {
  if (pred.size() != target.size() || pred.size() != groups.size()) {
    throw DimensionError("group_average: size mismatch");
  }
  std::map<std::uint32_t, std::pair<std::vector<double>, std::vector<double>>> split;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    split[groups[i]].first.push_back(pred[i]);
    split[groups[i]].second.push_back(target[i]);
  }
  if (split.empty()) throw DimensionError("group_average: no samples");
  double s = 0;
  for (const auto& [g, pt] : split) s += metric(pt.first, pt.second);
  return s / static_cast<double>(split.size());
}

std::string MetricReport::to_text() const {
  std::string out = "n_samples=" + std::to_string(n_samples) + "\n";
  char buf[64];
  for (const auto& [k, v] : metrics) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out += k + "=" + buf + "\n";
  }
  return out;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["n_samples"] = n_samples;
  j["metrics"] = metrics;
  return j.dump(2) + "\n";
}

}  // namespace gcpn::evalkit
