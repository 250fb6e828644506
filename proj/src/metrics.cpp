#include "tropfact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tropfact {

std::vector<double> regular_grid(double t_max, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (!(t_max >= 0.0)) throw std::invalid_argument("grid end must be non-negative");
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor(t_max / step + 1e-9));
  for (std::size_t p = 0; p <= count; ++p) grid.push_back(static_cast<double>(p) * step);
  if (grid.back() < t_max) grid.push_back(t_max);
  else grid.back() = t_max;
  return grid;
}

double step_value(const Trajectory& traj, double t) {
  if (traj.samples.empty()) throw std::invalid_argument("empty trajectory");
  const auto it = std::upper_bound(traj.samples.begin(), traj.samples.end(), t,
                                   [&](double x, const Sample& s) { return x < traj.time(s); });
  if (it == traj.samples.begin()) return traj.samples.front().error;
  return std::prev(it)->error;
}

namespace {
void check_baseline(const Trajectory& baseline) {
  if (baseline.samples.empty()) throw std::invalid_argument("empty baseline trajectory");
  if (baseline.init_error() == baseline.final_error()) {
    throw std::invalid_argument("baseline trajectory is flat; normalized error is undefined");
  }
}
}  // namespace

double normalized_error_at(const Trajectory& traj, const Trajectory& baseline, double t) {
  check_baseline(baseline);
  const double g_init = baseline.init_error();
  const double g_max = baseline.final_error();
  return (step_value(traj, t) - g_max) / (g_init - g_max);
}

std::vector<double> normalized_error(const Trajectory& traj, const Trajectory& baseline,
                                     std::span<const double> grid) {
  check_baseline(baseline);
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(normalized_error_at(traj, baseline, t));
  return out;
}

double rmse(const Matrix& pred, const Matrix& truth, std::span<const std::uint8_t> mask) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols() || mask.size() != pred.size()) {
    throw DimensionError("rmse: shapes differ");
  }
  double s = 0.0;
  std::size_t c = 0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    const double d = pred.data()[p] - truth.data()[p];
    s += d * d;
    ++c;
  }
  if (c == 0) throw std::invalid_argument("rmse: empty mask");
  return std::sqrt(s / static_cast<double>(c));
}

namespace {

// Row means and grand mean of the pairwise distance matrix |x_k − x_l|.
void distance_means(std::span<const double> x, std::vector<double>& row_mean, double& grand) {
  const std::size_t n = x.size();
  row_mean.assign(n, 0.0);
  grand = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l) s += std::abs(x[k] - x[l]);
    row_mean[k] = s / static_cast<double>(n);
    grand += row_mean[k];
  }
  grand /= static_cast<double>(n);
}

// dCov² = mean(a_kl b_kl) − 2 mean_k(ā_k b̄_k) + ā b̄.
double dcov2(std::span<const double> x, std::span<const double> y, const std::vector<double>& ax,
             double gx, const std::vector<double>& by, double gy) {
  const std::size_t n = x.size();
  const double nn = static_cast<double>(n);
  double cross = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) cross += std::abs(x[k] - x[l]) * std::abs(y[k] - y[l]);
  double margins = 0.0;
  for (std::size_t k = 0; k < n; ++k) margins += ax[k] * by[k];
  return cross / (nn * nn) - 2.0 * margins / nn + gx * gy;
}

}  // namespace

double distance_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("distance_correlation: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("distance_correlation: need at least 2 samples");
  std::vector<double> ax, by;
  double gx = 0.0, gy = 0.0;
  distance_means(x, ax, gx);
  distance_means(y, by, gy);
  const double vx = dcov2(x, x, ax, gx, ax, gx);
  const double vy = dcov2(y, y, by, gy, by, gy);
  if (!(vx > 0.0) || !(vy > 0.0)) return 0.0;
  const double cxy = std::max(0.0, dcov2(x, y, ax, gx, by, gy));
  return std::clamp(std::sqrt(cxy / std::sqrt(vx * vy)), 0.0, 1.0);
}

double masked_distance_correlation(const Matrix& truth, const Matrix& pred,
                                   std::span<const std::uint8_t> mask, std::size_t cap,
                                   std::uint64_t seed) {
  if (truth.size() != pred.size() || mask.size() != truth.size()) {
    throw DimensionError("masked_distance_correlation: shapes differ");
  }
  std::vector<std::size_t> idx;
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p]) idx.push_back(p);
  if (cap > 0 && idx.size() > cap) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<double> x, y;
  x.reserve(idx.size());
  y.reserve(idx.size());
  for (std::size_t p : idx) {
    x.push_back(truth.data()[p]);
    y.push_back(pred.data()[p]);
  }
  return distance_correlation(x, y);
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return xs[lo];
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

Interval bootstrap_ci(std::span<const double> samples, const Statistic& statistic,
                      std::size_t resamples, double level, std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("bootstrap of empty sample");
  if (resamples == 0) throw std::invalid_argument("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<double> draw(samples.size());
  std::vector<double> stats;
  stats.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (double& d : draw) d = samples[pick(rng)];
    stats.push_back(statistic(draw));
  }
  const double tail = (1.0 - level) / 2.0;
  return {quantile(stats, tail), quantile(stats, 1.0 - tail)};
}

Interval bootstrap_ci(std::span<const double> samples, std::size_t resamples, double level,
                      std::uint64_t seed) {
  return bootstrap_ci(samples, [](std::span<const double> s) { return mean(s); }, resamples,
                      level, seed);
}

std::vector<double> RankTable::average() const {
  std::vector<double> out(ranks.rows(), 0.0);
  for (std::size_t a = 0; a < ranks.rows(); ++a) {
    const auto row = ranks.row(a);
    out[a] = row.empty() ? 0.0 : mean(row);
  }
  return out;
}

RankTable rank_methods(const Matrix& scores, bool lower_is_better,
                       std::vector<std::string> methods) {
  const std::size_t k = scores.rows(), datasets = scores.cols();
  if (methods.empty()) {
    for (std::size_t a = 0; a < k; ++a) methods.push_back("method" + std::to_string(a));
  }
  if (methods.size() != k) throw std::invalid_argument("method names do not match score rows");
  RankTable table{std::move(methods), Matrix(k, datasets)};
  std::vector<std::size_t> order(k);
  for (std::size_t d = 0; d < datasets; ++d) {
    // "never" (+inf) stays last in either direction.
    const auto key = [&](std::size_t a) {
      const double s = scores(a, d);
      if (std::isinf(s) && s > 0) return kPosInf;
      return lower_is_better ? s : -s;
    };
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    for (std::size_t p = 0; p < k;) {
      std::size_t q = p + 1;
      while (q < k && key(order[q]) == key(order[p])) ++q;
      const double avg = (static_cast<double>(p + 1) + static_cast<double>(q)) / 2.0;
      for (std::size_t t = p; t < q; ++t) table.ranks(order[t], d) = avg;
      p = q;
    }
  }
  return table;
}

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(range of k i.i.d. standard normals <= w), Simpson's rule over z.
double range_cdf(double w, std::size_t k) {
  constexpr double lo = -10.0, hi = 10.0;
  constexpr int steps = 4000;
  const double h = (hi - lo) / steps;
  double s = 0.0;
  for (int p = 0; p <= steps; ++p) {
    const double z = lo + h * p;
    const double f =
        normal_pdf(z) * std::pow(normal_cdf(z + w) - normal_cdf(z), static_cast<double>(k - 1));
    const double weight = (p == 0 || p == steps) ? 1.0 : (p % 2 ? 4.0 : 2.0);
    s += weight * f;
  }
  return static_cast<double>(k) * s * h / 3.0;
}

}  // namespace

double nemenyi_q(std::size_t k, double alpha) {
  if (k < 2) throw std::invalid_argument("Nemenyi test needs at least two methods");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  double lo = 0.0, hi = 20.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (range_cdf(mid, k) < 1.0 - alpha) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(2.0);
}

double nemenyi_cd(std::size_t k, std::size_t datasets, double alpha) {
  if (datasets == 0) throw std::invalid_argument("Nemenyi test needs at least one dataset");
  const double kk = static_cast<double>(k);
  return nemenyi_q(k, alpha) * std::sqrt(kk * (kk + 1.0) / (6.0 * static_cast<double>(datasets)));
}

std::optional<double> time_to_reach(const Trajectory& traj, double target,
                                    std::span<const double> grid) {
  for (double t : grid)
    if (step_value(traj, t) <= target) return t;
  return std::nullopt;
}

std::optional<double> time_to_reach(std::span<const double> times,
                                    std::span<const double> values, double target) {
  if (times.size() != values.size()) throw std::invalid_argument("time/value length mismatch");
  for (std::size_t p = 0; p < times.size(); ++p)
    if (values[p] <= target) return times[p];
  return std::nullopt;
}

double omega(std::span<const double> wide_errors, std::span<const double> tall_errors) {
  if (wide_errors.size() != tall_errors.size() || wide_errors.empty()) {
    throw std::invalid_argument("omega needs equally many paired wide and tall errors");
  }
  std::size_t wins = 0;
  for (std::size_t p = 0; p < wide_errors.size(); ++p)
    if (wide_errors[p] < tall_errors[p]) ++wins;
  return static_cast<double>(wins) / static_cast<double>(wide_errors.size());
}

}  // namespace tropfact
