#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tropfact/factor_engine.hpp"
#include "tropfact/matrix.hpp"

namespace tropfact {

/// Evenly spaced times 0, step, 2 step, ... ending exactly at t_max.
std::vector<double> regular_grid(double t_max, double step);

/// Error of the last sample at or before t; the first sample's error before
/// the trajectory starts.
double step_value(const Trajectory& traj, double t);

/// NE_t = (e_t − γ_final) / (γ_init − γ_final) against a baseline trajectory
/// γ, both step-interpolated onto the grid. Throws std::invalid_argument when
/// the baseline never moved.
std::vector<double> normalized_error(const Trajectory& traj, const Trajectory& baseline,
                                     std::span<const double> grid);
double normalized_error_at(const Trajectory& traj, const Trajectory& baseline, double t);

/// Root mean squared difference over the entries flagged in mask.
double rmse(const Matrix& pred, const Matrix& truth, std::span<const std::uint8_t> mask);

/// Sample distance correlation in [0, 1]; 0 when either sample is constant.
double distance_correlation(std::span<const double> x, std::span<const double> y);

/// Distance correlation between truth and prediction over a mask. Masks with
/// more than `cap` entries are subsampled with the given seed.
double masked_distance_correlation(const Matrix& truth, const Matrix& pred,
                                   std::span<const std::uint8_t> mask, std::size_t cap,
                                   std::uint64_t seed);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

using Statistic = std::function<double(std::span<const double>)>;

double mean(std::span<const double> xs);
/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> xs, double q);
double median(std::vector<double> xs);

/// Percentile bootstrap interval of `statistic` over `resamples` draws.
Interval bootstrap_ci(std::span<const double> samples, const Statistic& statistic,
                      std::size_t resamples, double level, std::uint64_t seed);
Interval bootstrap_ci(std::span<const double> samples, std::size_t resamples, double level,
                      std::uint64_t seed);

/// Methods x datasets ranks, 1 = best, ties share the average position.
struct RankTable {
  std::vector<std::string> methods;
  Matrix ranks;  // methods x datasets

  std::vector<double> average() const;
};

/// scores is methods x datasets. +inf means "never reached" and ranks last.
RankTable rank_methods(const Matrix& scores, bool lower_is_better,
                       std::vector<std::string> methods = {});

/// Critical value of the Nemenyi test: the studentized range quantile for k
/// groups and infinite degrees of freedom, divided by √2.
double nemenyi_q(std::size_t k, double alpha);
/// q_α √(k (k + 1) / (6 N)).
double nemenyi_cd(std::size_t k, std::size_t datasets, double alpha = 0.05);

/// Earliest grid time where the step-interpolated error is at or below target.
std::optional<double> time_to_reach(const Trajectory& traj, double target,
                                    std::span<const double> grid);
/// Same over precomputed (time, value) series.
std::optional<double> time_to_reach(std::span<const double> times,
                                    std::span<const double> values, double target);

/// Fraction of paired runs where the wide orientation ended with lower error.
double omega(std::span<const double> wide_errors, std::span<const double> tall_errors);

}  // namespace tropfact
