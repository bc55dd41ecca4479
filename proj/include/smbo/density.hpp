#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "smbo/search_space.hpp"

namespace smbo {

/// Laplace-smoothed frequency table over a discrete domain (categorical or
/// boolean), indexed like ParamSpec::choice_index.
struct FrequencyTable {
  std::vector<double> probabilities;
};

/// Equal-weight Gaussian kernels with one shared bandwidth.
struct KernelMixture {
  std::vector<double> centers;
  double bandwidth = 1.0;

  double log_pdf(double x) const;
};

/// Param never active in the fitted observations; evaluates to the uniform
/// prior of its domain.
struct UniformPrior {};

struct ParamEstimator {
  std::size_t n_active = 0;
  std::variant<UniformPrior, FrequencyTable, KernelMixture> model;
};

/// Factorized density over a SearchSpace: the product of one estimator per
/// parameter, each fitted on the observations where that parameter is active.
/// Params inactive in a query contribute a factor of 1.
///
/// Holds a pointer to the space; the space must outlive the model.
class DensityModel {
 public:
  /// Throws Error on an empty observation list or an invalid observation.
  static DensityModel fit(const SearchSpace& space, std::span<const Assignment> observations);
  /// Every parameter at its uniform prior (used for g when the bad set is empty).
  static DensityModel uniform(const SearchSpace& space);

  /// Sum of per-param log densities over the params active in `a`. Finite for
  /// every valid assignment. Throws Error if `a` is invalid.
  double log_density(const Assignment& a) const;
  /// Same, skipping validation; `a` must already be valid.
  double log_density_unchecked(const Assignment& a) const;
  /// Log density of a single parameter's value.
  double param_log_density(std::size_t param_index, const Value& v) const;

  const SearchSpace& space() const { return *space_; }
  const ParamEstimator& estimator(const std::string& name) const;
  const std::vector<ParamEstimator>& estimators() const { return estimators_; }
  std::size_t observation_count() const { return n_observations_; }

 private:
  DensityModel(const SearchSpace& space, std::vector<ParamEstimator> est, std::size_t n)
      : space_(&space), estimators_(std::move(est)), n_observations_(n) {}

  const SearchSpace* space_;
  std::vector<ParamEstimator> estimators_;
  std::size_t n_observations_;
};

/// Bandwidth rule: max(sd * n^(-1/5), 0.01 * range), with sd = 0.25 * range
/// when fewer than two observations exist. `sd` is the sample (n-1) standard
/// deviation.
double kernel_bandwidth(std::span<const double> centers, double range);

}  // namespace smbo
