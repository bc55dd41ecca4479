#include "smbo/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smbo/error.hpp"

namespace smbo {

namespace {

constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // log(sqrt(2*pi))

double numeric_value(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

}  // namespace

double KernelMixture::log_pdf(double x) const {
  // log( (1/n) sum_i phi((x - c_i) / h) / h ), via log-sum-exp so far-away
  // queries stay finite.
  double max_term = -std::numeric_limits<double>::infinity();
  for (double c : centers) {
    const double z = (x - c) / bandwidth;
    max_term = std::max(max_term, -0.5 * z * z);
  }
  double sum = 0.0;
  for (double c : centers) {
    const double z = (x - c) / bandwidth;
    sum += std::exp(-0.5 * z * z - max_term);
  }
  return max_term + std::log(sum) - std::log(static_cast<double>(centers.size())) -
         std::log(bandwidth) - kLogSqrtTwoPi;
}

double kernel_bandwidth(std::span<const double> centers, double range) {
  const auto n = static_cast<double>(centers.size());
  double sd = 0.25 * range;
  if (centers.size() >= 2) {
    double mean = 0.0;
    for (double c : centers) mean += c;
    mean /= n;
    double ss = 0.0;
    for (double c : centers) ss += (c - mean) * (c - mean);
    sd = std::sqrt(ss / (n - 1.0));
  }
  return std::max(sd * std::pow(n, -0.2), 0.01 * range);
}

DensityModel DensityModel::fit(const SearchSpace& space, std::span<const Assignment> observations) {
  if (observations.empty()) throw Error("cannot fit a density to zero observations");
  for (const auto& a : observations) require_valid(space, a);

  std::vector<ParamEstimator> est;
  est.reserve(space.params().size());
  for (const auto& p : space.params()) {
    ParamEstimator e;
    if (p.is_numeric()) {
      std::vector<double> centers;
      for (const auto& a : observations)
        if (const Value* v = a.find(p.name)) centers.push_back(numeric_value(*v));
      e.n_active = centers.size();
      const double range = p.hi - p.lo;
      // A single-point domain keeps the prior (log density 0).
      if (!centers.empty() && range > 0.0) {
        const double h = kernel_bandwidth(centers, range);
        e.model = KernelMixture{std::move(centers), h};
      }
    } else {
      std::vector<double> counts(p.cardinality(), 0.0);
      for (const auto& a : observations) {
        if (const Value* v = a.find(p.name)) {
          counts[p.choice_index(*v)] += 1.0;
          ++e.n_active;
        }
      }
      if (e.n_active > 0) {
        const double denom = static_cast<double>(e.n_active + counts.size());
        for (auto& c : counts) c = (c + 1.0) / denom;
        e.model = FrequencyTable{std::move(counts)};
      }
    }
    est.push_back(std::move(e));
  }
  return DensityModel(space, std::move(est), observations.size());
}

DensityModel DensityModel::uniform(const SearchSpace& space) {
  return DensityModel(space, std::vector<ParamEstimator>(space.params().size()), 0);
}

double DensityModel::param_log_density(std::size_t param_index, const Value& v) const {
  const auto& p = space_->params()[param_index];
  const auto& e = estimators_[param_index];
  if (const auto* table = std::get_if<FrequencyTable>(&e.model))
    return std::log(table->probabilities[p.choice_index(v)]);
  if (const auto* kde = std::get_if<KernelMixture>(&e.model)) return kde->log_pdf(numeric_value(v));
  return p.log_uniform();
}

double DensityModel::log_density_unchecked(const Assignment& a) const {
  double total = 0.0;
  const auto& params = space_->params();
  for (std::size_t i = 0; i < params.size(); ++i)
    if (const Value* v = a.find(params[i].name)) total += param_log_density(i, *v);
  return total;
}

double DensityModel::log_density(const Assignment& a) const {
  require_valid(*space_, a);
  return log_density_unchecked(a);
}

const ParamEstimator& DensityModel::estimator(const std::string& name) const {
  return estimators_[space_->index_of(name)];
}

}  // namespace smbo
