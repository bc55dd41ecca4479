#include "smbo/acquisition.hpp"

#include <algorithm>
#include <cmath>

#include "smbo/error.hpp"

namespace smbo {

void AcquisitionConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error("gamma must lie in (0, 1)");
  if (!(p_hybrid >= 0.0 && p_hybrid <= 1.0)) throw Error("p must lie in [0, 1]");
  if (n_candidates < 1) throw Error("candidate count must be at least 1");
}

std::size_t good_count(std::size_t t, double gamma) {
  const auto n = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(t)));
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(t, 1));
}

SplitResult split_trials(std::span<const Trial> trials, double gamma) {
  if (trials.empty()) throw Error("cannot split an empty trial database");
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error("gamma must lie in (0, 1)");

  std::vector<const Trial*> sorted;
  sorted.reserve(trials.size());
  for (const auto& t : trials) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](const Trial* a, const Trial* b) {
    if (a->error != b->error) return a->error < b->error;
    return a->id < b->id;
  });

  const std::size_t n_good = good_count(trials.size(), gamma);
  SplitResult out;
  out.gamma = gamma;
  out.good.reserve(n_good);
  out.bad.reserve(trials.size() - n_good);
  for (std::size_t i = 0; i < sorted.size(); ++i) (i < n_good ? out.good : out.bad).push_back(*sorted[i]);
  out.e_star = out.good.back().error;
  return out;
}

double score_tpe(double l_log, double g_log, double e_star, double gamma) {
  // Divide through by l: e* gamma / (gamma + (1 - gamma) exp(g - l)).
  return e_star * gamma / (gamma + (1.0 - gamma) * std::exp(g_log - l_log));
}

double score_simplified(double l_log) { return l_log; }

namespace {

std::vector<Assignment> assignments_of(const std::vector<Trial>& trials) {
  std::vector<Assignment> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.assignment);
  return out;
}

}  // namespace

Proposal propose_next(std::span<const Trial> history, const SearchSpace& space,
                      const AcquisitionConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto split = split_trials(history, cfg.gamma);
  const bool ratio_branch = rng.uniform01() < cfg.p_hybrid;

  const auto good = assignments_of(split.good);
  const auto l = DensityModel::fit(space, good);

  std::vector<Assignment> candidates;
  candidates.reserve(cfg.n_candidates);
  for (std::size_t i = 0; i < cfg.n_candidates; ++i) candidates.push_back(sample_uniform(space, rng));

  std::vector<double> scores(candidates.size());
  // Secondary key for score_tpe: when e* > 0 the score is strictly increasing
  // in l - g, so equal doubles only arise from saturation near e*.
  std::vector<double> log_ratio(candidates.size(), 0.0);
  if (ratio_branch) {
    const auto bad = assignments_of(split.bad);
    const auto g = bad.empty() ? DensityModel::uniform(space) : DensityModel::fit(space, bad);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double l_log = l.log_density_unchecked(candidates[i]);
      const double g_log = g.log_density_unchecked(candidates[i]);
      scores[i] = score_tpe(l_log, g_log, split.e_star, cfg.gamma);
      if (split.e_star > 0.0) log_ratio[i] = l_log - g_log;
    }
  } else {
    for (std::size_t i = 0; i < candidates.size(); ++i)
      scores[i] = score_simplified(l.log_density_unchecked(candidates[i]));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best] || (scores[i] == scores[best] && log_ratio[i] > log_ratio[best])) best = i;
  return Proposal{std::move(candidates[best]), ratio_branch ? Branch::tpe : Branch::simplified};
}

}  // namespace smbo
