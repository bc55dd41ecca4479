#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smbo/density.hpp"
#include "smbo/rng.hpp"
#include "smbo/search_space.hpp"
#include "smbo/trial.hpp"

namespace smbo {

/// Trials cut at the gamma-quantile of observed error.
struct SplitResult {
  double e_star = 0.0;  // largest error in `good`
  std::vector<Trial> good;
  std::vector<Trial> bad;
  double gamma = 0.5;
};

struct AcquisitionConfig {
  double gamma = 0.5;       // quantile level defining e*
  double p_hybrid = 0.9;    // probability of the density-ratio branch
  std::size_t n_candidates = 64;

  /// Throws Error unless 0 < gamma < 1, 0 <= p_hybrid <= 1, n_candidates >= 1.
  void validate() const;
};

/// Sorts by (error, id) and keeps the first max(1, ceil(gamma * t)) as good.
/// Failed trials take part with their stored error of 1.0.
SplitResult split_trials(std::span<const Trial> trials, double gamma);

/// Number of good trials for a history of size t.
std::size_t good_count(std::size_t t, double gamma);

/// e* gamma l / (gamma l + (1 - gamma) g), from log densities.
double score_tpe(double l_log, double g_log, double e_star, double gamma);

/// Monotone surrogate of 2 e* l / k: the constant factor never changes the
/// argmax, so the score is l_log itself.
double score_simplified(double l_log);

struct Proposal {
  Assignment assignment;
  Branch branch = Branch::tpe;
};

/// One hybrid step. With probability p_hybrid: fit l on the good set and g on
/// the bad set (uniform prior if empty) and take the best of n_candidates
/// uniform draws under score_tpe. Otherwise take the best of n_candidates
/// uniform draws under score_simplified. Ties go to the lowest candidate
/// index.
Proposal propose_next(std::span<const Trial> history, const SearchSpace& space,
                      const AcquisitionConfig& cfg, Rng& rng);

}  // namespace smbo
