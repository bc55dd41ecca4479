#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smbo/trial.hpp"

namespace smbo {

/// Convergence statistics at iteration i.
struct CurvePoint {
  std::size_t iteration = 0;
  double window_mean = 0.0;  // mean error over the last min(i+1, window) trials
  double window_std = 0.0;   // population std over the same window
  double running_min = 0.0;  // min error over trials 0..i
  Branch branch = Branch::random;
};

std::vector<CurvePoint> compute_curves(std::span<const Trial> trials, std::size_t window = 10);

/// Header `i,mean,std,min,branch`, one row per point, LF line endings,
/// shortest round-trip decimals.
std::string curves_to_csv(std::span<const CurvePoint> curves);

/// The k lowest-error trials (ties by id) as a JSON array.
nlohmann::json best_trials(std::span<const Trial> trials, std::size_t k);

}  // namespace smbo
