#include "smbo/report.hpp"

#include <algorithm>
#include <cmath>

#include "smbo/error.hpp"
#include "smbo/format.hpp"

namespace smbo {

std::vector<CurvePoint> compute_curves(std::span<const Trial> trials, std::size_t window) {
  if (trials.empty()) throw Error("no trials to report");
  if (window < 1) throw Error("window must be at least 1");
  std::vector<CurvePoint> out;
  out.reserve(trials.size());
  double running_min = trials.front().error;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    running_min = std::min(running_min, trials[i].error);
    const std::size_t n = std::min(i + 1, window);
    double sum = 0.0;
    for (std::size_t j = i + 1 - n; j <= i; ++j) sum += trials[j].error;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t j = i + 1 - n; j <= i; ++j) ss += (trials[j].error - mean) * (trials[j].error - mean);
    out.push_back(CurvePoint{i, mean, std::sqrt(ss / static_cast<double>(n)), running_min, trials[i].branch});
  }
  return out;
}

std::string curves_to_csv(std::span<const CurvePoint> curves) {
  std::string out = "i,mean,std,min,branch\n";
  for (const auto& c : curves) {
    out += std::to_string(c.iteration);
    out += ',' + format_double(c.window_mean);
    out += ',' + format_double(c.window_std);
    out += ',' + format_double(c.running_min);
    out += ',';
    out += to_string(c.branch);
    out += '\n';
  }
  return out;
}

nlohmann::json best_trials(std::span<const Trial> trials, std::size_t k) {
  std::vector<const Trial*> sorted;
  for (const auto& t : trials) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](const Trial* a, const Trial* b) {
    return a->error != b->error ? a->error < b->error : a->id < b->id;
  });
  auto out = nlohmann::json::array();
  for (std::size_t i = 0; i < std::min(k, sorted.size()); ++i) out.push_back(to_json(*sorted[i]));
  return out;
}

}  // namespace smbo
