#include "rvarena/task.hpp"

#include <algorithm>
#include <cmath>

#include "rvarena/error.hpp"

namespace rvarena {

double RvDataset::span_days() const {
  if (times_days.empty()) return 0.0;
  return times_days.back() - times_days.front();
}

double RvDataset::median_sigma() const {
  if (sigmas_ms.empty()) return 0.0;
  std::vector<double> s = sigmas_ms;
  const std::size_t mid = s.size() / 2;
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(mid), s.end());
  if (s.size() % 2 == 1) return s[mid];
  const double upper = s[mid];
  const double lower = *std::max_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::vector<std::string> RvDataset::instruments() const {
  std::vector<std::string> out;
  for (const auto& l : labels) {
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  return out;
}

void RvDataset::validate() const {
  const std::size_t n = times_days.size();
  if (rvs_ms.size() != n || sigmas_ms.size() != n || labels.size() != n) {
    throw Error(ErrorKind::invalid_argument, "dataset arrays differ in length");
  }
  if (n == 0) throw Error(ErrorKind::invalid_argument, "dataset is empty");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(times_days[k]) || !std::isfinite(rvs_ms[k])) {
      throw Error(ErrorKind::invalid_argument, "non-finite time or velocity");
    }
    if (!(sigmas_ms[k] > 0.0) || !std::isfinite(sigmas_ms[k])) {
      throw Error(ErrorKind::invalid_argument, "sigmas must be positive");
    }
    if (k > 0 && !(times_days[k] > times_days[k - 1])) {
      throw Error(ErrorKind::invalid_argument, "times must be strictly increasing");
    }
  }
  if (t_ref_days != times_days.front()) {
    throw Error(ErrorKind::invalid_argument, "t_ref_days must equal the first timestamp");
  }
  if (!(star_mass_sun > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "star mass must be positive");
  }
}

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::easy: return "easy";
    case Tier::medium: return "medium";
    case Tier::hard: return "hard";
  }
  return "easy";
}

Tier tier_from_string(std::string_view name) {
  if (name == "easy" || name == "Easy") return Tier::easy;
  if (name == "medium" || name == "Medium") return Tier::medium;
  if (name == "hard" || name == "Hard") return Tier::hard;
  throw Error(ErrorKind::schema, "unknown tier '" + std::string(name) + "'");
}

double truth_semi_amplitude(const TaskBundle& bundle, std::size_t i) {
  if (i < bundle.reported_k_ms.size() && bundle.reported_k_ms[i]) {
    return *bundle.reported_k_ms[i];
  }
  return semi_amplitude(bundle.truth_planets.at(i), bundle.dataset.star());
}

}  // namespace rvarena
