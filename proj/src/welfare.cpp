#include "gtb/welfare.hpp"

#include <algorithm>
#include <cmath>

#include "gtb/common.hpp"

namespace gtb::welfare {

double isoelastic_utility(double coin, double labor, double eta, double labor_weight) {
  if (eta == 1.0) throw ContractViolation("isoelastic_utility: eta == 1 unsupported");
  const double c = std::max(coin, 0.0);
  const double crra = (std::pow(c, 1.0 - eta) - 1.0) / (1.0 - eta);
  return crra - labor_weight * labor;
}

double gini(std::span<const double> coins, bool* zero_total) {
  const std::size_t n = coins.size();
  if (n == 0) throw ContractViolation("gini: empty vector");
  if (zero_total) *zero_total = false;
  double total = 0.0;
  for (double c : coins) total += c;
  if (total <= 0.0) {
    if (zero_total) *zero_total = true;
    return 0.0;
  }
  // Sorted form of sum_ij |c_i - c_j| = 2 * sum_i (2i + 1 - n) * c_(i).
  std::vector<double> sorted(coins.begin(), coins.end());
  std::sort(sorted.begin(), sorted.end());
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weighted += (2.0 * static_cast<double>(i) + 1.0 - static_cast<double>(n)) * sorted[i];
  }
  return weighted / (static_cast<double>(n) * total);
}

double equality(std::span<const double> coins) {
  const std::size_t n = coins.size();
  if (n < 2) throw ContractViolation("equality: needs at least two agents");
  const double g = gini(coins);
  return 1.0 - static_cast<double>(n) / (static_cast<double>(n) - 1.0) * g;
}

double productivity(std::span<const double> coins) {
  double total = 0.0;
  for (double c : coins) total += c;
  return total;
}

SwfObjective parse_objective(const std::string& name) {
  if (name == "utilitarian") return SwfObjective::kUtilitarian;
  if (name == "eq_times_prod") return SwfObjective::kEqualityTimesProductivity;
  throw ConfigError("unknown social welfare objective: " + name);
}

std::string objective_name(SwfObjective o) {
  return o == SwfObjective::kUtilitarian ? "utilitarian" : "eq_times_prod";
}

std::vector<double> inverse_income_weights(std::span<const double> base, double floor) {
  if (base.empty()) throw ContractViolation("inverse_income_weights: empty base");
  std::vector<double> w(base.size());
  double total = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    w[i] = 1.0 / std::max(base[i], floor);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

double utilitarian_swf(std::span<const double> utilities,
                       std::span<const double> weight_base) {
  if (utilities.size() != weight_base.size()) {
    throw ContractViolation("utilitarian_swf: size mismatch");
  }
  const std::vector<double> w = inverse_income_weights(weight_base);
  double swf = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) swf += w[i] * utilities[i];
  return swf;
}

double eq_times_prod_swf(std::span<const double> endowments) {
  return equality(endowments) * productivity(endowments);
}

double social_welfare(SwfObjective objective, std::span<const double> utilities,
                      std::span<const double> weight_base,
                      std::span<const double> endowments) {
  switch (objective) {
    case SwfObjective::kUtilitarian:
      return utilitarian_swf(utilities, weight_base);
    case SwfObjective::kEqualityTimesProductivity:
      return eq_times_prod_swf(endowments);
  }
  throw ContractViolation("social_welfare: bad objective");
}

}  // namespace gtb::welfare
