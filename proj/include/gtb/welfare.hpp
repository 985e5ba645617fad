#pragma once

#include <span>
#include <string>
#include <vector>

namespace gtb::welfare {

inline constexpr double kDefaultEta = 0.23;

// Isoelastic (CRRA) utility of coin minus linear labor disutility:
//   u = (C^(1-eta) - 1) / (1-eta) - labor_weight * L
// Negative coin is clamped to zero before the power; eta must not be 1.
double isoelastic_utility(double coin, double labor, double eta = kDefaultEta,
                          double labor_weight = 1.0);

// Gini index of a nonnegative endowment vector, in [0, 1 - 1/N].
// Zero or negative total endowment yields 0 (perfect equality by
// convention); `zero_total`, when given, reports that the convention fired.
double gini(std::span<const double> coins, bool* zero_total = nullptr);

// Normalized equality: 1 - N/(N-1) * gini, in [0, 1]. N >= 2 required.
double equality(std::span<const double> coins);

// Total coin endowment.
double productivity(std::span<const double> coins);

enum class SwfObjective { kUtilitarian, kEqualityTimesProductivity };

SwfObjective parse_objective(const std::string& name);
std::string objective_name(SwfObjective o);

// Inverse-income welfare weights, normalized to sum to 1. Each base value
// is floored at `floor` before inverting; the floor keeps destitute agents
// from collapsing everyone else's weight to zero.
std::vector<double> inverse_income_weights(std::span<const double> base,
                                           double floor = 1.0);

// Utilitarian objective: convex combination of utilities under
// inverse-income weights. `weight_base` supplies the values the weights are
// derived from (the caller decides whether that is coin endowment or annual
// pre-tax income; both appear in the literature).
double utilitarian_swf(std::span<const double> utilities,
                       std::span<const double> weight_base);

// Product objective: equality(endowments) * productivity(endowments).
double eq_times_prod_swf(std::span<const double> endowments);

double social_welfare(SwfObjective objective, std::span<const double> utilities,
                      std::span<const double> weight_base,
                      std::span<const double> endowments);

}  // namespace gtb::welfare
