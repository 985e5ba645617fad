#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gtb::fiscal {

inline constexpr int kNumBrackets = 7;

// Lower cutoffs of the marginal brackets, in coin. The last bracket is
// unbounded above. These are fixed for every schedule; only rates vary.
inline constexpr std::array<double, kNumBrackets> kBracketCutoffs = {
    0.0, 9.0, 39.0, 84.0, 160.0, 204.0, 510.0};

// Marginal rates the learned planner can choose from: 0.00 to 1.00 in 0.05
// steps, 21 values per bracket.
inline constexpr double kRateGridStep = 0.05;
inline constexpr int kRateGridSize = 21;

struct TaxSchedule {
  std::array<double, kNumBrackets> rates{};

  static TaxSchedule free_market();      // all rates zero
  static TaxSchedule us_federal_2018();  // 2018 US single-filer schedule
  static TaxSchedule flat(double rate);

  // Total tax owed on pre-tax income z. Piecewise linear, continuous,
  // nondecreasing for nonnegative rates. Negative z is taxed zero.
  double tax_owed(double z) const;

  // Rate of the bracket containing z under the convention b_j < z <= b_j+1;
  // z <= 0 maps to the first bracket.
  double marginal_rate(double z) const;
  int bracket_of(double z) const;

  bool operator==(const TaxSchedule&) const = default;
};

// One line of comma-separated rates prefixed by a header naming the bracket
// cutoffs. parse_schedule rejects any header that does not match.
std::string serialize_schedule(const TaxSchedule& s);
TaxSchedule parse_schedule(const std::string& text);

// Per-agent coin adjustment for one tax year:
//   dC_i = -T(z_i) + (1/N) * sum_j T(z_j)
// The returned deltas sum to exactly 0.0 in plain left-to-right double
// summation; the last entry absorbs the rounding residual of the naive
// computation (a few ulps at most).
std::vector<double> settle_tax_year(std::span<const double> incomes,
                                    const TaxSchedule& schedule);

// Rolling window of yearly pre-tax incomes across recent episodes, the
// empirical distribution behind the Saez schedule. Only positive incomes
// are retained: zero and negative incomes carry no 1/z welfare weight and
// the schedule taxes them zero anyway.
class IncomeBuffer {
 public:
  explicit IncomeBuffer(int look_back_episodes = 10);

  void push_year(std::int64_t episode, int year, std::span<const double> incomes,
                 const TaxSchedule& schedule);
  std::vector<double> incomes() const;
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  void clear() { records_.clear(); }

  struct Record {
    std::int64_t episode;
    int year;
    int agent;
    double income;
    double marginal_rate;
  };
  const std::deque<Record>& records() const { return records_; }

 private:
  int look_back_;
  std::deque<Record> records_;
};

struct SaezParams {
  double elasticity = 1.0;
  double bin_width = 1.0;
};

// Saez optimal marginal rates on the fixed brackets, from the empirical
// income distribution in `buffer`. Throws EmptyBufferError if the buffer
// holds no positive incomes.
TaxSchedule saez_rates(const IncomeBuffer& buffer, const SaezParams& params);
TaxSchedule saez_rates_from_incomes(std::span<const double> incomes,
                                    const SaezParams& params);

struct OlsElasticity {
  double elasticity;  // slope of log Z on log(1 - tau)
  double log_z0;      // intercept
};

// Least-squares fit of log Z_k = e * log(1 - tau_k) + log Z0 over flat-tax
// sweep samples. Requires at least two distinct tau values, Z > 0, tau < 1.
OlsElasticity estimate_elasticity_ols(std::span<const double> total_incomes,
                                      std::span<const double> flat_rates);

struct ElasticityScore {
  double e;
  double welfare_mean;
  double welfare_stderr;
};

struct ElasticityGridResult {
  double best_e;
  std::vector<ElasticityScore> scores;
};

// Evaluates the welfare of the Saez schedule at each candidate elasticity
// and returns the argmax of the mean. `evaluate` runs the economy under
// saez rates computed with elasticity e and returns one welfare sample per
// evaluation seed. Ties break toward the smallest e.
ElasticityGridResult grid_search_elasticity(
    std::span<const double> e_grid,
    const std::function<std::vector<double>(double e)>& evaluate);

}  // namespace gtb::fiscal
