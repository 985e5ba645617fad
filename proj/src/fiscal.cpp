#include "gtb/fiscal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "gtb/common.hpp"

namespace gtb::fiscal {

TaxSchedule TaxSchedule::free_market() { return TaxSchedule{}; }

TaxSchedule TaxSchedule::us_federal_2018() {
  return TaxSchedule{{0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37}};
}

TaxSchedule TaxSchedule::flat(double rate) {
  TaxSchedule s;
  s.rates.fill(rate);
  return s;
}

double TaxSchedule::tax_owed(double z) const {
  if (!(z > 0.0)) return 0.0;
  double tax = 0.0;
  for (int j = 0; j < kNumBrackets; ++j) {
    const double lo = kBracketCutoffs[j];
    const double hi = (j + 1 < kNumBrackets)
                          ? kBracketCutoffs[j + 1]
                          : std::numeric_limits<double>::infinity();
    if (z > hi) {
      tax += rates[j] * (hi - lo);
    } else if (z > lo) {
      tax += rates[j] * (z - lo);
    }
  }
  return tax;
}

int TaxSchedule::bracket_of(double z) const {
  for (int j = kNumBrackets - 1; j >= 1; --j) {
    if (z > kBracketCutoffs[j]) return j;
  }
  return 0;
}

double TaxSchedule::marginal_rate(double z) const { return rates[bracket_of(z)]; }

static std::string cutoff_header() {
  std::string h = "# brackets";
  for (int j = 0; j < kNumBrackets; ++j) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%g", j == 0 ? " " : ",", kBracketCutoffs[j]);
    h += buf;
  }
  return h;
}

std::string serialize_schedule(const TaxSchedule& s) {
  std::string out = cutoff_header();
  out += '\n';
  for (int j = 0; j < kNumBrackets; ++j) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%.17g", j == 0 ? "" : ",", s.rates[j]);
    out += buf;
  }
  out += '\n';
  return out;
}

TaxSchedule parse_schedule(const std::string& text) {
  std::istringstream in(text);
  std::string header, body;
  if (!std::getline(in, header)) throw ConfigError("schedule: missing header");
  if (header != cutoff_header()) {
    throw ConfigError("schedule: bracket header mismatch: \"" + header + "\"");
  }
  if (!std::getline(in, body)) throw ConfigError("schedule: missing rate line");
  TaxSchedule s;
  std::istringstream rates(body);
  std::string tok;
  int j = 0;
  while (std::getline(rates, tok, ',')) {
    if (j >= kNumBrackets) throw ConfigError("schedule: too many rates");
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("schedule: bad rate token \"" + tok + "\"");
    }
    if (pos != tok.size()) throw ConfigError("schedule: bad rate token \"" + tok + "\"");
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("schedule: rate out of [0,1]");
    s.rates[j++] = v;
  }
  if (j != kNumBrackets) throw ConfigError("schedule: expected 7 rates");
  return s;
}

std::vector<double> settle_tax_year(std::span<const double> incomes,
                                    const TaxSchedule& schedule) {
  const std::size_t n = incomes.size();
  if (n == 0) throw ContractViolation("settle_tax_year: no agents");
  std::vector<double> delta(n);
  double total_tax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    delta[i] = -schedule.tax_owed(incomes[i]);
    total_tax -= delta[i];
  }
  const double share = total_tax / static_cast<double>(n);
  for (double& d : delta) d += share;

  // Pin the forward sum to exactly zero: the last delta balances the others,
  // so s + (-s) == 0.0 bit-exactly. The adjustment it absorbs is the
  // rounding residual of the ideal value, a few ulps at most.
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) partial += delta[i];
  delta[n - 1] = -partial;
  return delta;
}

IncomeBuffer::IncomeBuffer(int look_back_episodes) : look_back_(look_back_episodes) {
  if (look_back_episodes < 1) throw ContractViolation("IncomeBuffer: look_back < 1");
}

void IncomeBuffer::push_year(std::int64_t episode, int year,
                             std::span<const double> incomes,
                             const TaxSchedule& schedule) {
  for (std::size_t i = 0; i < incomes.size(); ++i) {
    if (incomes[i] > 0.0) {
      records_.push_back(Record{episode, year, static_cast<int>(i), incomes[i],
                                schedule.marginal_rate(incomes[i])});
    }
  }
  while (!records_.empty() && records_.front().episode <= episode - look_back_) {
    records_.pop_front();
  }
}

std::vector<double> IncomeBuffer::incomes() const {
  std::vector<double> z;
  z.reserve(records_.size());
  for (const Record& r : records_) z.push_back(r.income);
  return z;
}

namespace {

// tau = (1-G) / ((1-G) + a*e) with the 0/0 corner defined as 0: when all
// remaining welfare weight sits at or above z and the local Pareto term
// vanishes, taxing at z transfers nothing worth weighting.
double saez_tau(double g, double a, double e) {
  const double numer = 1.0 - g;
  const double denom = numer + a * e;
  if (denom <= 0.0) return 0.0;
  const double tau = numer / denom;
  return std::clamp(tau, 0.0, 1.0);
}

}  // namespace

TaxSchedule saez_rates_from_incomes(std::span<const double> incomes,
                                    const SaezParams& params) {
  std::vector<double> z;
  z.reserve(incomes.size());
  for (double v : incomes) {
    if (v > 0.0) z.push_back(v);
  }
  if (z.empty()) throw EmptyBufferError();
  if (!(params.elasticity >= 0.0)) throw ContractViolation("saez: e < 0");
  if (!(params.bin_width > 0.0)) throw ContractViolation("saez: bin width <= 0");

  const double w = params.bin_width;
  const double n = static_cast<double>(z.size());
  const double top_cutoff = kBracketCutoffs[kNumBrackets - 1];
  double z_max = 0.0;
  for (double v : z) z_max = std::max(z_max, v);
  // Bins must at least span the bounded brackets even when all incomes are
  // small, so that every bracket has binned rates to average.
  const int num_bins =
      static_cast<int>(std::ceil(std::max(z_max, top_cutoff) / w)) + 1;

  std::vector<double> count(num_bins, 0.0), zsum(num_bins, 0.0), wsum(num_bins, 0.0);
  for (double v : z) {
    int k = std::min(static_cast<int>(v / w), num_bins - 1);
    count[k] += 1.0;
    zsum[k] += v;
    wsum[k] += 1.0 / v;
  }

  // Reverse-cumulative mass and welfare weight: tail[k] covers bin k and up.
  std::vector<double> tail_count(num_bins), tail_weight(num_bins);
  double tc = 0.0, tw = 0.0;
  for (int k = num_bins - 1; k >= 0; --k) {
    tc += count[k];
    tw += wsum[k];
    tail_count[k] = tc;
    tail_weight[k] = tw;
  }
  // Normalize by the same accumulation so that G == 1 bit-exactly for any
  // bin with all mass at or above it; a separately summed total can differ
  // by an ulp and flip tau from 0 to 1 where a*e vanishes.
  const double weight_total = tail_weight[0];

  std::vector<double> tau(num_bins, 0.0);
  double prev_tau = 0.0;
  for (int k = 0; k < num_bins; ++k) {
    const double one_minus_f = tail_count[k] / n;
    if (one_minus_f <= 0.0) {
      // No mass at or above this bin; the binned rate is unidentified, so
      // carry the last identified value forward.
      tau[k] = prev_tau;
      continue;
    }
    // G(z): average normalized welfare weight above z, i.e. reverse
    // cumulative weight divided by reverse cumulative mass.
    const double g_cond = (tail_weight[k] / weight_total) / one_minus_f;
    double a = 0.0;
    if (count[k] > 0.0) {
      const double zbar = zsum[k] / count[k];
      const double density = (count[k] / n) / w;
      a = zbar * density / one_minus_f;
    }
    tau[k] = saez_tau(g_cond, a, params.elasticity);
    prev_tau = tau[k];
  }

  TaxSchedule out;
  for (int j = 0; j + 1 < kNumBrackets; ++j) {
    const double lo = kBracketCutoffs[j];
    const double hi = kBracketCutoffs[j + 1];
    double acc = 0.0;
    int cnt = 0;
    for (int k = 0; k < num_bins; ++k) {
      const double center = (static_cast<double>(k) + 0.5) * w;
      if (center > lo && center <= hi) {
        acc += tau[k];
        ++cnt;
      }
    }
    out.rates[j] = cnt > 0 ? acc / cnt : 0.0;
  }

  // Top bracket: asymptotic rule with the bracket's own welfare mass and
  // the Pareto tail statistic a = m / (m - z+).
  double top_weight = 0.0, top_sum = 0.0, top_count = 0.0;
  for (double v : z) {
    if (v > top_cutoff) {
      top_weight += 1.0 / v;
      top_sum += v;
      top_count += 1.0;
    }
  }
  if (top_count == 0.0) {
    out.rates[kNumBrackets - 1] = 0.0;
  } else {
    const double g_top = top_weight / weight_total;
    const double m = top_sum / top_count;
    const double a_top = m > top_cutoff ? m / (m - top_cutoff)
                                        : std::numeric_limits<double>::infinity();
    out.rates[kNumBrackets - 1] =
        std::isinf(a_top) ? 0.0 : saez_tau(g_top, a_top, params.elasticity);
  }
  return out;
}

TaxSchedule saez_rates(const IncomeBuffer& buffer, const SaezParams& params) {
  if (buffer.empty()) throw EmptyBufferError();
  const std::vector<double> z = buffer.incomes();
  return saez_rates_from_incomes(z, params);
}

OlsElasticity estimate_elasticity_ols(std::span<const double> total_incomes,
                                      std::span<const double> flat_rates) {
  const std::size_t n = total_incomes.size();
  if (n != flat_rates.size() || n < 2) {
    throw ContractViolation("ols: need >= 2 paired samples");
  }
  std::vector<double> x(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(total_incomes[k] > 0.0)) throw ContractViolation("ols: Z must be > 0");
    if (!(flat_rates[k] < 1.0)) throw ContractViolation("ols: tau must be < 1");
    x[k] = std::log(1.0 - flat_rates[k]);
    y[k] = std::log(total_incomes[k]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw SingularFitError("ols: all tax rates identical");
  const double slope = sxy / sxx;
  return OlsElasticity{slope, my - slope * mx};
}

ElasticityGridResult grid_search_elasticity(
    std::span<const double> e_grid,
    const std::function<std::vector<double>(double e)>& evaluate) {
  if (e_grid.empty()) throw ContractViolation("grid_search_elasticity: empty grid");
  ElasticityGridResult result;
  result.best_e = e_grid[0];
  double best_mean = -std::numeric_limits<double>::infinity();
  for (double e : e_grid) {
    const std::vector<double> samples = evaluate(e);
    if (samples.empty()) throw ContractViolation("grid_search_elasticity: no samples");
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    const double stderr_ =
        samples.size() > 1
            ? std::sqrt(var / static_cast<double>(samples.size() - 1) /
                        static_cast<double>(samples.size()))
            : 0.0;
    result.scores.push_back(ElasticityScore{e, mean, stderr_});
    if (mean > best_mean) {  // strict: ties keep the earlier (smaller) e
      best_mean = mean;
      result.best_e = e;
    }
  }
  return result;
}

}  // namespace gtb::fiscal
