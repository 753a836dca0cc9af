#include "newsfactor/data.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "newsfactor/error.hpp"

namespace newsfactor::data {
namespace {

constexpr double kIntensityDensity = 0.15;
constexpr double kWordWeightScale = 0.003;
constexpr double kOvernightGapSigma = 0.002;
// Keeps generator draws apart from a solver initialized with the same seed.
constexpr std::uint64_t kGeneratorStream = 0x6e657773;

std::mt19937_64 generator_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kGeneratorStream)};
  return std::mt19937_64(seq);
}

std::vector<std::string> numbered(const char* prefix, int count) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(count));
  char buf[32];
  for (int i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
    out.emplace_back(buf);
  }
  return out;
}

Matrix draw_intensity_with(std::mt19937_64& rng, int words, int days) {
  std::bernoulli_distribution active(kIntensityDensity);
  std::exponential_distribution<double> excess(1.0);
  Matrix y = Matrix::Zero(words, days);
  for (int t = 0; t < days; ++t) {
    for (int j = 0; j < words; ++j) {
      if (active(rng)) y(j, t) = kDefaultZThreshold + excess(rng);
    }
  }
  return y;
}

admm::FactorModel draw_truth(std::mt19937_64& rng, const SyntheticSpec& spec) {
  if (!(spec.sparsity >= 0.0 && spec.sparsity <= 1.0)) {
    throw ConfigError("synthetic sparsity must lie in [0, 1]");
  }
  if (spec.stocks < 1 || spec.words < 1 || spec.days < 1 || spec.factors < 1 ||
      !(spec.noise_sigma >= 0.0)) {
    throw ConfigError("synthetic dimensions must be positive and noise >= 0");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  admm::FactorModel truth;
  truth.u.resize(spec.stocks, spec.factors);
  for (Eigen::Index k = 0; k < truth.u.cols(); ++k) {
    for (Eigen::Index i = 0; i < truth.u.rows(); ++i) truth.u(i, k) = unit(rng);
  }

  const int zero_cols =
      static_cast<int>(std::ceil(spec.sparsity * static_cast<double>(spec.words)));
  std::vector<int> order(static_cast<std::size_t>(spec.words));
  for (int j = 0; j < spec.words; ++j) order[static_cast<std::size_t>(j)] = j;
  std::shuffle(order.begin(), order.end(), rng);

  truth.w = Matrix::Zero(spec.factors, spec.words);
  for (int idx = zero_cols; idx < spec.words; ++idx) {
    const int j = order[static_cast<std::size_t>(idx)];
    for (int k = 0; k < spec.factors; ++k) {
      truth.w(k, j) = kWordWeightScale * gauss(rng);
    }
  }
  return truth;
}

PriceSeries integrate_prices(std::mt19937_64& rng, const Matrix& returns) {
  const Eigen::Index n = returns.rows();
  const Eigen::Index s = returns.cols();
  std::uniform_real_distribution<double> start(20.0, 200.0);
  std::normal_distribution<double> gap(0.0, kOvernightGapSigma);

  PriceSeries p;
  p.tickers = numbered("S", static_cast<int>(n));
  p.dates = business_dates(static_cast<int>(s + 1));
  p.open.resize(n, s + 1);
  p.close.resize(n, s + 1);
  p.present = Mask::Constant(n, s + 1, true);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.close(i, 0) = start(rng);
    p.open(i, 0) = p.close(i, 0) * std::exp(gap(rng));
    for (Eigen::Index t = 1; t <= s; ++t) {
      p.close(i, t) = p.close(i, t - 1) * std::exp(returns(i, t - 1));
      p.open(i, t) = p.close(i, t - 1) * std::exp(gap(rng));
    }
  }
  return p;
}

Matrix add_noise(std::mt19937_64& rng, const Matrix& clean, double sigma) {
  Matrix noisy = clean;
  if (sigma > 0.0) {
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Eigen::Index t = 0; t < noisy.cols(); ++t) {
      for (Eigen::Index i = 0; i < noisy.rows(); ++i) noisy(i, t) += gauss(rng);
    }
  }
  return noisy;
}

}  // namespace

void PriceSeries::validate() const {
  const Eigen::Index n = static_cast<Eigen::Index>(tickers.size());
  const Eigen::Index s = static_cast<Eigen::Index>(dates.size());
  if (open.rows() != n || close.rows() != n || present.rows() != n ||
      open.cols() != s || close.cols() != s || present.cols() != s) {
    throw DimensionError("price series: matrices do not match ticker/date labels");
  }
  for (Eigen::Index t = 0; t < s; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!present(i, t)) continue;
      if (!(open(i, t) > 0.0) || !(close(i, t) > 0.0) || !std::isfinite(open(i, t)) ||
          !std::isfinite(close(i, t))) {
        std::ostringstream msg;
        msg << "nonpositive or non-finite price for " << tickers[static_cast<std::size_t>(i)]
            << " on " << dates[static_cast<std::size_t>(t)];
        throw DataError(msg.str());
      }
    }
  }
}

ReturnsMatrix compute_log_returns(const PriceSeries& prices) {
  prices.validate();
  if (prices.days() < 2) throw DataError("log returns need at least two days of prices");
  const Eigen::Index n = prices.stocks();
  const Eigen::Index s = prices.days() - 1;

  ReturnsMatrix r;
  r.tickers = prices.tickers;
  r.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  r.values = Matrix::Zero(n, s);
  r.mask = Mask::Constant(n, s, false);
  for (Eigen::Index t = 1; t <= s; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (prices.present(i, t) && prices.present(i, t - 1)) {
        r.values(i, t - 1) = std::log(prices.close(i, t)) - std::log(prices.close(i, t - 1));
        r.mask(i, t - 1) = true;
      }
    }
  }
  return r;
}

WordIntensityMatrix compute_word_intensity(const ArticleCounts& counts, int window,
                                           double z_threshold, ThresholdMode mode) {
  if (window < 2) throw ConfigError("z-score window must be at least 2 days");
  if ((counts.counts.array() < 0.0).any()) {
    throw DataError("article counts must be nonnegative");
  }
  const Eigen::Index m = counts.counts.rows();
  const Eigen::Index days = counts.counts.cols();

  WordIntensityMatrix y;
  y.words = counts.words;
  y.dates = counts.dates;
  y.values = Matrix::Zero(m, days);
  const double w = static_cast<double>(window);
  for (Eigen::Index t = window; t < days; ++t) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto past = counts.counts.row(j).segment(t - window, window);
      const double mean = past.sum() / w;
      const double var = (past.array() - mean).square().sum() / (w - 1.0);
      if (!(var > 0.0)) continue;
      const double z = (counts.counts(j, t) - mean) / std::sqrt(var);
      switch (mode) {
        case ThresholdMode::kAtLeastThreshold:
          if (z >= z_threshold && z > 0.0) y.values(j, t) = z;
          break;
        case ThresholdMode::kClipNegative:
          if (z > 0.0) y.values(j, t) = z;
          break;
      }
    }
  }
  return y;
}

Split make_split(int total_days, int train_end, int validation_end) {
  if (total_days < 1 || train_end < 0 || validation_end < train_end ||
      validation_end > total_days) {
    std::ostringstream msg;
    msg << "split boundaries must satisfy 0 <= " << train_end << " <= "
        << validation_end << " <= " << total_days;
    throw ConfigError(msg.str());
  }
  return {{1, train_end}, {train_end + 1, validation_end},
          {validation_end + 1, total_days}};
}

Matrix day_columns(const Matrix& m, const DayRange& range) {
  if (range.empty()) return Matrix(m.rows(), 0);
  if (range.first < 1 || range.last > m.cols()) {
    throw DimensionError("day range exceeds matrix columns");
  }
  return m.middleCols(range.first - 1, range.size());
}

Matrix draw_intensity(int words, int days, std::uint64_t seed) {
  std::mt19937_64 rng = generator_rng(seed);
  return draw_intensity_with(rng, words, days);
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  std::mt19937_64 rng = generator_rng(spec.seed);
  SyntheticDataset out;
  out.truth = draw_truth(rng, spec);
  out.intensity.values = draw_intensity_with(rng, spec.words, spec.days);
  out.intensity.words = numbered("w", spec.words);
  out.clean_returns = out.truth.u * (out.truth.w * out.intensity.values);
  out.returns = add_noise(rng, out.clean_returns, spec.noise_sigma);
  out.prices = integrate_prices(rng, out.returns);
  out.intensity.dates.assign(out.prices.dates.begin() + 1, out.prices.dates.end());
  return out;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, int window,
                                          double z_threshold) {
  std::mt19937_64 rng = generator_rng(spec.seed);
  SyntheticCorpus out;
  out.truth = draw_truth(rng, spec);

  const int total = spec.days + 1;
  out.counts.words = numbered("w", spec.words);
  out.counts.dates = business_dates(total);
  out.counts.counts.resize(spec.words, total);
  std::uniform_real_distribution<double> base(5.0, 50.0);
  std::bernoulli_distribution spike(0.08);
  for (int j = 0; j < spec.words; ++j) {
    const double level = base(rng);
    std::poisson_distribution<int> daily(level);
    std::poisson_distribution<int> burst(4.0 * level);
    for (int t = 0; t < total; ++t) {
      int c = daily(rng);
      if (spike(rng)) c += burst(rng);
      out.counts.counts(j, t) = c;
    }
  }

  const WordIntensityMatrix y = compute_word_intensity(out.counts, window, z_threshold);
  const Matrix aligned = y.values.rightCols(spec.days);
  const Matrix clean = out.truth.u * (out.truth.w * aligned);
  out.prices = integrate_prices(rng, add_noise(rng, clean, spec.noise_sigma));
  return out;
}

std::vector<std::string> business_dates(int count) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  sys_days day = sys_days{year{2008} / January / 2};
  char buf[16];
  while (static_cast<int>(out.size()) < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += days{1};
  }
  return out;
}

}  // namespace newsfactor::data
