#pragma once

// Dataset construction. Day indices follow the price calendar: prices cover
// days 0..s, returns and word intensities used for training cover days 1..s
// (column t-1 of a returns matrix holds day t).

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newsfactor/admm.hpp"

namespace newsfactor::data {

using Matrix = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Open and close prices, stocks x days. Entries with present == false are
/// missing and hold 0.
struct PriceSeries {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;
  Matrix open;
  Matrix close;
  Mask present;

  Eigen::Index stocks() const { return close.rows(); }
  Eigen::Index days() const { return close.cols(); }
  /// Throws DataError on shape mismatch or a nonpositive present price.
  void validate() const;
};

/// Number of articles mentioning each word, words x days.
struct ArticleCounts {
  std::vector<std::string> words;
  std::vector<std::string> dates;
  Matrix counts;
};

/// Log returns for days 1..s. mask(i, t) is false when either close needed
/// for the return is missing; such entries hold 0.
struct ReturnsMatrix {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;
  Matrix values;
  Mask mask;
};

/// Thresholded word z-scores, words x days, elementwise >= 0.
struct WordIntensityMatrix {
  std::vector<std::string> words;
  std::vector<std::string> dates;
  Matrix values;
};

ReturnsMatrix compute_log_returns(const PriceSeries& prices);

enum class ThresholdMode {
  kAtLeastThreshold,  // keep z when z >= threshold and z > 0
  kClipNegative,      // keep max(z, 0)
};

inline constexpr int kDefaultWindow = 60;
inline constexpr double kDefaultZThreshold = 3.0;

/// z_jt = (c_jt - mean) / sd over the `window` days strictly before t (sample
/// standard deviation). Days without a full window, and windows with zero
/// spread, produce 0.
WordIntensityMatrix compute_word_intensity(
    const ArticleCounts& counts, int window = kDefaultWindow,
    double z_threshold = kDefaultZThreshold,
    ThresholdMode mode = ThresholdMode::kAtLeastThreshold);

/// Inclusive 1-based day range; empty when last < first.
struct DayRange {
  int first = 1;
  int last = 0;

  int size() const { return last >= first ? last - first + 1 : 0; }
  bool empty() const { return size() == 0; }
  bool contains(int day) const { return day >= first && day <= last; }
};

struct Split {
  DayRange train;
  DayRange validation;
  DayRange test;
};

/// Partitions days 1..total_days into [1, train_end], [train_end+1,
/// validation_end] and [validation_end+1, total_days]. Throws ConfigError
/// unless 0 <= train_end <= validation_end <= total_days.
Split make_split(int total_days, int train_end, int validation_end);

/// Columns [range.first-1, range.last-1] of a days-1..s matrix.
Matrix day_columns(const Matrix& m, const DayRange& range);

struct SyntheticSpec {
  int stocks = 20;
  int words = 30;
  int days = 60;  // return days; prices get days + 1 columns
  int factors = 3;
  double sparsity = 0.8;  // fraction of all-zero columns in the true W
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  PriceSeries prices;               // days + 1 columns
  WordIntensityMatrix intensity;    // words x days, aligned with returns
  admm::FactorModel truth;
  Matrix clean_returns;             // truth.u * truth.w * intensity
  Matrix returns;                   // clean_returns + noise
};

/// Draws a ground-truth model and a dataset from it. Deterministic per seed.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Fresh intensity columns drawn from the same distribution as the generator
/// uses for training data.
Matrix draw_intensity(int words, int days, std::uint64_t seed);

struct SyntheticCorpus {
  PriceSeries prices;      // days + 1 columns
  ArticleCounts counts;    // same calendar as prices
  admm::FactorModel truth;
};

/// Raw article counts and prices whose returns follow the factor model
/// applied to compute_word_intensity(counts, window, z_threshold). Used to
/// exercise the file-level pipeline end to end.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, int window,
                                          double z_threshold);

/// Consecutive weekday ISO dates starting at 2008-01-02.
std::vector<std::string> business_dates(int count);

}  // namespace newsfactor::data
