#pragma once

// File formats shared by the library and the command-line tool.
//
//   prices CSV   date,ticker,open,close       one row per stock-day
//   counts CSV   date,word,doc_count          one row per word-day
//   matrix CSV   <corner>,<col label>...      then <row label>,<values>...
//   key=value    one pair per line, '#' starts a comment
//
// Numbers are written in shortest round-trip form, so a matrix written and
// read back compares equal bit for bit.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "newsfactor/admm.hpp"
#include "newsfactor/backtest.hpp"
#include "newsfactor/data.hpp"

namespace newsfactor::io {

using Matrix = Eigen::MatrixXd;
namespace fs = std::filesystem;

std::string format_double(double v);
/// Throws DataError naming `where` when `text` is not a complete number.
double parse_double(std::string_view text, std::string_view where);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_text(const fs::path& path);

/// Tickers and dates come out sorted; stock-days without a row are marked
/// missing.
data::PriceSeries parse_prices_csv(std::string_view text, std::string_view source = "prices");
data::PriceSeries read_prices_csv(const fs::path& path);
std::string format_prices_csv(const data::PriceSeries& prices);

/// Counts aligned to `calendar`. Rows on other dates are ignored and absent
/// word-days count as 0. An empty file yields zero words and a warning.
data::ArticleCounts parse_counts_csv(std::string_view text,
                                     const std::vector<std::string>& calendar,
                                     std::string_view source = "counts");
data::ArticleCounts read_counts_csv(const fs::path& path,
                                    const std::vector<std::string>& calendar);
std::string format_counts_csv(const data::ArticleCounts& counts);

struct LabeledMatrix {
  std::string corner;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix values;
};

std::string format_matrix_csv(const LabeledMatrix& m);
LabeledMatrix parse_matrix_csv(std::string_view text, std::string_view source = "matrix");
LabeledMatrix read_matrix_csv(const fs::path& path);

Matrix mask_to_matrix(const data::Mask& mask);
data::Mask matrix_to_mask(const Matrix& m);

using KeyValues = std::map<std::string, std::string>;
std::string format_key_values(const KeyValues& kv);
KeyValues parse_key_values(std::string_view text, std::string_view source = "config");

/// One row per strategy: strategy,cumulative_return,worst_day,max_drawdown,
/// cvar_5,sharpe. An undefined Sharpe ratio is written as "--". The value
/// series is not part of this file.
std::string format_report_csv(const std::vector<backtest::BacktestReport>& reports);
std::vector<backtest::BacktestReport> parse_report_csv(std::string_view text,
                                                       std::string_view source = "report");

/// Index levels CSV `date,value`.
std::map<std::string, double> read_level_series(const fs::path& path);

/// Collects output files in memory and publishes them together: each file is
/// written to a temporary sibling and renamed into place only on commit().
/// Nothing is written if commit() is never reached.
class OutputTransaction {
 public:
  explicit OutputTransaction(fs::path directory);

  void stage(const std::string& name, std::string content);
  void commit();

  const fs::path& directory() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

/// Advisory lock file held for the lifetime of the object. Throws
/// ConfigError if another process holds it.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& directory);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

}  // namespace newsfactor::io
