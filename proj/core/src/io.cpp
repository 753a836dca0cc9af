#include "newsfactor/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include "newsfactor/error.hpp"
#include "newsfactor/log.hpp"

namespace newsfactor::io {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string where(std::string_view source, std::size_t line) {
  std::ostringstream s;
  s << source << ":" << line;
  return s.str();
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw DataError(where(source, line) + ": " + what);
}

bool is_iso_date(std::string_view d) {
  if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (d[i] < '0' || d[i] > '9') return false;
  }
  return true;
}

void expect_header(std::string_view line, std::string_view expected, std::string_view source) {
  if (trim(line) != expected) {
    fail(source, 1, "expected header '" + std::string(expected) + "'");
  }
}

std::vector<std::string> sorted_unique(const std::set<std::string>& s) {
  return {s.begin(), s.end()};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view at) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw DataError(std::string(at) + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  line = trim(line);
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(trim(line.substr(start)));
      break;
    }
    out.emplace_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

data::PriceSeries parse_prices_csv(std::string_view text, std::string_view source) {
  struct Row {
    std::string date, ticker;
    double open, close;
    std::size_t line;
  };
  const auto lines = lines_of(text);
  if (lines.empty() || trim(lines[0]).empty()) fail(source, 1, "missing header");
  expect_header(lines[0], "date,ticker,open,close", source);

  std::vector<Row> rows;
  std::set<std::string> dates, tickers;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto f = split_csv_line(lines[ln]);
    if (f.size() != 4) fail(source, ln + 1, "expected 4 fields");
    if (!is_iso_date(f[0])) fail(source, ln + 1, "date '" + f[0] + "' is not YYYY-MM-DD");
    if (f[1].empty()) fail(source, ln + 1, "empty ticker");
    const std::string at = where(source, ln + 1);
    Row r{f[0], f[1], parse_double(f[2], at), parse_double(f[3], at), ln + 1};
    if (!(r.open > 0.0) || !(r.close > 0.0)) fail(source, ln + 1, "prices must be positive");
    dates.insert(r.date);
    tickers.insert(r.ticker);
    rows.push_back(std::move(r));
  }

  data::PriceSeries p;
  p.dates = sorted_unique(dates);
  p.tickers = sorted_unique(tickers);
  const auto n = static_cast<Eigen::Index>(p.tickers.size());
  const auto s = static_cast<Eigen::Index>(p.dates.size());
  std::unordered_map<std::string, Eigen::Index> date_ix, ticker_ix;
  for (Eigen::Index t = 0; t < s; ++t) date_ix[p.dates[static_cast<std::size_t>(t)]] = t;
  for (Eigen::Index i = 0; i < n; ++i) ticker_ix[p.tickers[static_cast<std::size_t>(i)]] = i;

  p.open = Matrix::Zero(n, s);
  p.close = Matrix::Zero(n, s);
  p.present = data::Mask::Constant(n, s, false);
  for (const Row& r : rows) {
    const Eigen::Index i = ticker_ix.at(r.ticker);
    const Eigen::Index t = date_ix.at(r.date);
    if (p.present(i, t)) fail(source, r.line, "duplicate row for " + r.ticker + " on " + r.date);
    p.open(i, t) = r.open;
    p.close(i, t) = r.close;
    p.present(i, t) = true;
  }
  return p;
}

data::PriceSeries read_prices_csv(const fs::path& path) {
  return parse_prices_csv(read_text(path), path.string());
}

std::string format_prices_csv(const data::PriceSeries& prices) {
  std::string out = "date,ticker,open,close\n";
  for (Eigen::Index t = 0; t < prices.days(); ++t) {
    for (Eigen::Index i = 0; i < prices.stocks(); ++i) {
      if (!prices.present(i, t)) continue;
      out += prices.dates[static_cast<std::size_t>(t)] + "," +
             prices.tickers[static_cast<std::size_t>(i)] + "," +
             format_double(prices.open(i, t)) + "," + format_double(prices.close(i, t)) + "\n";
    }
  }
  return out;
}

data::ArticleCounts parse_counts_csv(std::string_view text,
                                     const std::vector<std::string>& calendar,
                                     std::string_view source) {
  data::ArticleCounts c;
  c.dates = calendar;
  const auto lines = lines_of(text);
  const bool empty = lines.empty() || (lines.size() == 1 && trim(lines[0]).empty());
  if (empty) {
    log::warn(std::string(source) + " is empty; all word intensities will be zero");
    c.counts = Matrix::Zero(0, static_cast<Eigen::Index>(calendar.size()));
    return c;
  }
  expect_header(lines[0], "date,word,doc_count", source);

  std::unordered_map<std::string, Eigen::Index> date_ix;
  for (std::size_t t = 0; t < calendar.size(); ++t) {
    date_ix[calendar[t]] = static_cast<Eigen::Index>(t);
  }
  struct Row {
    std::string word;
    Eigen::Index day;
    double count;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::set<std::string> words;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto f = split_csv_line(lines[ln]);
    if (f.size() != 3) fail(source, ln + 1, "expected 3 fields");
    if (!is_iso_date(f[0])) fail(source, ln + 1, "date '" + f[0] + "' is not YYYY-MM-DD");
    if (f[1].empty()) fail(source, ln + 1, "empty word");
    const double count = parse_double(f[2], where(source, ln + 1));
    if (!(count >= 0.0) || count != std::floor(count)) {
      fail(source, ln + 1, "doc_count must be a nonnegative integer");
    }
    words.insert(f[1]);
    const auto it = date_ix.find(f[0]);
    if (it == date_ix.end()) continue;  // not a trading day
    rows.push_back({f[1], it->second, count, ln + 1});
  }
  if (words.empty()) {
    log::warn(std::string(source) + " has no rows; all word intensities will be zero");
  }
  c.words = sorted_unique(words);
  std::unordered_map<std::string, Eigen::Index> word_ix;
  for (std::size_t j = 0; j < c.words.size(); ++j) {
    word_ix[c.words[j]] = static_cast<Eigen::Index>(j);
  }
  c.counts = Matrix::Zero(static_cast<Eigen::Index>(c.words.size()),
                          static_cast<Eigen::Index>(calendar.size()));
  std::vector<bool> seen(c.words.size() * calendar.size(), false);
  for (const Row& r : rows) {
    const Eigen::Index j = word_ix.at(r.word);
    const std::size_t key = static_cast<std::size_t>(j) * calendar.size() +
                            static_cast<std::size_t>(r.day);
    if (seen[key]) fail(source, r.line, "duplicate row for word " + r.word);
    seen[key] = true;
    c.counts(j, r.day) = r.count;
  }
  return c;
}

data::ArticleCounts read_counts_csv(const fs::path& path,
                                    const std::vector<std::string>& calendar) {
  return parse_counts_csv(read_text(path), calendar, path.string());
}

std::string format_counts_csv(const data::ArticleCounts& counts) {
  std::string out = "date,word,doc_count\n";
  for (Eigen::Index t = 0; t < counts.counts.cols(); ++t) {
    for (Eigen::Index j = 0; j < counts.counts.rows(); ++j) {
      out += counts.dates[static_cast<std::size_t>(t)] + "," +
             counts.words[static_cast<std::size_t>(j)] + "," +
             format_double(counts.counts(j, t)) + "\n";
    }
  }
  return out;
}

std::string format_matrix_csv(const LabeledMatrix& m) {
  if (static_cast<Eigen::Index>(m.row_labels.size()) != m.values.rows() ||
      static_cast<Eigen::Index>(m.col_labels.size()) != m.values.cols()) {
    throw DimensionError("matrix labels do not match its shape");
  }
  std::string out = m.corner;
  for (const auto& c : m.col_labels) out += "," + c;
  out += "\n";
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    out += m.row_labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) out += "," + format_double(m.values(i, j));
    out += "\n";
  }
  return out;
}

LabeledMatrix parse_matrix_csv(std::string_view text, std::string_view source) {
  const auto lines = lines_of(text);
  if (lines.empty() || trim(lines[0]).empty()) fail(source, 1, "missing header");
  LabeledMatrix m;
  auto header = split_csv_line(lines[0]);
  m.corner = header.front();
  m.col_labels.assign(header.begin() + 1, header.end());
  if (m.col_labels.size() == 1 && m.col_labels[0].empty()) m.col_labels.clear();

  std::vector<std::vector<double>> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto f = split_csv_line(lines[ln]);
    if (f.size() != m.col_labels.size() + 1) {
      fail(source, ln + 1, "row width does not match the header");
    }
    m.row_labels.push_back(f[0]);
    std::vector<double> row;
    row.reserve(m.col_labels.size());
    for (std::size_t j = 1; j < f.size(); ++j) row.push_back(parse_double(f[j], where(source, ln + 1)));
    rows.push_back(std::move(row));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(m.col_labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

LabeledMatrix read_matrix_csv(const fs::path& path) {
  return parse_matrix_csv(read_text(path), path.string());
}

Matrix mask_to_matrix(const data::Mask& mask) { return mask.cast<double>().matrix(); }

data::Mask matrix_to_mask(const Matrix& m) { return m.array() != 0.0; }

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

KeyValues parse_key_values(std::string_view text, std::string_view source) {
  KeyValues kv;
  const auto lines = lines_of(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string_view line = lines[ln];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where(source, ln + 1) + ": expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where(source, ln + 1) + ": empty key");
    kv[key] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

std::string format_report_csv(const std::vector<backtest::BacktestReport>& reports) {
  std::string out = "strategy,cumulative_return,worst_day,max_drawdown,cvar_5,sharpe\n";
  for (const auto& r : reports) {
    out += r.strategy + "," + format_double(r.cumulative_return) + "," +
           format_double(r.worst_day) + "," + format_double(r.max_drawdown) + "," +
           format_double(r.cvar_5) + "," + (r.sharpe ? format_double(*r.sharpe) : "--") + "\n";
  }
  return out;
}

std::vector<backtest::BacktestReport> parse_report_csv(std::string_view text,
                                                       std::string_view source) {
  const auto lines = lines_of(text);
  if (lines.empty() || trim(lines[0]).empty()) fail(source, 1, "missing header");
  expect_header(lines[0], "strategy,cumulative_return,worst_day,max_drawdown,cvar_5,sharpe",
                source);
  std::vector<backtest::BacktestReport> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto f = split_csv_line(lines[ln]);
    if (f.size() != 6) fail(source, ln + 1, "expected 6 fields");
    const std::string at = where(source, ln + 1);
    backtest::BacktestReport r;
    r.strategy = f[0];
    r.cumulative_return = parse_double(f[1], at);
    r.worst_day = parse_double(f[2], at);
    r.max_drawdown = parse_double(f[3], at);
    r.cvar_5 = parse_double(f[4], at);
    if (f[5] != "--") r.sharpe = parse_double(f[5], at);
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, double> read_level_series(const fs::path& path) {
  const std::string text = read_text(path);
  const std::string source = path.string();
  const auto lines = lines_of(text);
  if (lines.empty()) fail(source, 1, "missing header");
  expect_header(lines[0], "date,value", source);
  std::map<std::string, double> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto f = split_csv_line(lines[ln]);
    if (f.size() != 2) fail(source, ln + 1, "expected 2 fields");
    if (!is_iso_date(f[0])) fail(source, ln + 1, "date '" + f[0] + "' is not YYYY-MM-DD");
    const double v = parse_double(f[1], where(source, ln + 1));
    if (!(v > 0.0)) fail(source, ln + 1, "index level must be positive");
    out[f[0]] = v;
  }
  return out;
}

OutputTransaction::OutputTransaction(fs::path directory) : dir_(std::move(directory)) {}

void OutputTransaction::stage(const std::string& name, std::string content) {
  files_.emplace_back(name, std::move(content));
}

void OutputTransaction::commit() {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_.string());

  std::vector<fs::path> temps;
  auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [name, content] : files_) {
    const fs::path tmp = dir_ / ("." + name + ".tmp");
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    temps.push_back(tmp);
    out << content;
    out.close();
    if (!out) {
      cleanup();
      throw ConfigError("cannot write " + tmp.string());
    }
  }
  for (std::size_t k = 0; k < files_.size(); ++k) {
    fs::rename(temps[k], dir_ / files_[k].first, ec);
    if (ec) {
      cleanup();
      throw ConfigError("cannot publish " + (dir_ / files_[k].first).string());
    }
  }
  files_.clear();
}

DirectoryLock::DirectoryLock(const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  path_ = directory / ".newsfactor.lock";
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (f == nullptr) {
    const fs::path held = path_;
    path_.clear();
    throw ConfigError("output directory is locked by another run: " + held.string());
  }
  std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
  if (!path_.empty()) {
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

}  // namespace newsfactor::io
