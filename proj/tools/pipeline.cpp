#include "pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "newsfactor/backtest.hpp"
#include "newsfactor/baselines.hpp"
#include "newsfactor/error.hpp"
#include "newsfactor/log.hpp"
#include "newsfactor/predict.hpp"

namespace newsfactor::cli {
namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using data::DayRange;
using data::Mask;

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("--" + key + ": '" + text + "' is not an integer");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    return io::parse_double(text, "--" + key);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "off" || text == "no") return false;
  throw ConfigError("--" + key + ": '" + text + "' is not a boolean");
}

void require_out(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("--out is required");
}

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path is not set");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError(what + " not found: " + path.string());
}

std::vector<std::string> factor_labels(Eigen::Index d) {
  std::vector<std::string> out;
  for (Eigen::Index k = 1; k <= d; ++k) out.push_back("f" + std::to_string(k));
  return out;
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

std::string threshold_mode_name(data::ThresholdMode m) {
  return m == data::ThresholdMode::kClipNegative ? "clip" : "at-least";
}

// Prepared dataset. Price matrices cover days 0..s, everything else days 1..s.
struct Dataset {
  std::vector<std::string> tickers;
  std::vector<std::string> words;
  std::vector<std::string> price_dates;
  Matrix returns;
  Mask mask;
  Matrix intensity;
  Matrix counts;
  Matrix open;
  Matrix close;
  Mask present;

  int days() const { return static_cast<int>(returns.cols()); }
  const std::string& date_of(int day) const {
    return price_dates[static_cast<std::size_t>(day)];
  }
};

const char* const kDatasetFiles[] = {"returns.csv", "mask.csv",  "intensity.csv",
                                     "counts.csv",  "open.csv",  "close.csv",
                                     "present.csv"};

io::LabeledMatrix read_checked(const fs::path& dir, const char* name,
                               const std::vector<std::string>& rows,
                               const std::vector<std::string>& cols) {
  io::LabeledMatrix m = io::read_matrix_csv(dir / name);
  if (m.row_labels != rows || m.col_labels != cols) {
    throw DataError((dir / name).string() + ": labels do not match returns.csv");
  }
  return m;
}

Dataset load_dataset(const fs::path& dir) {
  for (const char* f : kDatasetFiles) require_file(dir / f, "prepared dataset file");
  Dataset ds;
  io::LabeledMatrix r = io::read_matrix_csv(dir / "returns.csv");
  io::LabeledMatrix close = io::read_matrix_csv(dir / "close.csv");
  ds.tickers = r.row_labels;
  ds.price_dates = close.col_labels;
  if (close.row_labels != ds.tickers || ds.price_dates.size() != r.col_labels.size() + 1 ||
      !std::equal(r.col_labels.begin(), r.col_labels.end(), ds.price_dates.begin() + 1)) {
    throw DataError(dir.string() + ": returns.csv and close.csv calendars differ");
  }
  ds.returns = std::move(r.values);
  ds.close = std::move(close.values);
  const auto& return_dates = r.col_labels;
  ds.mask = io::matrix_to_mask(read_checked(dir, "mask.csv", ds.tickers, return_dates).values);
  io::LabeledMatrix y = io::read_matrix_csv(dir / "intensity.csv");
  if (y.col_labels != return_dates) {
    throw DataError(dir.string() + ": intensity.csv calendar differs from returns.csv");
  }
  ds.words = y.row_labels;
  ds.intensity = std::move(y.values);
  ds.counts = read_checked(dir, "counts.csv", ds.words, return_dates).values;
  ds.open = read_checked(dir, "open.csv", ds.tickers, ds.price_dates).values;
  ds.present =
      io::matrix_to_mask(read_checked(dir, "present.csv", ds.tickers, ds.price_dates).values);
  return ds;
}

admm::FactorModel load_model(const fs::path& dir, const Dataset& ds) {
  require_file(dir / "u.csv", "model file");
  require_file(dir / "w.csv", "model file");
  io::LabeledMatrix u = io::read_matrix_csv(dir / "u.csv");
  io::LabeledMatrix w = io::read_matrix_csv(dir / "w.csv");
  if (u.row_labels != ds.tickers) throw DataError("u.csv tickers differ from the dataset");
  if (w.col_labels != ds.words) throw DataError("w.csv words differ from the dataset");
  if (u.values.cols() != w.values.rows() || u.values.cols() < 1) {
    throw DataError("u.csv and w.csv disagree on the factor count");
  }
  return {std::move(u.values), std::move(w.values)};
}

io::KeyValues load_model_meta(const fs::path& dir) {
  require_file(dir / "model.meta", "model metadata");
  return io::parse_key_values(io::read_text(dir / "model.meta"), (dir / "model.meta").string());
}

data::Split resolve_split(const RunConfig& cfg, int days, const io::KeyValues* model_meta) {
  if (cfg.split) return data::make_split(days, cfg.split->first, cfg.split->second);
  if (model_meta != nullptr && model_meta->count("split")) {
    RunConfig tmp;
    apply_setting(tmp, "split", model_meta->at("split"));
    return data::make_split(days, tmp.split->first, tmp.split->second);
  }
  return data::make_split(days, static_cast<int>(0.7 * days), static_cast<int>(0.85 * days));
}

DayRange resolve_range(const std::string& name, const data::Split& split, int days) {
  DayRange r;
  if (name == "train") {
    r = split.train;
  } else if (name == "validation") {
    r = split.validation;
  } else if (name == "test") {
    r = split.test;
  } else if (name == "all") {
    r = {1, days};
  } else {
    throw ConfigError("--range must be train, validation, test or all");
  }
  if (r.empty()) throw ConfigError("the " + name + " range is empty under the current split");
  return r;
}

Matrix price_columns(const Matrix& m, const DayRange& r) {
  return m.middleCols(r.first, r.size());
}

Mask mask_columns(const Mask& m, Eigen::Index first, Eigen::Index count) {
  return m.middleCols(first, count);
}

// Missing closes carry the last known price; a leading gap takes the first one.
Matrix filled_close(const Dataset& ds) {
  Matrix out = ds.close;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Eigen::Index first = 0;
    while (first < out.cols() && !ds.present(i, first)) ++first;
    if (first == out.cols()) continue;
    for (Eigen::Index t = 0; t < first; ++t) out(i, t) = ds.close(i, first);
    for (Eigen::Index t = first + 1; t < out.cols(); ++t) {
      if (!ds.present(i, t)) out(i, t) = out(i, t - 1);
    }
  }
  return out;
}

// Model predictions over a range of days, one column per day.
struct RangeForecast {
  DayRange range;
  Matrix r_hat;
  Matrix actual;
  Mask scorable;
};

RangeForecast forecast(const admm::FactorModel& model, const Dataset& ds, const DayRange& r) {
  RangeForecast f;
  f.range = r;
  f.r_hat = predict::predict_return_matrix(model, data::day_columns(ds.intensity, r));
  f.actual = data::day_columns(ds.returns, r);
  f.scorable = mask_columns(ds.mask, r.first - 1, r.size());
  return f;
}

std::string format_accuracy(const Matrix& pred, const RangeForecast& f) {
  try {
    return io::format_double(predict::directional_accuracy(pred, f.actual, f.scorable));
  } catch (const UndefinedMetricError&) {
    return "--";
  }
}

std::vector<std::pair<std::string, std::string>> baseline_accuracies(
    const Dataset& ds, const data::Split& split, const RangeForecast& f) {
  std::vector<std::pair<std::string, std::string>> out;
  const DayRange& r = f.range;
  const Eigen::Index n = ds.returns.rows();
  const Eigen::Index T = r.size();
  const Matrix close = filled_close(ds);

  // Previous X predicts no change, which the tie rule scores as down.
  const Matrix prev_x = baselines::previous_x(close);
  Matrix pred = price_columns(prev_x, {r.first - 1, r.last - 1}) -
                price_columns(close, {r.first - 1, r.last - 1});
  out.emplace_back("previous_x", format_accuracy(pred, f));

  pred = data::day_columns(baselines::previous_r(ds.returns), r);
  out.emplace_back("previous_r", format_accuracy(pred, f));

  const int p = baselines::kDefaultArOrder;
  const int train_prices = split.train.last + 1;
  if (train_prices >= 2 * p + 1 && split.train.size() >= 2 * p + 1) {
    Matrix ar_x(n, T);
    Matrix ar_r(n, T);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector cx = close.row(i).transpose();
      const Vector rx = ds.returns.row(i).transpose();
      const auto mx = baselines::ar_fit(std::span<const double>(cx.data(), train_prices), p);
      const auto mr = baselines::ar_fit(
          std::span<const double>(rx.data(), static_cast<std::size_t>(split.train.size())), p);
      for (int t = r.first; t <= r.last; ++t) {
        // Too little price history predicts no change.
        ar_x(i, t - r.first) =
            t >= p ? baselines::ar_predict(mx, std::span<const double>(
                                                   cx.data(), static_cast<std::size_t>(t))) -
                         cx(t - 1)
                   : 0.0;
        // Returns history covers days 1..t-1.
        const auto known = static_cast<std::size_t>(t - 1);
        ar_r(i, t - r.first) =
            known >= static_cast<std::size_t>(p)
                ? baselines::ar_predict(mr, std::span<const double>(rx.data(), known))
                : 0.0;
      }
    }
    out.emplace_back("ar_x", format_accuracy(ar_x, f));
    out.emplace_back("ar_r", format_accuracy(ar_r, f));
  } else {
    log::warn("training range too short for AR(10) baselines; skipped");
  }

  if (split.train.size() >= 2) {
    const Matrix x_train = close.leftCols(train_prices);
    const Matrix x_val = split.validation.empty()
                             ? Matrix(n, 0)
                             : close.middleCols(split.validation.first - 1,
                                                split.validation.size() + 1);
    const auto cx = baselines::cross_regress(x_train, x_val);
    Matrix cross_x(n, T);
    for (int t = r.first; t <= r.last; ++t) {
      const Vector prev = close.col(t - 1);
      cross_x.col(t - r.first) = cx.predict(prev) - prev;
    }
    out.emplace_back("cross_x", format_accuracy(cross_x, f));

    const Matrix r_train = data::day_columns(ds.returns, split.train);
    Matrix r_val(n, 0);
    if (!split.validation.empty()) {
      const int first = std::max(1, split.validation.first - 1);
      r_val = data::day_columns(ds.returns, {first, split.validation.last});
    }
    const auto cr = baselines::cross_regress(r_train, r_val);
    Matrix cross_r(n, T);
    for (int t = r.first; t <= r.last; ++t) {
      const Vector prev = t >= 2 ? Vector(ds.returns.col(t - 2)) : Vector::Zero(n);
      cross_r.col(t - r.first) = cr.predict(prev);
    }
    out.emplace_back("cross_r", format_accuracy(cross_r, f));
  } else {
    log::warn("training range too short for cross-sectional baselines; skipped");
  }
  return out;
}

struct Backtests {
  std::vector<backtest::BacktestReport> reports;
  std::vector<std::string> dates;  // one per value, starting the day before the range
};

Backtests run_backtests(const RunConfig& cfg, const Dataset& ds, const data::Split& split,
                        const RangeForecast& f) {
  const DayRange& r = f.range;
  Backtests out;
  for (int t = r.first - 1; t <= r.last; ++t) out.dates.push_back(ds.date_of(t));

  std::optional<std::vector<double>> reference_returns;
  std::vector<double> reference_levels;
  if (!cfg.reference.empty()) {
    const auto levels = io::read_level_series(cfg.reference);
    for (const auto& date : out.dates) {
      const auto it = levels.find(date);
      if (it == levels.end()) {
        throw DataError(cfg.reference.string() + ": no index level for " + date);
      }
      reference_levels.push_back(it->second);
    }
    reference_returns = backtest::simple_returns(reference_levels);
  }
  std::optional<std::span<const double>> ref;
  if (reference_returns) ref = std::span<const double>(*reference_returns);

  const Matrix open = price_columns(ds.open, r);
  const Matrix close = price_columns(ds.close, r);
  const Mask present = mask_columns(ds.present, r.first, r.size());
  const Mask up = f.scorable && (f.r_hat.array() > 0.0);

  out.reports.push_back(backtest::build_report(
      "ours", backtest::run_signal_strategy(up, open, close, present, cfg.capital), ref));
  if (cfg.baselines) {
    const auto uniform = baselines::uniform_portfolio(ds.returns.rows());
    out.reports.push_back(backtest::build_report(
        "U-BAH", backtest::run_bah(uniform, open, close, present, cfg.capital), ref));
    out.reports.push_back(backtest::build_report(
        "U-CBAL", backtest::run_cbal(uniform, open, close, present, cfg.capital), ref));
    const auto mvp = baselines::min_variance_portfolio(data::day_columns(ds.returns, split.train));
    out.reports.push_back(backtest::build_report(
        "MVP-BAH", backtest::run_bah(mvp, open, close, present, cfg.capital), ref));
    out.reports.push_back(backtest::build_report(
        "MVP-CBAL", backtest::run_cbal(mvp, open, close, present, cfg.capital), ref));
  }
  if (ref) {
    out.reports.push_back(backtest::build_index_report("reference", reference_levels, ref));
  }
  return out;
}

// Everything the predict, backtest and report stages share.
struct Evaluation {
  Dataset ds;
  admm::FactorModel model;
  data::Split split;
  RangeForecast forecast;
};

Evaluation evaluate(const RunConfig& cfg) {
  Evaluation e;
  e.ds = load_dataset(cfg.data_path());
  const io::KeyValues meta = load_model_meta(cfg.model_path());
  e.model = load_model(cfg.model_path(), e.ds);
  e.split = resolve_split(cfg, e.ds.days(), &meta);
  const DayRange r = resolve_range(cfg.range, e.split, e.ds.days());
  e.forecast = forecast(e.model, e.ds, r);
  return e;
}

void require_inputs_for_evaluation(const RunConfig& cfg) {
  require_out(cfg);
  for (const char* f : kDatasetFiles) require_file(cfg.data_path() / f, "prepared dataset file");
  for (const char* f : {"u.csv", "w.csv", "model.meta"}) {
    require_file(cfg.model_path() / f, "model file");
  }
  if (!cfg.reference.empty()) require_file(cfg.reference, "reference index");
}

std::string values_csv(const Backtests& b, bool normalized) {
  std::string out = normalized ? "date,strategy,cumulative_return\n" : "date,strategy,value\n";
  for (const auto& rep : b.reports) {
    for (std::size_t k = 0; k < rep.values.size(); ++k) {
      const double v = normalized ? rep.values[k] / rep.values.front() : rep.values[k];
      out += b.dates[k] + "," + rep.strategy + "," + io::format_double(v) + "\n";
    }
  }
  return out;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "prices") {
    cfg.prices = value;
  } else if (key == "counts") {
    cfg.counts = value;
  } else if (key == "data") {
    cfg.data_dir = value;
  } else if (key == "model") {
    cfg.model_dir = value;
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "reference") {
    cfg.reference = value;
  } else if (key == "seed") {
    cfg.solver.seed = parse_integer<std::uint64_t>(key, value);
    cfg.synth.seed = cfg.solver.seed;
  } else if (key == "d") {
    cfg.solver.d = parse_integer<int>(key, value);
  } else if (key == "lambda") {
    cfg.solver.lambda = parse_real(key, value);
  } else if (key == "mu") {
    cfg.solver.mu = parse_real(key, value);
  } else if (key == "rho") {
    cfg.solver.rho = parse_real(key, value);
  } else if (key == "max-iters") {
    cfg.solver.max_iters = parse_integer<int>(key, value);
  } else if (key == "tol") {
    cfg.solver.tol_primal = parse_real(key, value);
  } else if (key == "window") {
    cfg.window = parse_integer<int>(key, value);
  } else if (key == "z-threshold") {
    cfg.z_threshold = parse_real(key, value);
  } else if (key == "threshold-mode") {
    if (value == "at-least") {
      cfg.threshold_mode = data::ThresholdMode::kAtLeastThreshold;
    } else if (value == "clip") {
      cfg.threshold_mode = data::ThresholdMode::kClipNegative;
    } else {
      throw ConfigError("--threshold-mode must be at-least or clip");
    }
  } else if (key == "split") {
    const auto comma = value.find(',');
    if (comma == std::string::npos) throw ConfigError("--split expects A,B");
    cfg.split = std::make_pair(parse_integer<int>(key, value.substr(0, comma)),
                               parse_integer<int>(key, value.substr(comma + 1)));
  } else if (key == "range") {
    cfg.range = value;
  } else if (key == "baselines") {
    cfg.baselines = parse_bool(key, value);
  } else if (key == "capital") {
    cfg.capital = parse_real(key, value);
    if (!(cfg.capital > 0.0)) throw ConfigError("--capital must be positive");
  } else if (key == "stocks") {
    cfg.synth.stocks = parse_integer<int>(key, value);
  } else if (key == "words") {
    cfg.synth.words = parse_integer<int>(key, value);
  } else if (key == "days") {
    cfg.synth.days = parse_integer<int>(key, value);
  } else if (key == "factors") {
    cfg.synth.factors = parse_integer<int>(key, value);
  } else if (key == "sparsity") {
    cfg.synth.sparsity = parse_real(key, value);
  } else if (key == "noise") {
    cfg.synth.noise_sigma = parse_real(key, value);
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  require_file(path, "config file");
  const io::KeyValues kv = io::parse_key_values(io::read_text(path), path.string());
  for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
}

void cmd_synth(const RunConfig& cfg) {
  require_out(cfg);
  io::DirectoryLock lock(cfg.out);
  const auto corpus = data::generate_synthetic_corpus(cfg.synth, cfg.window, cfg.z_threshold);
  io::OutputTransaction tx(cfg.out);
  tx.stage("prices.csv", io::format_prices_csv(corpus.prices));
  tx.stage("counts.csv", io::format_counts_csv(corpus.counts));
  io::LabeledMatrix u{"ticker", corpus.prices.tickers, factor_labels(corpus.truth.factors()),
                      corpus.truth.u};
  io::LabeledMatrix w{"factor", factor_labels(corpus.truth.factors()), corpus.counts.words,
                      corpus.truth.w};
  tx.stage("true_u.csv", io::format_matrix_csv(u));
  tx.stage("true_w.csv", io::format_matrix_csv(w));
  tx.commit();
}

void cmd_prepare(const RunConfig& cfg) {
  require_out(cfg);
  require_file(cfg.prices, "prices CSV");
  require_file(cfg.counts, "counts CSV");
  io::DirectoryLock lock(cfg.out);

  const data::PriceSeries prices = io::read_prices_csv(cfg.prices);
  const data::ReturnsMatrix r = data::compute_log_returns(prices);
  const data::ArticleCounts counts = io::read_counts_csv(cfg.counts, prices.dates);
  const data::WordIntensityMatrix y =
      data::compute_word_intensity(counts, cfg.window, cfg.z_threshold, cfg.threshold_mode);
  const Eigen::Index s = r.values.cols();

  io::OutputTransaction tx(cfg.out);
  tx.stage("returns.csv", io::format_matrix_csv({"ticker", r.tickers, r.dates, r.values}));
  tx.stage("mask.csv",
           io::format_matrix_csv({"ticker", r.tickers, r.dates, io::mask_to_matrix(r.mask)}));
  tx.stage("intensity.csv",
           io::format_matrix_csv({"word", y.words, r.dates, y.values.rightCols(s)}));
  tx.stage("counts.csv",
           io::format_matrix_csv({"word", counts.words, r.dates, counts.counts.rightCols(s)}));
  tx.stage("open.csv", io::format_matrix_csv({"ticker", prices.tickers, prices.dates, prices.open}));
  tx.stage("close.csv",
           io::format_matrix_csv({"ticker", prices.tickers, prices.dates, prices.close}));
  tx.stage("present.csv", io::format_matrix_csv({"ticker", prices.tickers, prices.dates,
                                                 io::mask_to_matrix(prices.present)}));
  io::KeyValues meta;
  meta["window"] = std::to_string(cfg.window);
  meta["z_threshold"] = io::format_double(cfg.z_threshold);
  meta["threshold_mode"] = threshold_mode_name(cfg.threshold_mode);
  meta["stocks"] = std::to_string(r.values.rows());
  meta["words"] = std::to_string(y.values.rows());
  meta["days"] = std::to_string(s);
  tx.stage("dataset.meta", io::format_key_values(meta));
  tx.commit();
}

void cmd_train(const RunConfig& cfg) {
  require_out(cfg);
  for (const char* f : kDatasetFiles) require_file(cfg.data_path() / f, "prepared dataset file");
  cfg.solver.validate();
  io::DirectoryLock lock(cfg.out);

  const Dataset ds = load_dataset(cfg.data_path());
  const data::Split split = resolve_split(cfg, ds.days(), nullptr);
  if (split.train.empty()) throw ConfigError("the training range is empty");
  const admm::FitResult fit =
      admm::fit(data::day_columns(ds.returns, split.train),
                data::day_columns(ds.intensity, split.train), cfg.solver);
  if (!fit.state.converged) {
    log::warn("ADMM stopped at the iteration cap before reaching the tolerance");
  }

  io::OutputTransaction tx(cfg.out);
  const auto factors = factor_labels(cfg.solver.d);
  tx.stage("u.csv", io::format_matrix_csv({"ticker", ds.tickers, factors, fit.model.u}));
  tx.stage("w.csv", io::format_matrix_csv({"factor", factors, ds.words, fit.model.w}));

  io::KeyValues meta;
  meta["d"] = std::to_string(cfg.solver.d);
  meta["lambda"] = io::format_double(cfg.solver.lambda);
  meta["mu"] = io::format_double(cfg.solver.mu);
  meta["rho"] = io::format_double(cfg.solver.rho);
  meta["seed"] = std::to_string(cfg.solver.seed);
  meta["max_iters"] = std::to_string(cfg.solver.max_iters);
  meta["tol"] = io::format_double(cfg.solver.tol_primal);
  meta["split"] = std::to_string(split.train.last) + "," + std::to_string(split.validation.last);
  meta["train_first"] = ds.date_of(split.train.first);
  meta["train_last"] = ds.date_of(split.train.last);
  meta["iterations"] = std::to_string(fit.state.iter);
  meta["converged"] = fit.state.converged ? "true" : "false";
  tx.stage("model.meta", io::format_key_values(meta));

  std::string history = "iter,objective,primal_a,primal_b,change_u,change_w\n";
  for (const auto& rec : fit.state.history) {
    history += std::to_string(rec.iter) + "," + io::format_double(rec.objective) + "," +
               io::format_double(rec.primal_a) + "," + io::format_double(rec.primal_b) + "," +
               io::format_double(rec.change_u) + "," + io::format_double(rec.change_w) + "\n";
  }
  tx.stage("history.csv", std::move(history));
  tx.commit();
}

void cmd_predict(const RunConfig& cfg) {
  require_inputs_for_evaluation(cfg);
  io::DirectoryLock lock(cfg.out);
  const Evaluation e = evaluate(cfg);
  const RangeForecast& f = e.forecast;

  std::string rows = "date,ticker,r_hat,x_hat,direction\n";
  for (int t = f.range.first; t <= f.range.last; ++t) {
    const Eigen::Index col = t - f.range.first;
    for (Eigen::Index i = 0; i < f.r_hat.rows(); ++i) {
      if (!f.scorable(i, col)) continue;
      const double r_hat = f.r_hat(i, col);
      const double x_hat = e.ds.close(i, t - 1) * std::exp(r_hat);
      rows += e.ds.date_of(t) + "," + e.ds.tickers[static_cast<std::size_t>(i)] + "," +
              io::format_double(r_hat) + "," + io::format_double(x_hat) + "," +
              predict::to_string(predict::direction_of(r_hat)) + "\n";
    }
  }

  std::string accuracy = "method,accuracy\n";
  accuracy += "ours," + format_accuracy(f.r_hat, f) + "\n";
  if (cfg.baselines) {
    for (const auto& [name, value] : baseline_accuracies(e.ds, e.split, f)) {
      accuracy += name + "," + value + "\n";
    }
  }

  io::OutputTransaction tx(cfg.out);
  tx.stage("predictions.csv", std::move(rows));
  tx.stage("accuracy.csv", std::move(accuracy));
  tx.commit();
}

void cmd_backtest(const RunConfig& cfg) {
  require_inputs_for_evaluation(cfg);
  io::DirectoryLock lock(cfg.out);
  const Evaluation e = evaluate(cfg);
  const Backtests b = run_backtests(cfg, e.ds, e.split, e.forecast);

  io::OutputTransaction tx(cfg.out);
  tx.stage("report.csv", io::format_report_csv(b.reports));
  tx.stage("values.csv", values_csv(b, false));
  tx.commit();
}

void cmd_report(const RunConfig& cfg) {
  require_inputs_for_evaluation(cfg);
  io::DirectoryLock lock(cfg.out);
  const Evaluation e = evaluate(cfg);
  const Dataset& ds = e.ds;
  const auto factors = factor_labels(e.model.factors());

  io::OutputTransaction tx(cfg.out);
  tx.stage("w_heatmap.csv", io::format_matrix_csv({"factor", factors, ds.words, e.model.w}));
  tx.stage("u_adjacency.csv",
           io::format_matrix_csv({"ticker", ds.tickers, ds.tickers,
                                  predict::correlation_distance_matrix(e.model.u)}));

  const RangeForecast& f = e.forecast;
  const Vector acc = predict::per_stock_accuracy(f.r_hat, f.actual, f.scorable);
  std::map<std::string, Eigen::Index> word_ix;
  for (std::size_t j = 0; j < ds.words.size(); ++j) {
    word_ix[ds.words[j]] = static_cast<Eigen::Index>(j);
  }
  std::string table = "ticker,mentions,accuracy,scored_days\n";
  for (Eigen::Index i = 0; i < acc.size(); ++i) {
    const std::string& ticker = ds.tickers[static_cast<std::size_t>(i)];
    const auto it = word_ix.find(lowercase(ticker));
    const double mentions = it == word_ix.end() ? 0.0 : ds.counts.row(it->second).sum();
    Eigen::Index scored = 0;
    for (Eigen::Index t = 0; t < f.actual.cols(); ++t) {
      if (f.scorable(i, t) && f.actual(i, t) != 0.0) ++scored;
    }
    table += ticker + "," + io::format_double(mentions) + "," +
             (std::isnan(acc(i)) ? std::string("--") : io::format_double(acc(i))) + "," +
             std::to_string(scored) + "\n";
  }
  tx.stage("stock_accuracy.csv", std::move(table));
  tx.stage("cumulative_returns.csv",
           values_csv(run_backtests(cfg, ds, e.split, f), true));
  tx.commit();
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Sparse news-factor model for daily stock returns"};
  app.require_subcommand(1);
  app.fallthrough();

  struct Flag {
    const char* key;
    const char* help;
  };
  const Flag flags[] = {
      {"prices", "raw prices CSV (date,ticker,open,close)"},
      {"counts", "raw article counts CSV (date,word,doc_count)"},
      {"data", "prepared dataset directory (default: --out)"},
      {"model", "trained model directory (default: --out)"},
      {"out", "output directory"},
      {"reference", "index levels CSV (date,value) for the Sharpe ratio"},
      {"seed", "random seed"},
      {"d", "latent factor count"},
      {"lambda", "group lasso weight"},
      {"mu", "elementwise lasso weight"},
      {"rho", "ADMM penalty"},
      {"max-iters", "ADMM iteration cap"},
      {"tol", "relative tolerance on primal residuals and iterate changes"},
      {"window", "z-score window in trading days"},
      {"z-threshold", "minimum z-score kept"},
      {"threshold-mode", "at-least (keep z >= threshold) or clip (keep max(z, 0))"},
      {"split", "last training day and last validation day, A,B"},
      {"range", "days to evaluate: train, validation, test or all"},
      {"capital", "initial capital for backtests"},
      {"stocks", "synth: stock count"},
      {"words", "synth: word count"},
      {"days", "synth: return days"},
      {"factors", "synth: true factor count"},
      {"sparsity", "synth: fraction of zero word columns"},
      {"noise", "synth: return noise stdev"},
  };
  std::map<std::string, std::string> values;
  std::string config_path;
  bool no_baselines = false;
  app.add_option("--config", config_path, "key=value config file; flags take precedence");
  for (const Flag& f : flags) {
    app.add_option(std::string("--") + f.key, values[f.key], f.help);
  }
  app.add_flag("--no-baselines", no_baselines, "skip baseline predictors and portfolios");

  using Command = void (*)(const RunConfig&);
  const std::pair<const char*, Command> commands[] = {
      {"synth", cmd_synth},       {"prepare", cmd_prepare},   {"train", cmd_train},
      {"predict", cmd_predict},   {"backtest", cmd_backtest}, {"report", cmd_report},
  };
  const char* const descriptions[] = {
      "write a synthetic prices/counts corpus",
      "compute returns and word intensities from raw CSVs",
      "fit the factor model on the training days",
      "predict returns and score directional accuracy",
      "simulate the trading strategy and portfolio baselines",
      "emit plot-ready tables",
  };
  std::vector<CLI::App*> subs;
  for (std::size_t k = 0; k < std::size(commands); ++k) {
    subs.push_back(app.add_subcommand(commands[k].first, descriptions[k]));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kConfig);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const Flag& f : flags) {
      if (app.count(std::string("--") + f.key) > 0) apply_setting(cfg, f.key, values[f.key]);
    }
    if (no_baselines) cfg.baselines = false;
    for (std::size_t k = 0; k < subs.size(); ++k) {
      if (subs[k]->parsed()) commands[k].second(cfg);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kConfig);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace newsfactor::cli
