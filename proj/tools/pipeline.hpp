#pragma once

// Pipeline stages behind the newsfactor command-line tool. Every stage reads
// its inputs, computes all outputs in memory and publishes them atomically,
// so a failed run leaves the output directory as it was.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "newsfactor/admm.hpp"
#include "newsfactor/data.hpp"
#include "newsfactor/io.hpp"

namespace newsfactor::cli {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path prices;     // raw prices CSV (prepare)
  fs::path counts;     // raw article counts CSV (prepare)
  fs::path data_dir;   // prepared dataset; defaults to out
  fs::path model_dir;  // trained model; defaults to out
  fs::path out;
  fs::path reference;  // optional index levels for the backtest

  admm::SolverConfig solver;
  int window = data::kDefaultWindow;
  double z_threshold = data::kDefaultZThreshold;
  data::ThresholdMode threshold_mode = data::ThresholdMode::kAtLeastThreshold;
  std::optional<std::pair<int, int>> split;  // last train day, last validation day
  std::string range = "test";                // train, validation, test or all
  bool baselines = true;
  double capital = 1.0;

  data::SyntheticSpec synth;  // synth command only

  fs::path data_path() const { return data_dir.empty() ? out : data_dir; }
  fs::path model_path() const { return model_dir.empty() ? out : model_dir; }
};

/// Sets one option by its flag name without dashes ("lambda", "max-iters",
/// "split", ...). Throws ConfigError for unknown keys or malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Applies every pair of a key=value config file.
void apply_config_file(RunConfig& cfg, const fs::path& path);

/// Writes prices.csv and counts.csv drawn from the synthetic generator.
void cmd_synth(const RunConfig& cfg);

/// Raw CSVs -> returns.csv, mask.csv, intensity.csv, counts.csv, open.csv,
/// close.csv, present.csv and dataset.meta.
void cmd_prepare(const RunConfig& cfg);

/// Fits the factor model on the training days -> u.csv, w.csv, model.meta,
/// history.csv.
void cmd_train(const RunConfig& cfg);

/// predictions.csv for the selected range plus accuracy.csv comparing the
/// model against the baselines.
void cmd_predict(const RunConfig& cfg);

/// report.csv and values.csv for the signal strategy and the portfolio
/// baselines over the selected range.
void cmd_backtest(const RunConfig& cfg);

/// Plot-ready tables: w_heatmap.csv, u_adjacency.csv, stock_accuracy.csv,
/// cumulative_returns.csv.
void cmd_report(const RunConfig& cfg);

/// Parses argv, runs the chosen command and maps failures onto exit codes
/// (0 ok, 2 config, 3 data, 4 numerical).
int run(int argc, const char* const* argv);

}  // namespace newsfactor::cli
