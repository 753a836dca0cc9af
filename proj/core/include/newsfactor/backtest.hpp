#pragma once

// Daily trading simulation and performance metrics. Price matrices are
// stocks x days over the evaluation window; `present` marks days with both an
// open and a close for the stock. No shorting, leverage, costs or dividends.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newsfactor/baselines.hpp"
#include "newsfactor/data.hpp"

namespace newsfactor::backtest {

using Matrix = Eigen::MatrixXd;
using data::Mask;

struct Allocation {
  Eigen::Index stock = 0;
  double amount = 0.0;  // capital committed at the open
};

struct LedgerDay {
  double open_capital = 0.0;
  std::vector<Allocation> allocations;
  double close_capital = 0.0;
};

struct TradeLedger {
  double initial_capital = 1.0;
  std::vector<LedgerDay> days;

  /// initial capital followed by each day's close capital
  std::vector<double> values() const;
  /// simple return of each day relative to the previous value
  std::vector<double> daily_returns() const;
};

/// Each day, splits capital equally across stocks flagged up, buys at the
/// open and sells at the close. With nothing to buy the capital is held as
/// cash. Up-flagged stocks without prices that day are skipped with a warning.
TradeLedger run_signal_strategy(const Mask& up, const Matrix& open, const Matrix& close,
                                const Mask& present, double initial_capital = 1.0);

/// Buys the portfolio at the first day's open and holds it; positions are
/// marked at each close (last known close when a price is missing).
TradeLedger run_bah(const baselines::Portfolio& portfolio, const Matrix& open,
                    const Matrix& close, const Mask& present,
                    double initial_capital = 1.0);

/// Buys at the first open like run_bah, then trades back to the target
/// weights at every close. Trading only happens when holdings have drifted
/// from the targets.
TradeLedger run_cbal(const baselines::Portfolio& portfolio, const Matrix& open,
                     const Matrix& close, const Mask& present,
                     double initial_capital = 1.0);

/// min_t (v_t - v_{t-1}) / v_{t-1}
double worst_day(std::span<const double> values);

/// max_t (peak up to t - v_t) / peak up to t
double max_drawdown(std::span<const double> values);

/// Mean of the ceil(0.05 T) lowest daily returns.
double cvar_5(std::span<const double> returns);

/// mean(r - ref) / sample stdev(r - ref). Throws UndefinedMetricError when the
/// excess series has (numerically) zero spread or fewer than two days.
double sharpe_vs_reference(std::span<const double> returns,
                           std::span<const double> reference);

struct BacktestReport {
  std::string strategy;
  double cumulative_return = 1.0;
  double worst_day = 0.0;
  double max_drawdown = 0.0;
  double cvar_5 = 0.0;
  std::optional<double> sharpe;  // empty when undefined
  std::vector<double> values;
};

/// Assembles the five metrics. With no reference returns the Sharpe ratio is
/// taken against a zero reference.
BacktestReport build_report(std::string strategy, const TradeLedger& ledger,
                            std::optional<std::span<const double>> reference = std::nullopt);

/// Report for a series of index levels (first entry is the level before the
/// first day).
BacktestReport build_index_report(std::string strategy, std::span<const double> levels,
                                  std::optional<std::span<const double>> reference);

/// Simple returns of a level series.
std::vector<double> simple_returns(std::span<const double> levels);

}  // namespace newsfactor::backtest
