#include "newsfactor/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "newsfactor/error.hpp"
#include "newsfactor/log.hpp"

namespace newsfactor::backtest {
namespace {

void require_prices(const Matrix& open, const Matrix& close, const Mask& present) {
  if (open.rows() != close.rows() || open.cols() != close.cols() ||
      present.rows() != close.rows() || present.cols() != close.cols()) {
    throw DimensionError("backtest: open, close and mask shapes differ");
  }
}

void require_portfolio(const baselines::Portfolio& p, Eigen::Index n) {
  if (p.weights.size() != n) throw DimensionError("portfolio size does not match prices");
  if ((p.weights.array() < 0.0).any()) throw DataError("portfolio weights must be nonnegative");
  const double total = p.weights.sum();
  if (total > 1.0 + 1e-10) throw DataError("portfolio weights sum above 1");
}

void warn_missing(const char* who, Eigen::Index stock, Eigen::Index day) {
  std::ostringstream msg;
  msg << who << ": no price for stock " << stock << " on day " << day
      << ", skipped";
  log::warn(msg.str());
}

// Holdings of a fixed-weight portfolio. Shares are bought at the first open.
struct Book {
  Eigen::VectorXd shares;
  Eigen::VectorXd mark;  // last known price per stock
  double cash = 0.0;

  double value() const { return cash + shares.dot(mark); }
};

Book open_book(const baselines::Portfolio& p, const Matrix& open, const Mask& present,
               double capital, const char* who) {
  const Eigen::Index n = open.rows();
  Book book;
  book.shares = Eigen::VectorXd::Zero(n);
  book.mark = Eigen::VectorXd::Zero(n);
  double investable = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.weights(i) <= 0.0) continue;
    if (present(i, 0)) {
      investable += p.weights(i);
    } else {
      warn_missing(who, i, 0);
    }
  }
  const double total = p.weights.sum();
  // Weight of skipped stocks is spread across the rest.
  const double scale = investable > 0.0 ? total / investable : 0.0;
  double spent = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.weights(i) <= 0.0 || !present(i, 0)) continue;
    const double amount = capital * p.weights(i) * scale;
    book.shares(i) = amount / open(i, 0);
    book.mark(i) = open(i, 0);
    spent += amount;
  }
  book.cash = capital - spent;
  return book;
}

void mark_close(Book& book, const Matrix& close, const Mask& present, Eigen::Index t) {
  for (Eigen::Index i = 0; i < close.rows(); ++i) {
    if (present(i, t)) book.mark(i) = close(i, t);
  }
}

std::vector<Allocation> holdings(const Book& book) {
  std::vector<Allocation> out;
  for (Eigen::Index i = 0; i < book.shares.size(); ++i) {
    if (book.shares(i) > 0.0) out.push_back({i, book.shares(i) * book.mark(i)});
  }
  return out;
}

}  // namespace

std::vector<double> TradeLedger::values() const {
  std::vector<double> out;
  out.reserve(days.size() + 1);
  out.push_back(initial_capital);
  for (const auto& day : days) out.push_back(day.close_capital);
  return out;
}

std::vector<double> TradeLedger::daily_returns() const {
  const std::vector<double> v = values();
  return simple_returns(v);
}

std::vector<double> simple_returns(std::span<const double> levels) {
  std::vector<double> out;
  if (levels.size() < 2) return out;
  out.reserve(levels.size() - 1);
  for (std::size_t t = 1; t < levels.size(); ++t) {
    out.push_back((levels[t] - levels[t - 1]) / levels[t - 1]);
  }
  return out;
}

TradeLedger run_signal_strategy(const Mask& up, const Matrix& open, const Matrix& close,
                                const Mask& present, double initial_capital) {
  require_prices(open, close, present);
  if (up.rows() != close.rows() || up.cols() != close.cols()) {
    throw DimensionError("signal strategy: prediction and price shapes differ");
  }
  TradeLedger ledger;
  ledger.initial_capital = initial_capital;
  double capital = initial_capital;
  for (Eigen::Index t = 0; t < close.cols(); ++t) {
    LedgerDay day;
    day.open_capital = capital;
    std::vector<Eigen::Index> bought;
    for (Eigen::Index i = 0; i < close.rows(); ++i) {
      if (!up(i, t)) continue;
      if (!present(i, t)) {
        warn_missing("signal strategy", i, t);
        continue;
      }
      bought.push_back(i);
    }
    if (!bought.empty()) {
      const double each = capital / static_cast<double>(bought.size());
      double proceeds = 0.0;
      for (const Eigen::Index i : bought) {
        day.allocations.push_back({i, each});
        proceeds += each / open(i, t) * close(i, t);
      }
      capital = proceeds;
    }
    day.close_capital = capital;
    ledger.days.push_back(std::move(day));
  }
  return ledger;
}

TradeLedger run_bah(const baselines::Portfolio& portfolio, const Matrix& open,
                    const Matrix& close, const Mask& present, double initial_capital) {
  require_prices(open, close, present);
  require_portfolio(portfolio, close.rows());
  TradeLedger ledger;
  ledger.initial_capital = initial_capital;
  if (close.cols() == 0) return ledger;

  Book book = open_book(portfolio, open, present, initial_capital, "buy-and-hold");
  double previous = initial_capital;
  for (Eigen::Index t = 0; t < close.cols(); ++t) {
    LedgerDay day;
    day.open_capital = previous;
    day.allocations = holdings(book);
    mark_close(book, close, present, t);
    day.close_capital = book.value();
    previous = day.close_capital;
    ledger.days.push_back(std::move(day));
  }
  return ledger;
}

TradeLedger run_cbal(const baselines::Portfolio& portfolio, const Matrix& open,
                     const Matrix& close, const Mask& present, double initial_capital) {
  require_prices(open, close, present);
  require_portfolio(portfolio, close.rows());
  TradeLedger ledger;
  ledger.initial_capital = initial_capital;
  if (close.cols() == 0) return ledger;

  const Eigen::Index n = close.rows();
  Book book = open_book(portfolio, open, present, initial_capital, "constant rebalancing");
  double previous = initial_capital;
  for (Eigen::Index t = 0; t < close.cols(); ++t) {
    if (t > 0) {
      // Rebalance at yesterday's close across stocks priced on both days.
      double tradable = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (portfolio.weights(i) <= 0.0) continue;
        if (present(i, t) && present(i, t - 1)) {
          tradable += portfolio.weights(i);
        } else {
          warn_missing("constant rebalancing", i, t);
        }
      }
      const double wealth = book.value();
      const double scale = tradable > 0.0 ? portfolio.weights.sum() / tradable : 0.0;
      Eigen::VectorXd target_weight = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (portfolio.weights(i) > 0.0 && present(i, t) && present(i, t - 1)) {
          target_weight(i) = portfolio.weights(i) * scale;
        }
      }
      const Eigen::VectorXd current_weight =
          (book.shares.array() * book.mark.array()) / wealth;
      if (current_weight != target_weight) {
        Eigen::VectorXd shares = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          if (target_weight(i) > 0.0) shares(i) = wealth * target_weight(i) / book.mark(i);
        }
        book.shares = std::move(shares);
        book.cash = wealth - book.shares.dot(book.mark);
      }
    }
    LedgerDay day;
    day.open_capital = previous;
    day.allocations = holdings(book);
    mark_close(book, close, present, t);
    day.close_capital = book.value();
    previous = day.close_capital;
    ledger.days.push_back(std::move(day));
  }
  return ledger;
}

double worst_day(std::span<const double> values) {
  if (values.size() < 2) throw UndefinedMetricError("worst day needs two or more values");
  const std::vector<double> r = simple_returns(values);
  return *std::min_element(r.begin(), r.end());
}

double max_drawdown(std::span<const double> values) {
  if (values.empty()) throw UndefinedMetricError("max drawdown of an empty series");
  double peak = values.front();
  double worst = 0.0;
  for (const double v : values) {
    peak = std::max(peak, v);
    worst = std::max(worst, (peak - v) / peak);
  }
  return worst;
}

double cvar_5(std::span<const double> returns) {
  if (returns.empty()) throw UndefinedMetricError("CVaR of an empty return series");
  std::vector<double> sorted(returns.begin(), returns.end());
  std::sort(sorted.begin(), sorted.end());
  const auto tail = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(sorted.size())));
  return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(tail), 0.0) /
         static_cast<double>(tail);
}

double sharpe_vs_reference(std::span<const double> returns,
                           std::span<const double> reference) {
  if (returns.size() != reference.size()) {
    throw DimensionError("Sharpe ratio: strategy and reference lengths differ");
  }
  const std::size_t n = returns.size();
  if (n < 2) throw UndefinedMetricError("Sharpe ratio needs two or more days");
  std::vector<double> excess(n);
  double largest = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    excess[t] = returns[t] - reference[t];
    largest = std::max(largest, std::abs(excess[t]));
  }
  const double mean = std::accumulate(excess.begin(), excess.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (const double e : excess) ss += (e - mean) * (e - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd <= 1e-12 * largest) {
    throw UndefinedMetricError("Sharpe ratio: excess returns have zero variance");
  }
  return mean / sd;
}

namespace {

BacktestReport report_from_values(std::string strategy, std::vector<double> values,
                                  std::optional<std::span<const double>> reference) {
  BacktestReport report;
  report.strategy = std::move(strategy);
  const std::vector<double> returns = simple_returns(values);
  report.cumulative_return = values.back() / values.front();
  report.max_drawdown = max_drawdown(values);
  if (!returns.empty()) {
    report.worst_day = worst_day(values);
    report.cvar_5 = cvar_5(returns);
    const std::vector<double> zeros(returns.size(), 0.0);
    const std::span<const double> ref = reference ? *reference : std::span<const double>(zeros);
    try {
      report.sharpe = sharpe_vs_reference(returns, ref);
    } catch (const UndefinedMetricError&) {
      report.sharpe.reset();
    }
  }
  report.values = std::move(values);
  return report;
}

}  // namespace

BacktestReport build_report(std::string strategy, const TradeLedger& ledger,
                            std::optional<std::span<const double>> reference) {
  for (std::size_t t = 1; t < ledger.days.size(); ++t) {
    if (ledger.days[t].open_capital != ledger.days[t - 1].close_capital) {
      throw DataError("ledger capital is discontinuous between days");
    }
  }
  return report_from_values(std::move(strategy), ledger.values(), reference);
}

BacktestReport build_index_report(std::string strategy, std::span<const double> levels,
                                  std::optional<std::span<const double>> reference) {
  if (levels.empty()) throw DataError("index series is empty");
  return report_from_values(std::move(strategy),
                            std::vector<double>(levels.begin(), levels.end()), reference);
}

}  // namespace newsfactor::backtest
