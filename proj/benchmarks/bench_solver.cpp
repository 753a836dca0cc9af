#include <random>

#include <benchmark/benchmark.h>

#include "newsfactor/admm.hpp"
#include "newsfactor/data.hpp"
#include "newsfactor/linalg.hpp"
#include "newsfactor/prox.hpp"

namespace nf = newsfactor;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = n(rng);
  return m;
}

void BM_RealSchur(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const MatrixXd b = gaussian(rng, state.range(0), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nf::linalg::real_schur(b));
}
BENCHMARK(BM_RealSchur)->Arg(10)->Arg(50)->Arg(200);

// d x m unknowns with B = Y Y' of the word dimension, as in the B-update.
void BM_SolveSylvester(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Eigen::Index d = 10, m = state.range(0);
  const MatrixXd ga = gaussian(rng, 30, d), gy = gaussian(rng, m, 2 * m);
  nf::linalg::SylvesterProblem p{ga.transpose() * ga, gy * gy.transpose(), gaussian(rng, d, m), {}};
  if (state.range(1) != 0) {
    p.b_schur = std::make_shared<const nf::linalg::SchurFactors>(nf::linalg::sylvester_schur(p.b));
  }
  for (auto _ : state) benchmark::DoNotOptimize(nf::linalg::solve_sylvester(p));
}
BENCHMARK(BM_SolveSylvester)->ArgsProduct({{30, 100, 300}, {0, 1}});

void BM_SparseGroupProx(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const VectorXd v = gaussian(rng, state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(nf::prox::sparse_group_prox(v, {0.5, 0.1, 1.0}));
}
BENCHMARK(BM_SparseGroupProx)->Arg(10)->Arg(100);

void BM_AdmmStep(benchmark::State& state) {
  nf::data::SyntheticSpec spec;
  spec.stocks = static_cast<int>(state.range(0));
  spec.words = static_cast<int>(state.range(1));
  spec.days = 250;
  const auto ds = nf::data::generate_synthetic(spec);
  const nf::admm::TrainingData data(ds.returns, ds.intensity.values);
  nf::admm::SolverConfig cfg;
  nf::admm::AdmmState s = nf::admm::initial_state(data.stocks(), data.words(), cfg);
  for (auto _ : state) {
    nf::admm::step(s, data, cfg);
    if (s.history.size() > 1000) s.history.clear();
  }
}
BENCHMARK(BM_AdmmStep)->Args({20, 30})->Args({100, 300});

}  // namespace
BENCHMARK_MAIN();
