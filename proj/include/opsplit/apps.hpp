#ifndef OPSPLIT_APPS_HPP
#define OPSPLIT_APPS_HPP

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "opsplit/engine.hpp"
#include "opsplit/io.hpp"
#include "opsplit/linalg.hpp"

namespace opsplit {

enum class AppId { fbs_l1_log, fbs_lasso, fbs_l2_log, portfolio, nmf };

const char* app_name(AppId app);
AppId app_from_string(const std::string& name);

struct CliConfig {
  std::string data;
  long long epoch = 10;
  std::size_t nthread = 1;
  double lambda = 1.0;
  double eta = 0.0;    // forward step; 0 keeps the derived default
  double relax = 0.0;  // relaxation; 0 keeps the engine default
  std::string kernel = "cyclic";
  std::string mode = "async";
  std::uint64_t seed = 1;
  double tol = 0.0;
  std::string out;      // trace CSV destination; empty writes nothing
  std::size_t dim = 0;  // feature-count hint; synthetic size for portfolio
  double ret_c = 0.02;  // portfolio required return
  std::size_t nmf_m = 100;
  std::size_t nmf_n = 100;
  std::size_t nmf_k = 5;
};

std::string usage_text(AppId app);
CliConfig parse_cli(int argc, const char* const* argv, AppId app);
Params to_params(const CliConfig& cfg);

DenseMatrix to_dense(const SparseMatrix& a);

// sum_i log(1 + exp(-b_i (Ax)_i)) + lambda * ||x||_1
double logistic_l1_objective(const SparseMatrix& a, const DenseVector& b,
                             double lambda, const DenseVector& x);
// sum_i log(1 + exp(-b_i (Ax)_i)) + lambda * ||x||_2^2
double logistic_l2_objective(const SparseMatrix& a, const DenseVector& b,
                             double lambda, const DenseVector& x);
// 0.5 ||Ax - b||^2 + lambda * ||x||_1
double lasso_objective(const DenseMatrix& a, const DenseVector& b,
                       double lambda, const DenseVector& x);
// 0.5 x'Qx
double quadratic_objective(const DenseMatrix& q, const DenseVector& x);

struct PortfolioInstance {
  DenseMatrix q;
  DenseVector xi;
};

// xi_i ~ N(0.01, 1); Q = (R + R')/2 + sigma*I with R_ij ~ N(0, 0.1) and
// sigma = |lambda_min((R + R')/2)| + 0.1, which makes Q positive definite.
PortfolioInstance make_portfolio_instance(std::size_t n, std::uint64_t seed);

// Each runner assembles its operators and scheme, runs the engine, and
// writes the trace when cfg.out is set. They never print; the CLI wrappers
// own stdout so the benchmark harness can call these directly.
RunReport run_fbs_l1_log(const CliConfig& cfg, DenseVector* x_out = nullptr);
RunReport run_fbs_lasso(const CliConfig& cfg, DenseVector* x_out = nullptr);
RunReport run_fbs_l2_log(const CliConfig& cfg, DenseVector* x_out = nullptr);
RunReport run_portfolio(const CliConfig& cfg, DenseVector* x_out = nullptr);
RunReport run_nmf(const CliConfig& cfg, double* fit_out = nullptr);

// Runs the app `repeats` times at every thread count and streams CSV rows
// `app,mode,threads,run,seconds,speedup` followed by mean/min/max summary
// rows per thread count. Speedup is mean(seconds at one thread) / seconds.
void bench_speedup(AppId app, const CliConfig& base,
                   const std::vector<std::size_t>& threads,
                   std::size_t repeats, std::ostream& out);

int run_app_main(AppId app, int argc, const char* const* argv);
int run_bench_main(int argc, const char* const* argv);

}  // namespace opsplit

#endif
