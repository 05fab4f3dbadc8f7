#include "opsplit/apps.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "opsplit/nmf.hpp"
#include "opsplit/operators.hpp"
#include "opsplit/schemes.hpp"

namespace opsplit {

namespace {

constexpr double kTinyNorm = 1e-12;

double default_eta(double lipschitz) {
  return 0.9 / std::max(lipschitz, kTinyNorm);
}

double parse_double_arg(const std::string& flag, const std::string& text) {
  double v = 0.0;
  const char* last = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || p != last || !std::isfinite(v)) {
    throw ConfigError("flag " + flag + " expects a number, got '" + text +
                      "'");
  }
  return v;
}

long long parse_count_arg(const std::string& flag, const std::string& text,
                          long long min_value) {
  long long v = 0;
  const char* last = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || p != last) {
    throw ConfigError("flag " + flag + " expects an integer, got '" + text +
                      "'");
  }
  if (v < min_value) {
    throw ConfigError("flag " + flag + " must be at least " +
                      std::to_string(min_value));
  }
  return v;
}

std::uint64_t parse_seed_arg(const std::string& flag, const std::string& text) {
  std::uint64_t v = 0;
  const char* last = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc() || p != last) {
    throw ConfigError("flag " + flag + " expects an unsigned integer, got '" +
                      text + "'");
  }
  return v;
}

double log1pexp(double m) {
  if (m > 0.0) return m + std::log1p(std::exp(-m));
  return std::log1p(std::exp(m));
}

double logistic_loss(const SparseMatrix& a, const DenseVector& b,
                     const DenseVector& x) {
  if (x.size() != a.cols() || b.size() != a.rows()) {
    throw DimensionError("objective shape mismatch");
  }
  const DenseVector ax = matvec(a, x);
  double acc = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    acc += log1pexp(-b[i] * ax[i]);
  }
  return acc;
}

}  // namespace

const char* app_name(AppId app) {
  switch (app) {
    case AppId::fbs_l1_log:
      return "fbs_l1_log";
    case AppId::fbs_lasso:
      return "fbs_lasso";
    case AppId::fbs_l2_log:
      return "fbs_l2_log";
    case AppId::portfolio:
      return "portfolio";
    case AppId::nmf:
      return "nmf";
  }
  return "unknown";
}

AppId app_from_string(const std::string& name) {
  if (name == "fbs_l1_log") return AppId::fbs_l1_log;
  if (name == "fbs_lasso") return AppId::fbs_lasso;
  if (name == "fbs_l2_log") return AppId::fbs_l2_log;
  if (name == "portfolio") return AppId::portfolio;
  if (name == "nmf") return AppId::nmf;
  throw ConfigError(
      "unknown app '" + name +
      "' (choices: fbs_l1_log, fbs_lasso, fbs_l2_log, portfolio, nmf)");
}

std::string usage_text(AppId app) {
  const bool is_loss = app == AppId::fbs_l1_log || app == AppId::fbs_lasso ||
                       app == AppId::fbs_l2_log;
  std::string text = "usage: opsplit_";
  text += app_name(app);
  text += is_loss ? " -data <file> [options]\n" : " [options]\n";
  if (is_loss) {
    text +=
        "  -data <file>    LIBSVM/SVMLight input (required)\n"
        "  -lambda <v>     regularization weight, >= 0 (default 1)\n"
        "  -dim <n>        minimum feature count (default: max index seen)\n";
  }
  if (app == AppId::portfolio) {
    text +=
        "  -c <v>          required expected return (default 0.02)\n"
        "  -dim <n>        synthetic instance size (default 100)\n";
  }
  if (app == AppId::nmf) {
    text +=
        "  -m <v>          rows of A (default 100)\n"
        "  -n <v>          columns of A (default 100)\n"
        "  -k <v>          factor rank (default 5)\n";
  }
  text +=
      "  -epoch <k>      epochs to run (default 10)\n"
      "  -nthread <p>    agent count (default 1)\n"
      "  -eta <v>        forward step size (default derived from the data)\n"
      "  -relax <v>      relaxation in (0,1] (default 1 serial, 0.5 async)\n"
      "  -kernel <name>  cyclic | random_block | gauss_seidel (default "
      "cyclic)\n"
      "  -mode <name>    sync | async (default async)\n"
      "  -seed <v>       RNG seed (default 1)\n"
      "  -tol <v>        stop once the fixed-point residual drops below "
      "this\n"
      "  -out <file>     write the run trace CSV here\n";
  return text;
}

CliConfig parse_cli(int argc, const char* const* argv, AppId app) {
  const bool is_loss = app == AppId::fbs_l1_log || app == AppId::fbs_lasso ||
                       app == AppId::fbs_l2_log;
  CliConfig cfg;
  for (int i = 1; i < argc; i += 2) {
    const std::string flag = argv[i];
    if (i + 1 >= argc) {
      throw ConfigError("flag " + flag + " needs a value");
    }
    const std::string value = argv[i + 1];
    if (flag == "-epoch") {
      cfg.epoch = parse_count_arg(flag, value, 0);
    } else if (flag == "-nthread") {
      cfg.nthread =
          static_cast<std::size_t>(parse_count_arg(flag, value, 1));
    } else if (flag == "-eta") {
      cfg.eta = parse_double_arg(flag, value);
      if (cfg.eta <= 0.0) throw ConfigError("flag -eta must be positive");
    } else if (flag == "-relax") {
      cfg.relax = parse_double_arg(flag, value);
      if (cfg.relax <= 0.0 || cfg.relax > 1.0) {
        throw ConfigError("flag -relax must lie in (0, 1]");
      }
    } else if (flag == "-kernel") {
      cfg.kernel = value;
    } else if (flag == "-mode") {
      cfg.mode = value;
    } else if (flag == "-seed") {
      cfg.seed = parse_seed_arg(flag, value);
    } else if (flag == "-tol") {
      cfg.tol = parse_double_arg(flag, value);
      if (cfg.tol < 0.0) throw ConfigError("flag -tol must be nonnegative");
    } else if (flag == "-out") {
      cfg.out = value;
    } else if (is_loss && flag == "-data") {
      cfg.data = value;
    } else if (is_loss && flag == "-lambda") {
      cfg.lambda = parse_double_arg(flag, value);
      if (cfg.lambda < 0.0) {
        throw ConfigError("flag -lambda must be nonnegative");
      }
    } else if ((is_loss || app == AppId::portfolio) && flag == "-dim") {
      cfg.dim = static_cast<std::size_t>(parse_count_arg(flag, value, 1));
    } else if (app == AppId::portfolio && flag == "-c") {
      cfg.ret_c = parse_double_arg(flag, value);
    } else if (app == AppId::nmf && flag == "-m") {
      cfg.nmf_m = static_cast<std::size_t>(parse_count_arg(flag, value, 1));
    } else if (app == AppId::nmf && flag == "-n") {
      cfg.nmf_n = static_cast<std::size_t>(parse_count_arg(flag, value, 1));
    } else if (app == AppId::nmf && flag == "-k") {
      cfg.nmf_k = static_cast<std::size_t>(parse_count_arg(flag, value, 1));
    } else {
      throw ConfigError("unknown flag: " + flag);
    }
  }
  if (is_loss && cfg.data.empty()) {
    throw ConfigError("-data is required");
  }
  kernel_from_string(cfg.kernel);
  mode_from_string(cfg.mode);
  return cfg;
}

Params to_params(const CliConfig& cfg) {
  Params p;
  p.eta_f = 0.0;  // operators are assembled with the resolved step already
  p.eta_r = cfg.relax;
  p.max_epoch = cfg.epoch;
  p.n_threads = cfg.nthread;
  p.kernel = kernel_from_string(cfg.kernel);
  p.mode = mode_from_string(cfg.mode);
  p.tol = cfg.tol;
  p.seed = cfg.seed;
  return p;
}

DenseMatrix to_dense(const SparseMatrix& a) {
  DenseMatrix d(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for_col(a, j, [&](std::size_t i, double v) { d(i, j) = v; });
  }
  return d;
}

double logistic_l1_objective(const SparseMatrix& a, const DenseVector& b,
                             double lambda, const DenseVector& x) {
  return logistic_loss(a, b, x) + lambda * norm1(x);
}

double logistic_l2_objective(const SparseMatrix& a, const DenseVector& b,
                             double lambda, const DenseVector& x) {
  return logistic_loss(a, b, x) + lambda * dot(x, x);
}

double lasso_objective(const DenseMatrix& a, const DenseVector& b,
                       double lambda, const DenseVector& x) {
  if (x.size() != a.cols() || b.size() != a.rows()) {
    throw DimensionError("objective shape mismatch");
  }
  const DenseVector ax = matvec(a, x);
  double acc = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double d = ax[i] - b[i];
    acc += d * d;
  }
  return 0.5 * acc + lambda * norm1(x);
}

double quadratic_objective(const DenseMatrix& q, const DenseVector& x) {
  return 0.5 * dot(x, matvec(q, x));
}

PortfolioInstance make_portfolio_instance(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> rate(0.01, 1.0);
  std::normal_distribution<double> entry(0.0, std::sqrt(0.1));
  PortfolioInstance inst;
  inst.xi.resize(n);
  for (auto& v : inst.xi) v = rate(rng);
  DenseMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) r(i, j) = entry(rng);
  }
  inst.q = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      inst.q(i, j) = 0.5 * (r(i, j) + r(j, i));
    }
  }
  if (n > 0) {
    const double sigma = std::abs(sym_eig_min(inst.q)) + 0.1;
    for (std::size_t i = 0; i < n; ++i) inst.q(i, i) += sigma;
  }
  return inst;
}

RunReport run_fbs_l1_log(const CliConfig& cfg, DenseVector* x_out) {
  LabeledDataset ds = parse_libsvm(cfg.data, cfg.dim);
  const double eta =
      cfg.eta > 0.0 ? cfg.eta : default_eta(op_norm_sq(ds.a) / 4.0);
  LogLossForward<SparseMatrix> fwd(&ds.a, &ds.b, eta);
  ProxL1 bwd(cfg.lambda, eta);
  DenseVector x(ds.a.cols(), 0.0);
  ForwardBackward<LogLossForward<SparseMatrix>, ProxL1> scheme(&fwd, &bwd,
                                                               &x);
  RunReport rep =
      run(scheme, to_params(cfg), [&](const DenseVector& v) {
        return logistic_l1_objective(ds.a, ds.b, cfg.lambda, v);
      });
  if (!cfg.out.empty()) write_trace(cfg.out, rep.trace);
  if (x_out) *x_out = x;
  return rep;
}

RunReport run_fbs_lasso(const CliConfig& cfg, DenseVector* x_out) {
  LabeledDataset ds = parse_libsvm(cfg.data, cfg.dim);
  const DenseMatrix a = to_dense(ds.a);
  const double eta = cfg.eta > 0.0 ? cfg.eta : default_eta(op_norm_sq(a));
  SquareLossForward<DenseMatrix> fwd(&a, &ds.b, eta);
  ProxL1 bwd(cfg.lambda, eta);
  DenseVector x(a.cols(), 0.0);
  ForwardBackward<SquareLossForward<DenseMatrix>, ProxL1> scheme(&fwd, &bwd,
                                                                 &x);
  RunReport rep =
      run(scheme, to_params(cfg), [&](const DenseVector& v) {
        return lasso_objective(a, ds.b, cfg.lambda, v);
      });
  if (!cfg.out.empty()) write_trace(cfg.out, rep.trace);
  if (x_out) *x_out = x;
  return rep;
}

RunReport run_fbs_l2_log(const CliConfig& cfg, DenseVector* x_out) {
  LabeledDataset ds = parse_libsvm(cfg.data, cfg.dim);
  const double eta =
      cfg.eta > 0.0 ? cfg.eta : default_eta(op_norm_sq(ds.a) / 4.0);
  LogLossForward<SparseMatrix> fwd(&ds.a, &ds.b, eta);
  ProxSumSquare bwd(cfg.lambda, eta);
  DenseVector x(ds.a.cols(), 0.0);
  ForwardBackward<LogLossForward<SparseMatrix>, ProxSumSquare> scheme(
      &fwd, &bwd, &x);
  RunReport rep =
      run(scheme, to_params(cfg), [&](const DenseVector& v) {
        return logistic_l2_objective(ds.a, ds.b, cfg.lambda, v);
      });
  if (!cfg.out.empty()) write_trace(cfg.out, rep.trace);
  if (x_out) *x_out = x;
  return rep;
}

RunReport run_portfolio(const CliConfig& cfg, DenseVector* x_out) {
  const std::size_t n = cfg.dim > 0 ? cfg.dim : 100;
  PortfolioInstance inst = make_portfolio_instance(n, cfg.seed);
  const double eta =
      cfg.eta > 0.0 ? cfg.eta
                    : default_eta(std::max(sym_eig_max(inst.q), 0.0));
  QuadraticForward fwd(&inst.q, eta);
  ProjPortfolio bwd(inst.xi, cfg.ret_c);
  DenseVector x(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
  ForwardBackward<QuadraticForward, ProjPortfolio> scheme(&fwd, &bwd, &x);
  RunReport rep =
      run(scheme, to_params(cfg), [&](const DenseVector& v) {
        return quadratic_objective(inst.q, v);
      });
  if (!cfg.out.empty()) write_trace(cfg.out, rep.trace);
  if (x_out) *x_out = x;
  return rep;
}

RunReport run_nmf(const CliConfig& cfg, double* fit_out) {
  NmfState state =
      NmfState::synthetic(cfg.nmf_m, cfg.nmf_n, cfg.nmf_k, cfg.seed);
  Params params = to_params(cfg);
  params.eta_f = cfg.eta;  // the NMF drivers own their step resolution
  RunReport rep;
  if (params.mode == Mode::sync) {
    rep = nmf_run_sync(state, params);
  } else {
    NmfScheme scheme(&state);
    rep = run_async(scheme, params, [&state](const DenseVector& v) {
      return state.objective_of(v);
    });
  }
  if (!cfg.out.empty()) write_trace(cfg.out, rep.trace);
  if (fit_out) *fit_out = state.rel_fit();
  return rep;
}

void bench_speedup(AppId app, const CliConfig& base,
                   const std::vector<std::size_t>& threads,
                   std::size_t repeats, std::ostream& out) {
  if (repeats == 0) throw ConfigError("repeat count must be at least 1");
  if (threads.empty()) throw ConfigError("thread list must not be empty");
  if (std::find(threads.begin(), threads.end(), std::size_t{1}) ==
      threads.end()) {
    throw ConfigError("thread list must include 1 for the baseline");
  }

  auto run_once = [&](std::size_t p, std::size_t run_idx) {
    CliConfig cfg = base;
    cfg.nthread = p;
    cfg.out.clear();
    cfg.seed = base.seed + run_idx;
    RunReport rep;
    switch (app) {
      case AppId::fbs_l1_log:
        rep = run_fbs_l1_log(cfg);
        break;
      case AppId::fbs_lasso:
        rep = run_fbs_lasso(cfg);
        break;
      case AppId::fbs_l2_log:
        rep = run_fbs_l2_log(cfg);
        break;
      case AppId::portfolio:
        rep = run_portfolio(cfg);
        break;
      case AppId::nmf:
        rep = run_nmf(cfg);
        break;
    }
    return rep.wall_seconds;
  };

  std::vector<std::vector<double>> seconds(threads.size());
  double base_sum = 0.0;
  std::size_t base_count = 0;
  for (std::size_t t = 0; t < threads.size(); ++t) {
    seconds[t].resize(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
      seconds[t][r] = run_once(threads[t], r);
      if (threads[t] == 1) {
        base_sum += seconds[t][r];
        ++base_count;
      }
    }
  }
  const double base_mean = base_sum / static_cast<double>(base_count);

  out << "app,mode,threads,run,seconds,speedup\n";
  out << std::setprecision(17);
  auto emit = [&](std::size_t p, const std::string& run_label, double secs) {
    out << app_name(app) << ',' << base.mode << ',' << p << ',' << run_label
        << ',' << secs << ',' << (secs > 0.0 ? base_mean / secs : 0.0)
        << '\n';
  };
  for (std::size_t t = 0; t < threads.size(); ++t) {
    double sum = 0.0;
    double lo = seconds[t][0];
    double hi = seconds[t][0];
    for (std::size_t r = 0; r < repeats; ++r) {
      emit(threads[t], std::to_string(r), seconds[t][r]);
      sum += seconds[t][r];
      lo = std::min(lo, seconds[t][r]);
      hi = std::max(hi, seconds[t][r]);
    }
    emit(threads[t], "mean", sum / static_cast<double>(repeats));
    emit(threads[t], "min", lo);
    emit(threads[t], "max", hi);
  }
  out.flush();
  if (!out) throw std::runtime_error("failed to write benchmark CSV");
}

int run_app_main(AppId app, int argc, const char* const* argv) {
  CliConfig cfg;
  try {
    cfg = parse_cli(argc, argv, app);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fputs(usage_text(app).c_str(), stderr);
    return 1;
  }
  try {
    RunReport rep;
    switch (app) {
      case AppId::fbs_l1_log:
        rep = run_fbs_l1_log(cfg);
        break;
      case AppId::fbs_lasso:
        rep = run_fbs_lasso(cfg);
        break;
      case AppId::fbs_l2_log:
        rep = run_fbs_l2_log(cfg);
        break;
      case AppId::portfolio: {
        DenseVector y;
        rep = run_portfolio(cfg, &y);
        const std::size_t n = cfg.dim > 0 ? cfg.dim : 100;
        const PortfolioInstance inst = make_portfolio_instance(n, cfg.seed);
        double lowest = 0.0;
        double total = 0.0;
        double ret = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
          lowest = std::min(lowest, y[i]);
          total += y[i];
          ret += inst.xi[i] * y[i];
        }
        std::printf("objective: %.10g\n", rep.final_objective);
        std::printf("violation nonneg: %.3e\n", std::max(0.0, -lowest));
        std::printf("violation budget: %.3e\n", std::max(total - 1.0, 0.0));
        std::printf("violation return: %.3e\n",
                    std::max(cfg.ret_c - ret, 0.0));
        break;
      }
      case AppId::nmf: {
        double fit = 0.0;
        rep = run_nmf(cfg, &fit);
        std::printf("relative fit: %.6g\n", fit);
        break;
      }
    }
    std::printf("Computing time  is: %.2f(s).\n", rep.wall_seconds);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fputs(usage_text(app).c_str(), stderr);
    return 1;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

namespace {

std::vector<std::size_t> parse_thread_list(const std::string& text) {
  std::vector<std::size_t> threads;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string token = text.substr(pos, comma - pos);
    threads.push_back(
        static_cast<std::size_t>(parse_count_arg("-threads", token, 1)));
    pos = comma + 1;
  }
  return threads;
}

std::string bench_usage() {
  return
      "usage: opsplit_bench -app <name> [-threads 1,2,4] [-repeat 10] "
      "[-out <csv>] [app flags...]\n"
      "  apps: fbs_l1_log, fbs_lasso, fbs_l2_log, portfolio, nmf\n"
      "  the thread list must include 1; speedup is measured against the\n"
      "  mean single-thread time\n";
}

}  // namespace

int run_bench_main(int argc, const char* const* argv) {
  std::string app_arg;
  std::string threads_arg = "1,2,4";
  std::string out_path;
  std::size_t repeats = 10;
  std::vector<const char*> rest;
  rest.push_back(argc > 0 ? argv[0] : "opsplit_bench");
  AppId app = AppId::portfolio;
  CliConfig cfg;
  std::vector<std::size_t> threads;
  try {
    for (int i = 1; i < argc; i += 2) {
      const std::string flag = argv[i];
      if (i + 1 >= argc) throw ConfigError("flag " + flag + " needs a value");
      if (flag == "-app") {
        app_arg = argv[i + 1];
      } else if (flag == "-threads") {
        threads_arg = argv[i + 1];
      } else if (flag == "-repeat") {
        repeats =
            static_cast<std::size_t>(parse_count_arg(flag, argv[i + 1], 1));
      } else if (flag == "-out") {
        out_path = argv[i + 1];
      } else {
        rest.push_back(argv[i]);
        rest.push_back(argv[i + 1]);
      }
    }
    if (app_arg.empty()) throw ConfigError("-app is required");
    app = app_from_string(app_arg);
    threads = parse_thread_list(threads_arg);
    cfg = parse_cli(static_cast<int>(rest.size()), rest.data(), app);
    cfg.out.clear();  // per-run traces are not part of the benchmark output
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fputs(bench_usage().c_str(), stderr);
    return 1;
  }
  try {
    if (out_path.empty()) {
      std::ostringstream buf;
      bench_speedup(app, cfg, threads, repeats, buf);
      std::fputs(buf.str().c_str(), stdout);
    } else {
      std::ofstream file(out_path);
      if (!file) {
        throw std::runtime_error("cannot open benchmark output: " + out_path);
      }
      bench_speedup(app, cfg, threads, repeats, file);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace opsplit
