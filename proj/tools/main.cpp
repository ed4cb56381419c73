// qbss_cli: synthetic-data generation, model fitting, diagnostics, and the
// cost-scaling benchmark harness, all driven by a JSON config.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qbss/diagnostics.hpp"
#include "qbss/ggm.hpp"
#include "qbss/io.hpp"
#include "qbss/model.hpp"
#include "qbss/sampler.hpp"
#include "qbss/simulate.hpp"
#include "qbss/spca.hpp"
#include "qbss/varapprox.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace qbss;

namespace {

constexpr const char* kVersion = "0.1.0";

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("mode")) cfg.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("method"))
    cfg.method = method_from_string(j.at("method").get<std::string>());
  cfg.p = j.value("p", cfg.p);
  cfg.n = j.value("n", cfg.n);
  cfg.psi = j.value("psi", cfg.psi);
  cfg.vartheta = j.value("vartheta", cfg.vartheta);
  cfg.s_star = j.value("s_star", cfg.s_star);
  cfg.u = j.value("u", cfg.u);
  cfg.rho1 = j.value("rho1", cfg.rho1);
  cfg.rho0_inv = j.value("rho0_inv", cfg.rho0_inv);
  cfg.sigma2 = j.value("sigma2", cfg.sigma2);
  cfg.n_iter = j.value("n_iter", cfg.n_iter);
  cfg.burn_in = j.value("burn_in", cfg.burn_in);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.replications = j.value("replications", cfg.replications);
  cfg.template_size = j.value("template_size", cfg.template_size);
  cfg.cap = j.value("cap", cfg.cap);
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  return json{{"mode", to_string(cfg.mode)},
              {"method", to_string(cfg.method)},
              {"p", cfg.p},
              {"n", cfg.n},
              {"psi", cfg.psi},
              {"vartheta", cfg.vartheta},
              {"s_star", cfg.s_star},
              {"u", cfg.u},
              {"rho1", cfg.rho1},
              {"rho0_inv", cfg.rho0_inv},
              {"sigma2", cfg.sigma2},
              {"n_iter", cfg.n_iter},
              {"burn_in", cfg.burn_in},
              {"seed", cfg.seed},
              {"replications", cfg.replications},
              {"template_size", cfg.template_size},
              {"cap", cfg.cap}};
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const ExperimentConfig& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(dump)));
  json manifest{{"command", command},
                {"version", kVersion},
                {"config_hash", std::string(hash)},
                {"config", config_to_json(cfg)}};
  std::ofstream f(dir / "manifest.json");
  f << manifest.dump(2) << "\n";
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
}

json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

struct RunContext {
  ExperimentConfig cfg;
  fs::path out;
};

RunContext make_context(const std::string& config_path, const std::string& out_dir,
                        std::optional<std::uint64_t> seed_override,
                        const std::string& command) {
  RunContext ctx;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw CLI::ValidationError("--config", "cannot open " + config_path);
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw CLI::ValidationError("--config", e.what());
    }
    ctx.cfg = config_from_json(j);
  }
  if (seed_override) ctx.cfg.seed = *seed_override;
  ctx.cfg.validate();
  ctx.out = out_dir;
  fs::create_directories(ctx.out);
  write_manifest(ctx.out, command, ctx.cfg);
  return ctx;
}

json summarize_trace(const Trace& trace, const BinaryModel* truth) {
  json out;
  out["n_samples"] = trace.size();
  out["seconds_total"] = trace.seconds_total;
  out["seconds_per_iter"] = trace.seconds_per_iter;
  if (truth) {
    const SelectionReport rep = selection_report(trace, *truth);
    out["inclusion_probs"] = vector_to_json(rep.inclusion_probs);
    out["prob_true_model"] = rep.prob_true_model;
    out["fdr"] = rep.fdr;
    out["fnr"] = rep.fnr;
    out["median_model_size"] = rep.median_model_size;
  } else if (trace.size() > 0) {
    const int p = static_cast<int>(trace.theta_samples[0].size());
    VectorXd incl = VectorXd::Zero(p);
    std::vector<int> sizes(trace.size());
    for (int k = 0; k < trace.size(); ++k) {
      for (int j = 0; j < p; ++j)
        if (trace.delta_samples[k].get(j)) incl[j] += 1.0;
      sizes[k] = trace.delta_samples[k].active_count();
    }
    incl /= trace.size();
    std::sort(sizes.begin(), sizes.end());
    const int m = trace.size();
    out["inclusion_probs"] = vector_to_json(incl);
    out["median_model_size"] =
        (m % 2 == 1) ? sizes[m / 2] : 0.5 * (sizes[m / 2 - 1] + sizes[m / 2]);
  }
  return out;
}

int cmd_simulate(const RunContext& ctx) {
  Rng rng(ctx.cfg.seed);
  if (ctx.cfg.mode == Mode::spca) {
    const SpikedData data = simulate_spiked(ctx.cfg, rng);
    write_matrix_csv((ctx.out / "X.csv").string(), data.X);
    write_vector_csv((ctx.out / "theta_star.csv").string(), data.theta_star);
  } else {
    const RegressionData data = simulate_regression(ctx.cfg, rng);
    write_matrix_csv((ctx.out / "X.csv").string(), data.X);
    write_vector_csv((ctx.out / "y.csv").string(), data.y);
    write_vector_csv((ctx.out / "theta_star.csv").string(), data.theta_star);
  }
  return 0;
}

int cmd_fit_regression(const RunContext& ctx, const std::string& x_path,
                       const std::string& y_path) {
  MatrixXd X;
  VectorXd y;
  std::optional<BinaryModel> truth;
  if (!x_path.empty()) {
    X = read_matrix_csv(x_path);
    y = read_vector_csv(y_path);
  } else {
    Rng rng(ctx.cfg.seed);
    RegressionData data = simulate_regression(ctx.cfg, rng);
    X = std::move(data.X);
    y = std::move(data.y);
    std::vector<int> idx;
    for (int j = 0; j < ctx.cfg.p; ++j)
      if (data.theta_star[j] != 0.0) idx.push_back(j);
    truth = BinaryModel::from_indices(ctx.cfg.p, idx);
  }
  const int p = static_cast<int>(X.cols());
  const GaussianRegressionQL ql(std::move(X), std::move(y), ctx.cfg.sigma2);
  const PriorSpec prior = ctx.cfg.make_prior(p);
  const ModelState init = lasso_init(ql, default_lasso_lambda(ql));

  if (ctx.cfg.method == Method::mcmc) {
    SamplerConfig scfg;
    scfg.n_iter = ctx.cfg.n_iter;
    scfg.burn_in = ctx.cfg.burn_in_value();
    scfg.seed = ctx.cfg.seed;
    const Trace trace = run_chain(prior, ql, init, scfg);
    write_trace_csv((ctx.out / "trace.csv").string(), trace, p);
    write_json(ctx.out / "summary.json",
               summarize_trace(trace, truth ? &*truth : nullptr));
  } else {
    SparsityTemplate tmpl = SparsityTemplate::skinny(p);
    if (ctx.cfg.method == Method::full) tmpl = SparsityTemplate::full(p);
    else if (ctx.cfg.method == Method::midsize)
      tmpl = {init.delta};  // lasso support as the template
    const VariationalState va0 = make_cavi_init(prior, ql, tmpl, init.delta, init.theta);
    const CaviResult res = run_cavi(prior, ql, tmpl, va0);
    json out{{"iterations", res.iterations},
             {"converged", res.converged},
             {"elbo", elbo(res.state, prior, ql)},
             {"alpha", vector_to_json(res.state.alpha)},
             {"mu", vector_to_json(res.state.mu)},
             {"c_diag", vector_to_json(res.state.c_diag)}};
    write_json(ctx.out / "summary.json", out);
  }
  return 0;
}

int cmd_fit_ggm(const RunContext& ctx, const std::string& z_path, int workers) {
  MatrixXd Z;
  if (!z_path.empty()) {
    Z = read_matrix_csv(z_path);
  } else {
    // rows with AR(psi) correlation have a tridiagonal (chain-graph) precision
    Rng rng(ctx.cfg.seed);
    Z = simulate_regression(ctx.cfg, rng).X;
  }
  GgmSettings settings;
  settings.method = ctx.cfg.method;
  settings.n_iter = ctx.cfg.n_iter;
  settings.burn_in = ctx.cfg.burn_in;
  settings.seed = ctx.cfg.seed;
  settings.template_size = ctx.cfg.template_size;
  settings.sigma2 = ctx.cfg.sigma2;
  settings.u = ctx.cfg.u;
  settings.rho1 = ctx.cfg.rho1;
  settings.rho0_inv = ctx.cfg.rho0_inv;
  settings.workers = workers;
  const GgmFit fit = fit_ggm(Z, settings);
  write_matrix_csv((ctx.out / "edge_probs.csv").string(), fit.edge_probs);
  write_matrix_csv((ctx.out / "precision.csv").string(), fit.precision_estimate);
  json nodes = json::array();
  for (const auto& node : fit.node_fits)
    nodes.push_back({{"median_model_size", node.median_model_size},
                     {"iterations", node.iterations}});
  write_json(ctx.out / "summary.json", json{{"nodes", nodes}});
  return 0;
}

int cmd_fit_spca(const RunContext& ctx, const std::string& x_path) {
  MatrixXd X;
  std::optional<VectorXd> truth;
  if (!x_path.empty()) {
    X = read_matrix_csv(x_path);
  } else {
    Rng rng(ctx.cfg.seed);
    SpikedData data = simulate_spiked(ctx.cfg, rng);
    X = std::move(data.X);
    truth = std::move(data.theta_star);
  }
  const int p = static_cast<int>(X.cols());
  const PriorSpec prior = ctx.cfg.make_prior(p);
  SamplerConfig scfg;
  scfg.n_iter = ctx.cfg.n_iter;
  scfg.burn_in = ctx.cfg.burn_in_value();
  scfg.seed = ctx.cfg.seed;
  const SpcaFit fit =
      fit_spca(X, prior, ctx.cfg.sigma2, scfg, truth ? &*truth : nullptr);
  write_trace_csv((ctx.out / "trace.csv").string(), fit.trace, p);
  json out = summarize_trace(fit.trace, nullptr);
  out["sign"] = fit.sign;
  if (!fit.proj_error_samples.empty()) {
    double mean = 0.0;
    for (double e : fit.proj_error_samples) mean += e;
    out["mean_projection_error"] = mean / fit.proj_error_samples.size();
  }
  write_json(ctx.out / "summary.json", out);
  return 0;
}

int cmd_diagnose(const RunContext& ctx) {
  Rng rng(ctx.cfg.seed);
  RegressionData data = simulate_regression(ctx.cfg, rng);
  std::vector<int> idx;
  for (int j = 0; j < ctx.cfg.p; ++j)
    if (data.theta_star[j] != 0.0) idx.push_back(j);
  const BinaryModel truth = BinaryModel::from_indices(ctx.cfg.p, idx);

  const GaussianRegressionQL ql(std::move(data.X), std::move(data.y), ctx.cfg.sigma2);
  const PriorSpec prior = ctx.cfg.make_prior(ctx.cfg.p);
  const ModelState init = lasso_init(ql, default_lasso_lambda(ql));
  SamplerConfig scfg;
  scfg.n_iter = ctx.cfg.n_iter;
  scfg.burn_in = ctx.cfg.burn_in_value();
  scfg.seed = ctx.cfg.seed;
  const Trace trace = run_chain(prior, ql, init, scfg);

  json out = summarize_trace(trace, &truth);
  const BvmLimit limit = bvm_limit_from_fit(ql, truth, prior);
  const KlEstimate kl = kl_to_bvm(trace, limit, prior, ql);
  out["kl_to_bvm"] = kl.estimate;
  out["kl_to_bvm_se"] = kl.std_error;
  const int sbar = ctx.cfg.cap >= 1 ? ctx.cfg.cap : ctx.cfg.p;
  out["contraction_epsilon"] = contraction_epsilon(
      ctx.cfg.n, sbar, ctx.cfg.s_star, ctx.cfg.sigma2, 1.0, prior.rho1);
  write_json(ctx.out / "diagnostics.json", out);
  return 0;
}

int cmd_benchmark(const RunContext& ctx, std::vector<int> p_grid) {
  if (p_grid.empty()) p_grid = {500, 1000, 2000, 4000};
  std::ofstream f(ctx.out / "cost.csv");
  f << "p,method,iterations,seconds\n";
  for (int p : p_grid) {
    ExperimentConfig cfg = ctx.cfg;
    cfg.p = p;
    Rng rng(cfg.seed);
    RegressionData data = simulate_regression(cfg, rng);
    const GaussianRegressionQL ql(std::move(data.X), std::move(data.y), cfg.sigma2);
    const PriorSpec prior = cfg.make_prior(p);
    const ModelState init = lasso_init(ql, default_lasso_lambda(ql));

    {  // (a) p iterations of the Metropolized-Gibbs sampler
      SamplerConfig scfg;
      scfg.n_iter = p;
      scfg.seed = cfg.seed;
      const Trace trace = run_chain(prior, ql, init, scfg);
      f << p << ",mcmc," << p << "," << trace.seconds_total << "\n";
    }
    for (Method method : {Method::full, Method::midsize}) {
      SparsityTemplate tmpl = SparsityTemplate::full(p);
      if (method == Method::midsize) {
        BinaryModel t(p);
        for (int j = 0; j < std::min(p, cfg.template_size); ++j) t.set(j, true);
        for (int j : init.delta.active_indices()) t.set(j, true);
        tmpl = {t};
      }
      const VariationalState va0 =
          make_cavi_init(prior, ql, tmpl, init.delta, init.theta);
      const auto t0 = std::chrono::steady_clock::now();
      run_cavi(prior, ql, tmpl, va0, 50, 0.0);  // tol 0: run all 50 iterations
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      f << p << "," << to_string(method) << ",50," << dt.count() << "\n";
    }
    f.flush();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spike-and-slab quasi-posterior toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run", x_path, y_path, z_path;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::vector<int> p_grid;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out_dir, "run directory (default ./run)");
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate synthetic data");
  add_common(sim);
  CLI::App* fitreg = app.add_subcommand("fit-regression", "fit the regression model");
  add_common(fitreg);
  fitreg->add_option("--x", x_path, "design matrix CSV (default: simulate)");
  fitreg->add_option("--y", y_path, "response CSV")->needs(fitreg->get_option("--x"));
  CLI::App* fitggm = app.add_subcommand("fit-ggm", "graphical model by node regressions");
  add_common(fitggm);
  fitggm->add_option("--z", z_path, "data matrix CSV (default: simulate)");
  fitggm->add_option("--workers", workers, "parallel node regressions");
  CLI::App* fitspca = app.add_subcommand("fit-spca", "sparse first principal component");
  add_common(fitspca);
  fitspca->add_option("--x", x_path, "data matrix CSV (default: simulate)");
  CLI::App* diag = app.add_subcommand("diagnose", "fit and report diagnostics");
  add_common(diag);
  CLI::App* bench = app.add_subcommand("benchmark", "per-iteration cost table");
  add_common(bench);
  bench->add_option("--p-grid", p_grid, "dimensions to benchmark");

  try {
    app.parse(argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    const RunContext ctx = make_context(config_path, out_dir, seed, command);
    if (sim->parsed()) return cmd_simulate(ctx);
    if (fitreg->parsed()) return cmd_fit_regression(ctx, x_path, y_path);
    if (fitggm->parsed()) return cmd_fit_ggm(ctx, z_path, workers);
    if (fitspca->parsed()) return cmd_fit_spca(ctx, x_path);
    if (diag->parsed()) return cmd_diagnose(ctx);
    if (bench->parsed()) return cmd_benchmark(ctx, p_grid);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
