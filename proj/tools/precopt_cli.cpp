#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "precopt/io.hpp"
#include "precopt/verify.hpp"

using nlohmann::json;
using namespace precopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitCap = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<int> quadrature;
};

json load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("missing --config");
  std::ifstream in(args.config_path);
  if (!in) throw ConfigError("cannot open config file: " + args.config_path);
  json cfg;
  in >> cfg;
  return cfg;
}

std::uint64_t pick_seed(const json& cfg, const CommonArgs& args) {
  if (args.seed) return *args.seed;
  return cfg.value("seed", std::uint64_t{0});  // fixed default, never wall clock
}

IntegrationConfig parse_integration(const json& cfg, const CommonArgs& args,
                                    std::uint64_t seed) {
  IntegrationConfig icfg;
  if (cfg.contains("integration")) {
    const json& j = cfg.at("integration");
    const std::string method = j.value("method", "monte-carlo");
    if (method == "gauss-hermite") {
      icfg.method = IntegrationConfig::Method::gauss_hermite;
    } else if (method == "monte-carlo") {
      icfg.method = IntegrationConfig::Method::monte_carlo;
    } else {
      throw ConfigError("integration.method must be monte-carlo or gauss-hermite");
    }
    icfg.samples = j.value("samples", icfg.samples);
    icfg.nodes_per_dim = j.value("nodes_per_dim", icfg.nodes_per_dim);
    if (j.contains("stderr_target")) icfg.stderr_target = j.at("stderr_target").get<double>();
  }
  if (args.samples) icfg.samples = *args.samples;
  if (args.quadrature) {
    icfg.method = IntegrationConfig::Method::gauss_hermite;
    icfg.nodes_per_dim = *args.quadrature;
  }
  icfg.seed = seed;
  return icfg;
}

void emit(const std::string& text, const CommonArgs& args) {
  if (args.out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
  } else {
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + args.out_path);
    out << text;
  }
}

std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

int run_optimize(const CommonArgs& args) {
  const json cfg = load_config(args);
  const std::uint64_t seed = pick_seed(cfg, args);
  const Channel ch = load_channel(cfg.at("channel"));
  const double rho = cfg.at("rho").get<double>();
  const bool gaussian = cfg.value("gaussian", false);

  PrecoderSolution sol;
  if (gaussian) {
    int m = ch.tx_dims();
    if (cfg.contains("constellation")) m = load_constellation(cfg.at("constellation")).dims();
    sol = max_performance_gaussian(ch, rho, m);
  } else {
    const Constellation c = load_constellation(cfg.at("constellation"));
    const IntegrationConfig icfg = parse_integration(cfg, args, seed);
    VSearchOptions opts;
    opts.seed = seed;
    sol = max_performance(ch, c, rho, icfg, opts);
  }

  json out = solution_to_json(sol);
  out["rho"] = rho;
  out["seed"] = seed;
  emit(out.dump(2), args);
  return sol.kkt.converged ? kExitOk : kExitNotConverged;
}

int run_sweep(const CommonArgs& args) {
  const json cfg = load_config(args);
  const std::uint64_t seed = pick_seed(cfg, args);
  const Channel ch = load_channel(cfg.at("channel"));
  const Constellation c = load_constellation(cfg.at("constellation"));
  const IntegrationConfig icfg = parse_integration(cfg, args, seed);
  const bool gaussian = cfg.value("gaussian", false);
  if (!cfg.contains("snr_grid_db")) throw ConfigError("sweep: missing snr_grid_db");
  const Eigen::VectorXd grid = vector_from_json(cfg.at("snr_grid_db"));
  for (int i = 0; i + 1 < grid.size(); ++i)
    if (grid(i) >= grid(i + 1)) throw ConfigError("snr_grid_db must be strictly increasing");

  const DifferenceSet ds = difference_set(c);
  const int m = c.dims();
  const int p = ch.tx_dims();
  const int k = std::min(p, m);
  bool all_converged = true;

  std::ostringstream csv;
  csv << "snr_db,strategy,mi_nats,mi_stderr,dmin,iterations\n";
  const auto add_row = [&](double snr_db, const std::string& strategy, const MiEstimate& mi,
                           const Precoder& prec, int iterations) {
    csv << csv_double(snr_db) << ',' << strategy << ',' << csv_double(mi.nats) << ','
        << csv_double(mi.stderr_) << ',' << csv_double(d_min(ch, prec, ds).value) << ','
        << iterations << '\n';
  };
  const auto mi_of = [&](const Precoder& prec) {
    if (gaussian) return mi_gaussian(prec.p * prec.p.transpose(), ch.gram);
    return mi_discrete(ch.h * prec.p, c, icfg);
  };

  for (int gi = 0; gi < grid.size(); ++gi) {
    const double snr_db = grid(gi);
    const double rho = std::pow(10.0, snr_db / 10.0);

    Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(p, m);
    for (int i = 0; i < k; ++i) flat(i, i) = std::sqrt(rho / m);
    const Precoder none = Precoder::from_matrix(flat);
    add_row(snr_db, "no-precoding", mi_of(none), none, 0);

    const PrecoderSolution wf = max_performance_gaussian(ch, rho, m);
    add_row(snr_db, "waterfilling", mi_of(wf.precoder), wf.precoder, 0);

    if (gaussian) {
      add_row(snr_db, "kkt-alloc-fixed-V", mi_of(wf.precoder), wf.precoder, 0);
      add_row(snr_db, "full", mi_of(wf.precoder), wf.precoder, 0);
    } else {
      const PowerAlloc alloc =
          opt_power_alloc(ch, c, Eigen::MatrixXd::Identity(m, m), rho, icfg);
      all_converged = all_converged && alloc.report.converged;
      // assemble the fixed-V allocation, keeping mode-to-axis pairing
      std::vector<int> order(k);
      for (int i = 0; i < k; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return alloc.sigma_sq(a) > alloc.sigma_sq(b);
      });
      Eigen::VectorXd sig(k);
      Eigen::MatrixXd uu(p, k), vv = Eigen::MatrixXd::Identity(m, m);
      for (int i = 0; i < k; ++i) {
        sig(i) = std::sqrt(std::max(0.0, alloc.sigma_sq(order[i])));
        uu.col(i) = ch.eig_vectors.col(order[i]);
        vv.col(i) = Eigen::VectorXd::Unit(m, order[i]);
      }
      const Precoder fixedv = Precoder::from_factors(uu, sig, vv);
      add_row(snr_db, "kkt-alloc-fixed-V", mi_of(fixedv), fixedv, alloc.report.iterations);

      VSearchOptions opts;
      opts.seed = seed;
      const PrecoderSolution full = max_performance(ch, c, rho, icfg, opts);
      all_converged = all_converged && full.kkt.converged;
      add_row(snr_db, "full", full.mi, full.precoder, full.kkt.iterations);
    }
  }

  if (args.format == "json") {
    json out;
    out["csv"] = csv.str();
    out["seed"] = seed;
    emit(out.dump(2), args);
  } else {
    emit(csv.str(), args);
  }
  return all_converged ? kExitOk : kExitNotConverged;
}

int run_mindist(const CommonArgs& args) {
  const json cfg = load_config(args);
  if (!cfg.contains("instance")) throw ConfigError("mindist: missing instance");
  const DistanceInstance inst = load_distance_instance(cfg.at("instance"));
  const std::string program = cfg.value("program", "maxmindist");

  json out;
  if (program == "maxmindist") {
    out["maxmindist"] = distance_result_to_json(max_min_dist(inst.rho, inst.diffs, inst.channel));
  } else if (program == "minpower") {
    out["minpower"] = distance_result_to_json(min_power(inst.d, inst.diffs, inst.channel));
  } else if (program == "dmin") {
    if (!cfg.contains("precoder")) throw ConfigError("dmin: missing precoder");
    const Precoder prec = Precoder::from_matrix(matrix_from_json(cfg.at("precoder")));
    out["dmin"] = distance_result_to_json(d_min(inst.channel, prec, inst.diffs));
  } else {
    throw ConfigError("mindist: unknown program " + program);
  }
  emit(out.dump(2), args);
  return kExitOk;
}

int run_reduce(const CommonArgs& args) {
  const json cfg = load_config(args);
  const std::string reduction = cfg.value("reduction", "minnorm-to-minpower");
  if (!cfg.contains("instance")) throw ConfigError("reduce: missing instance");

  json out;
  out["reduction"] = reduction;
  if (reduction == "minnorm-to-minpower") {
    const MinNormInstance inst = load_minnorm_instance(cfg.at("instance"));
    const MinNormReduction red = reduce_minnorm_to_minpower(inst);
    const auto [t_direct, z_direct] = min_norm(inst);
    out["reduced"]["t_star"] = red.t_star;
    out["reduced"]["z_star"] = vector_to_json(red.z_star);
    out["reduced"]["heuristic"] = red.inner.heuristic;
    out["direct"]["t_star"] = t_direct;
    out["direct"]["z_star"] = vector_to_json(z_direct);
    out["agreement_delta"] = std::abs(red.t_star - t_direct);
  } else if (reduction == "minpower-to-maxmindist") {
    const DistanceInstance inst = load_distance_instance(cfg.at("instance"));
    const DistanceResult red = reduce_minpower_to_maxmindist(inst.d, inst.diffs, inst.channel);
    out["reduced"] = distance_result_to_json(red);
    // dual-direction consistency: re-run the distance program at the power
    // the reduction returned
    const DistanceResult back = max_min_dist(*red.power, inst.diffs, inst.channel);
    out["direct"] = distance_result_to_json(back);
    out["agreement_delta"] = std::abs(back.value - inst.d);
  } else {
    throw ConfigError("reduce: unknown reduction " + reduction);
  }
  emit(out.dump(2), args);
  return kExitOk;
}

int run_verify(const CommonArgs& args, double scale) {
  VerifyBudget budget;
  budget.scale = scale;
  const std::vector<CheckResult> results = run_verification_suite(budget, &std::cout);
  bool all = true;
  json out = json::array();
  for (const CheckResult& r : results) {
    all = all && r.pass;
    out.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail},
                   {"seconds", r.seconds}});
  }
  if (!args.out_path.empty()) emit(out.dump(2), args);
  return all ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear precoder optimization for discrete-input Gaussian channels"};
  app.require_subcommand(1);

  CommonArgs args;
  double verify_scale = 0.3;
  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", args.config_path, "JSON config path");
    if (needs_config) opt->required();
    sub->add_option("--seed", args.seed, "override the config seed");
    sub->add_option("--out", args.out_path, "output path (stdout when absent)");
    sub->add_option("--format", args.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--samples", args.samples, "Monte Carlo sample budget");
    sub->add_option("--quadrature", args.quadrature, "Gauss-Hermite nodes per dimension");
  };

  CLI::App* optimize = app.add_subcommand("optimize", "single-point precoder optimization");
  add_common(optimize, true);
  CLI::App* sweep = app.add_subcommand("sweep", "strategy comparison over an SNR grid");
  add_common(sweep, true);
  CLI::App* mindist = app.add_subcommand("mindist", "distance programs on an instance file");
  add_common(mindist, true);
  CLI::App* reduce = app.add_subcommand("reduce", "reduction chains with the direct oracle");
  add_common(reduce, true);
  CLI::App* verify = app.add_subcommand("verify", "run the verification suite");
  add_common(verify, false);
  verify->add_option("--scale", verify_scale, "budget scale relative to the full suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitConfig : kExitOk;
  }

  try {
    if (optimize->parsed()) return run_optimize(args);
    if (sweep->parsed()) return run_sweep(args);
    if (mindist->parsed()) return run_mindist(args);
    if (reduce->parsed()) return run_reduce(args);
    if (verify->parsed()) return run_verify(args, verify_scale);
  } catch (const DimensionCapError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCap;
  } catch (const json::exception& e) {
    std::cerr << "error: config parse: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
