// groupprox command line: train, bench-solvers, prune, prox-check.
//
// Exit codes: 0 success, 1 usage / config / IO error, 2 numerical failure,
// 3 a check reported failures.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "groupprox/experiments.hpp"
#include "oracle/oracle.hpp"

namespace gp = groupprox;

namespace {

int exit_code_for(const gp::Error& e) {
  switch (e.code()) {
    case gp::ErrorCode::ConfigParse:
    case gp::ErrorCode::Io:
      return 1;
    default:
      return 2;
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw gp::Error(gp::ErrorCode::Io, "cannot write " + path.string());
  os << text;
}

std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw gp::Error(gp::ErrorCode::Io, "cannot create " + dir.string());
  return dir;
}

int cmd_train(const std::string& config_path) {
  const auto cfg = gp::load_config(config_path);
  const auto problem = gp::build_problem(cfg);
  const auto run = gp::run_training(cfg, problem);
  const auto dir = gp::resolve_output_dir(cfg);
  gp::write_training_outputs(cfg, problem, run, dir);
  const double sparsity = run.metrics.empty()
                              ? gp::group_sparsity(run.x, problem.partition)
                              : run.metrics.back().group_sparsity;
  std::cout << "train: " << cfg.steps << " steps, group sparsity "
            << gp::format_double(sparsity) << ", outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_bench(const std::string& config_path) {
  const auto cfg = gp::load_config(config_path);
  const auto rows = gp::run_bench_solvers(cfg);
  const auto dir = prepare_dir(gp::resolve_output_dir(cfg));
  write_text(dir / "bench_solvers.csv", gp::bench_csv(rows));
  double n = 0, b = 0, a = 0;
  for (const auto& r : rows) {
    n += r.newton;
    b += r.bisection;
    a += r.adaprox;
  }
  const double count = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  std::cout << "mean iterations per group: newton " << gp::format_double(n / count)
            << ", bisection " << gp::format_double(b / count) << ", adaprox "
            << gp::format_double(a / count) << "\n";
  return 0;
}

int cmd_prune(const std::string& ckpt, const std::string& groups, double zero_tol,
              bool fold, std::string out_dir) {
  const auto net = gp::load_checkpoint(ckpt);
  const auto orientation =
      groups == "row" ? gp::GroupOrientation::Row : gp::GroupOrientation::Column;
  const auto result = gp::prune_network(net, orientation, zero_tol, fold);
  if (out_dir.empty()) {
    const char* env = std::getenv("GROUPPROX_OUTPUT_DIR");
    out_dir = env && *env ? env : "pruned";
  }
  const auto dir = prepare_dir(out_dir);
  gp::save_checkpoint(result.pruned.network, dir / "pruned.ckpt");
  write_text(dir / "prune_report.json", result.report_json);
  write_text(dir / "prune_layers.csv", result.per_layer_csv);
  std::cout << "prune: " << result.pruned.report.original_params << " -> "
            << result.pruned.report.pruned_params << " parameters (effective sparsity "
            << gp::format_double(result.pruned.report.effective_sparsity) << ")\n";
  return 0;
}

int cmd_prox_check(int n, std::uint64_t seed, const std::string& penalty,
                   bool negative_control) {
  gp::oracle::ProxCheckOptions options;
  options.instances = n;
  options.seed = seed;
  options.kind = gp::penalty_kind_from_string(penalty);
  options.negative_control = negative_control;
  const auto prox = gp::oracle::run_prox_check(options);
  std::cout << "oracle equivalence: " << prox.instances << " instances ("
            << prox.zero_branch << " zero, " << prox.interior_branch << " interior, "
            << prox.identity_branch << " identity), max objective gap "
            << prox.worst_objective_gap << ", max point deviation "
            << prox.worst_point_deviation << ", failures " << prox.failures
            << ", oracle disagreements " << prox.flagged << "\n";
  for (const auto& m : prox.messages) std::cout << "  " << m << "\n";

  gp::oracle::BracketCheckOptions bracket_options;
  bracket_options.instances = n;
  bracket_options.seed = seed;
  bracket_options.kind = options.kind;
  const auto bracket = gp::oracle::run_bracket_check(bracket_options);
  std::cout << "bracket and residual: " << bracket.instances << " instances, max |G| "
            << bracket.worst_residual << ", fallbacks " << bracket.fallbacks
            << ", failures " << bracket.failures << "\n";
  for (const auto& m : bracket.messages) std::cout << "  " << m << "\n";

  const bool ok = prox.passed() && bracket.passed();
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-sparsity proximal optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Run a training experiment from a JSON config");
  train->add_option("config", config_path, "Experiment config")->required();

  auto* bench = app.add_subcommand("bench-solvers",
                                   "Compare Newton, bisection and AdaProx per step");
  bench->add_option("config", config_path, "Experiment config")->required();

  std::string ckpt, groups = "row", out_dir;
  double zero_tol = 0.0;
  bool fold = true;
  auto* prune = app.add_subcommand("prune", "Prune a group-sparse checkpoint");
  prune->add_option("checkpoint", ckpt, "Checkpoint file")->required();
  prune->add_option("--groups", groups, "Group orientation")
      ->check(CLI::IsMember({"row", "column"}));
  prune->add_option("--zero-tol", zero_tol, "Group norm treated as zero")
      ->check(CLI::NonNegativeNumber);
  prune->add_option("--fold", fold,
                    "Also remove units with all-zero incoming weights (bias folded)");
  prune->add_option("--out", out_dir, "Output directory");

  int n_instances = 500;
  std::uint64_t seed = 7;
  std::string penalty = "mixed_l1l2";
  bool negative_control = false;
  auto* check = app.add_subcommand("prox-check", "Run the oracle suites");
  check->add_option("--n", n_instances, "Instances per suite")->check(CLI::NonNegativeNumber);
  check->add_option("--seed", seed, "Seed");
  check->add_option("--penalty", penalty, "Penalty kind")
      ->check(CLI::IsMember({"mixed_l1l2", "group_mcp"}));
  check->add_flag("--negative-control", negative_control,
                  "Check a deliberately broken operator; the suite must fail");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path);
    if (bench->parsed()) return cmd_bench(config_path);
    if (prune->parsed()) return cmd_prune(ckpt, groups, zero_tol, fold, out_dir);
    if (check->parsed()) return cmd_prox_check(n_instances, seed, penalty, negative_control);
  } catch (const gp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
