#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "groupprox/network.hpp"
#include "groupprox/optimizer.hpp"
#include "groupprox/pruning.hpp"

namespace groupprox {

/// Problem section of an experiment config. `generator` is one of
/// group_sparse_regression, group_sparse_logistic, mlp_regression.
struct ProblemSpec {
  std::string generator = "group_sparse_regression";
  // Linear generators.
  Index n_groups = 50;
  Index group_size = 5;
  Index n_active = 10;
  Index m = 600;
  double noise_sigma = 0.01;
  // mlp_regression: student widths, teacher widths and sample count. The
  // student starts from init_checkpoint when given.
  std::vector<Index> widths;
  std::vector<Index> teacher_widths;
  Index n_samples = 256;
  double init_scale = 1.0;
  std::filesystem::path init_checkpoint;
};

struct PartitionSpec {
  enum class Kind { Natural, RowGroups, ColumnGroups, Explicit };
  Kind kind = Kind::Natural;
  bool include_output_layer = true;
  std::vector<IndexSet> groups;  // Explicit only
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ProblemSpec problem;
  PenaltyConfig penalty;
  PartitionSpec partition;
  PreconditionerRule rule;
  LrSchedule lr;
  UpdateMode mode = UpdateMode::Proximal;
  ProxTolSchedule prox_tol;
  SolverConfig solver;
  long steps = 100;
  Index minibatch_size = 0;  // 0 = full batch
  std::filesystem::path output_dir = "runs/default";
};

/// Strict JSON parsing: unknown keys and wrong types raise config-parse.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& cfg);

/// Output directory after the GROUPPROX_OUTPUT_DIR override.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

/// A differentiable objective over a flat parameter vector.
struct TrainingProblem {
  Index n_samples = 0;
  ParamVector init;
  GroupPartition partition;
  std::function<LossAndGrad(const ParamVector&, std::span<const Index>)> batch_loss;
  std::function<LossAndGrad(const ParamVector&)> full_loss;
  /// Ground-truth active groups, when known.
  std::optional<std::vector<std::size_t>> true_support;
  /// Network form of an iterate, for checkpoints. Linear models become one
  /// identity layer with a single output and zero bias.
  std::function<LayeredNetwork(const ParamVector&)> to_network;
};

TrainingProblem build_problem(const ExperimentConfig& cfg);

struct MetricsRow {
  long step = 0;
  double loss = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  double group_sparsity = 0.0;
  double mean_prox_iters = 0.0;
  std::optional<double> stationarity_residual;
};

struct SupportMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

SupportMetrics support_metrics(const ParamVector& x, const GroupPartition& p,
                               const std::vector<std::size_t>& true_support);

struct TrainingRun {
  ParamVector x;
  std::vector<MetricsRow> metrics;
  LayeredNetwork network;
  std::optional<SupportMetrics> support;
  double wall_time_seconds = 0.0;
};

/// Runs the configured optimizer. Errors carry the step (and the group,
/// where one is at fault) in the message.
TrainingRun run_training(const ExperimentConfig& cfg);
TrainingRun run_training(const ExperimentConfig& cfg, const TrainingProblem& problem);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string summary_json(const ExperimentConfig& cfg, const TrainingProblem& problem,
                         const TrainingRun& run);

/// Writes metrics.csv, summary.json and final.ckpt into `dir`.
void write_training_outputs(const ExperimentConfig& cfg,
                            const TrainingProblem& problem,
                            const TrainingRun& run,
                            const std::filesystem::path& dir);

struct BenchRow {
  long step = 0;
  double newton = 0.0;
  double bisection = 0.0;
  double adaprox = 0.0;
};

/// Proximal run that evaluates all three prox solvers on the same input at
/// every step and applies Newton's result.
std::vector<BenchRow> run_bench_solvers(const ExperimentConfig& cfg);
std::vector<BenchRow> run_bench_solvers(const ExperimentConfig& cfg,
                                        const TrainingProblem& problem);
std::string bench_csv(const std::vector<BenchRow>& rows);

enum class GroupOrientation { Row, Column };

struct PruneCommandResult {
  PruneResult pruned;
  std::string report_json;
  std::string per_layer_csv;
};

PruneCommandResult prune_network(const LayeredNetwork& net,
                                 GroupOrientation orientation, double zero_tol,
                                 bool fold_constant_units);
std::string prune_report_json(const PruneReport& report);
std::string prune_layers_csv(const PruneReport& report);

/// Shortest round-trip decimal form; the only float formatting used in
/// CSV and JSON outputs.
std::string format_double(double v);

}  // namespace groupprox
