#include "groupprox/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "groupprox/problems.hpp"
#include "groupprox/rng.hpp"
#include "json.hpp"

namespace groupprox {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::ConfigParse, what);
}

void check_keys(const json& obj, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) config_error(std::string(where) + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) {
      config_error("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string read_string(const json& obj, const char* key, std::string fallback) {
  read(obj, key, fallback);
  return fallback;
}

ProblemSpec parse_problem(const json& j) {
  check_keys(j, "problem",
             {"generator", "n_groups", "group_size", "n_active", "m", "noise_sigma",
              "widths", "teacher_widths", "n_samples", "init_scale",
              "init_checkpoint"});
  ProblemSpec p;
  read(j, "generator", p.generator);
  read(j, "n_groups", p.n_groups);
  read(j, "group_size", p.group_size);
  read(j, "n_active", p.n_active);
  read(j, "m", p.m);
  read(j, "noise_sigma", p.noise_sigma);
  read(j, "widths", p.widths);
  read(j, "teacher_widths", p.teacher_widths);
  read(j, "n_samples", p.n_samples);
  read(j, "init_scale", p.init_scale);
  std::string ckpt;
  read(j, "init_checkpoint", ckpt);
  p.init_checkpoint = ckpt;
  if (p.generator != "group_sparse_regression" &&
      p.generator != "group_sparse_logistic" && p.generator != "mlp_regression") {
    config_error("unknown problem generator '" + p.generator + "'");
  }
  if (p.generator == "mlp_regression" && (p.widths.size() < 2 || p.teacher_widths.size() < 2)) {
    config_error("mlp_regression needs widths and teacher_widths");
  }
  return p;
}

PenaltyConfig parse_penalty(const json& j) {
  check_keys(j, "penalty", {"kind", "lambda", "beta", "group_weight_rule"});
  PenaltyConfig p;
  p.kind = penalty_kind_from_string(read_string(j, "kind", "mixed_l1l2"));
  read(j, "lambda", p.lambda);
  read(j, "beta", p.beta);
  p.group_weight_rule =
      group_weight_rule_from_string(read_string(j, "group_weight_rule", "sqrt_size"));
  try {
    p.validate();
  } catch (const Error& e) {
    config_error("penalty: " + e.message());
  }
  return p;
}

PartitionSpec parse_partition(const json& j) {
  PartitionSpec p;
  auto kind_from = [](const std::string& s) {
    if (s == "natural") return PartitionSpec::Kind::Natural;
    if (s == "row_groups") return PartitionSpec::Kind::RowGroups;
    if (s == "column_groups") return PartitionSpec::Kind::ColumnGroups;
    if (s == "explicit") return PartitionSpec::Kind::Explicit;
    config_error("unknown partition type '" + s + "'");
  };
  if (j.is_string()) {
    p.kind = kind_from(j.get<std::string>());
  } else if (j.is_array()) {
    p.kind = PartitionSpec::Kind::Explicit;
    try {
      p.groups = j.get<std::vector<IndexSet>>();
    } catch (const json::exception& e) {
      config_error(std::string("partition groups: ") + e.what());
    }
  } else {
    check_keys(j, "partition", {"type", "include_output_layer", "groups"});
    p.kind = kind_from(read_string(j, "type", "natural"));
    read(j, "include_output_layer", p.include_output_layer);
    read(j, "groups", p.groups);
  }
  return p;
}

json partition_to_json(const PartitionSpec& p) {
  switch (p.kind) {
    case PartitionSpec::Kind::Natural: return "natural";
    case PartitionSpec::Kind::RowGroups:
      return {{"type", "row_groups"}, {"include_output_layer", p.include_output_layer}};
    case PartitionSpec::Kind::ColumnGroups:
      return {{"type", "column_groups"},
              {"include_output_layer", p.include_output_layer}};
    case PartitionSpec::Kind::Explicit: return {{"type", "explicit"}, {"groups", p.groups}};
  }
  return nullptr;
}

void parse_optimizer(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "optimizer", {"rule", "lr", "mode", "prox_tol", "solver"});
  if (j.contains("rule")) {
    const auto& r = j.at("rule");
    check_keys(r, "optimizer.rule",
               {"kind", "mu", "beta1", "beta2", "eps", "momentum_decay"});
    cfg.rule.kind = preconditioner_kind_from_string(read_string(r, "kind", "adam"));
    read(r, "mu", cfg.rule.mu);
    read(r, "beta1", cfg.rule.beta1);
    read(r, "beta2", cfg.rule.beta2);
    read(r, "eps", cfg.rule.eps);
    read(r, "momentum_decay", cfg.rule.momentum_decay);
  }
  if (j.contains("lr")) {
    const auto& l = j.at("lr");
    check_keys(l, "optimizer.lr", {"schedule", "alpha0"});
    const auto s = read_string(l, "schedule", "constant");
    if (s == "constant") {
      cfg.lr.kind = LrSchedule::Kind::Constant;
    } else if (s == "inverse_sqrt") {
      cfg.lr.kind = LrSchedule::Kind::InverseSqrt;
    } else {
      config_error("unknown lr schedule '" + s + "'");
    }
    read(l, "alpha0", cfg.lr.alpha0);
    if (!(cfg.lr.alpha0 > 0.0)) config_error("lr.alpha0 must be positive");
  }
  const auto mode = read_string(j, "mode", "proximal");
  if (mode == "proximal") {
    cfg.mode = UpdateMode::Proximal;
  } else if (mode == "subgradient") {
    cfg.mode = UpdateMode::Subgradient;
  } else {
    config_error("unknown mode '" + mode + "'");
  }
  if (j.contains("prox_tol")) {
    const auto& p = j.at("prox_tol");
    check_keys(p, "optimizer.prox_tol", {"schedule", "eps0", "power"});
    const auto s = read_string(p, "schedule", "constant");
    if (s == "constant") {
      cfg.prox_tol.kind = ProxTolSchedule::Kind::Constant;
    } else if (s == "polynomial") {
      cfg.prox_tol.kind = ProxTolSchedule::Kind::Polynomial;
    } else {
      config_error("unknown prox_tol schedule '" + s + "'");
    }
    read(p, "eps0", cfg.prox_tol.eps0);
    read(p, "power", cfg.prox_tol.power);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    check_keys(s, "optimizer.solver",
               {"method", "tolerance", "max_iters", "fallback_to_bisection",
                "mcp_step_policy"});
    cfg.solver.method = solver_method_from_string(read_string(s, "method", "newton"));
    read(s, "tolerance", cfg.solver.tolerance);
    read(s, "max_iters", cfg.solver.max_iters);
    read(s, "fallback_to_bisection", cfg.solver.fallback_to_bisection);
    const auto policy = read_string(s, "mcp_step_policy", "error");
    if (policy == "error") {
      cfg.solver.mcp_step_policy = McpStepPolicy::Error;
    } else if (policy == "clamp") {
      cfg.solver.mcp_step_policy = McpStepPolicy::Clamp;
    } else {
      config_error("unknown mcp_step_policy '" + policy + "'");
    }
  }
  try {
    cfg.rule.validate();
    cfg.prox_tol.validate();
    cfg.solver.validate();
  } catch (const Error& e) {
    config_error("optimizer: " + e.message());
  }
}

LayeredNetwork linear_network(const ParamVector& x) {
  DenseLayer layer;
  layer.weights = x.transpose();
  layer.bias = Vector<double>::Zero(1);
  layer.activation = Activation::Identity;
  return LayeredNetwork(x.size(), {layer});
}

GroupPartition partition_for(const PartitionSpec& spec, Index n_params,
                             const GroupPartition& natural,
                             const LayeredNetwork* net) {
  switch (spec.kind) {
    case PartitionSpec::Kind::Natural: return natural;
    case PartitionSpec::Kind::Explicit: return GroupPartition(spec.groups, n_params);
    case PartitionSpec::Kind::RowGroups:
    case PartitionSpec::Kind::ColumnGroups:
      if (net == nullptr) {
        config_error("row_groups / column_groups need a network problem");
      }
      return spec.kind == PartitionSpec::Kind::RowGroups
                 ? row_groups(*net, spec.include_output_layer)
                 : column_groups(*net, spec.include_output_layer);
  }
  return natural;
}

// Consumes a fresh permutation of the samples per epoch.
class BatchSampler {
 public:
  BatchSampler(Index n, Index batch, std::uint64_t seed)
      : n_(n), batch_(batch <= 0 || batch >= n ? n : batch), rng_(seed) {}

  bool full() const { return batch_ == n_; }

  std::vector<Index> next() {
    if (full()) return all_indices(n_);
    std::vector<Index> out;
    while (static_cast<Index>(out.size()) < batch_) {
      if (pos_ >= order_.size()) {
        order_ = rng_.permutation(n_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  Index n_;
  Index batch_;
  Rng rng_;
  std::vector<Index> order_;
  std::size_t pos_ = 0;
};

ProxGenConfig proxgen_config(const ExperimentConfig& cfg, const TrainingProblem& problem) {
  ProxGenConfig out;
  out.rule = cfg.rule;
  out.penalty = cfg.penalty;
  out.partition = problem.partition;
  out.solver = cfg.solver;
  out.lr = cfg.lr;
  out.mode = cfg.mode;
  out.prox_tol = cfg.prox_tol;
  return out;
}

Error at_step(const Error& e, long step) {
  return Error(e.code(), "step " + std::to_string(step) + ": " + e.message(), e.group());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
  os << text;
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"seed", "problem", "penalty", "partition", "optimizer", "steps",
              "minibatch_size", "output_dir"});
  ExperimentConfig cfg;
  read(j, "seed", cfg.seed);
  if (j.contains("problem")) cfg.problem = parse_problem(j.at("problem"));
  if (j.contains("penalty")) cfg.penalty = parse_penalty(j.at("penalty"));
  if (j.contains("partition")) cfg.partition = parse_partition(j.at("partition"));
  if (j.contains("optimizer")) parse_optimizer(j.at("optimizer"), cfg);
  read(j, "steps", cfg.steps);
  read(j, "minibatch_size", cfg.minibatch_size);
  std::string out_dir = cfg.output_dir.string();
  read(j, "output_dir", out_dir);
  cfg.output_dir = out_dir;
  if (cfg.steps < 0) config_error("steps must be nonnegative");
  if (cfg.minibatch_size < 0) config_error("minibatch_size must be nonnegative");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) config_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  const auto& p = cfg.problem;
  j["problem"] = {{"generator", p.generator}};
  if (p.generator == "mlp_regression") {
    j["problem"]["widths"] = p.widths;
    j["problem"]["teacher_widths"] = p.teacher_widths;
    j["problem"]["n_samples"] = p.n_samples;
    j["problem"]["init_scale"] = p.init_scale;
    if (!p.init_checkpoint.empty()) j["problem"]["init_checkpoint"] = p.init_checkpoint.string();
  } else {
    j["problem"]["n_groups"] = p.n_groups;
    j["problem"]["group_size"] = p.group_size;
    j["problem"]["n_active"] = p.n_active;
    j["problem"]["m"] = p.m;
  }
  j["problem"]["noise_sigma"] = p.noise_sigma;
  j["penalty"] = {{"kind", to_string(cfg.penalty.kind)},
                  {"lambda", cfg.penalty.lambda},
                  {"beta", cfg.penalty.beta},
                  {"group_weight_rule", to_string(cfg.penalty.group_weight_rule)}};
  j["partition"] = partition_to_json(cfg.partition);
  j["optimizer"] = {
      {"rule",
       {{"kind", to_string(cfg.rule.kind)},
        {"mu", cfg.rule.mu},
        {"beta1", cfg.rule.beta1},
        {"beta2", cfg.rule.beta2},
        {"eps", cfg.rule.eps},
        {"momentum_decay", cfg.rule.momentum_decay}}},
      {"lr",
       {{"schedule", cfg.lr.kind == LrSchedule::Kind::Constant ? "constant" : "inverse_sqrt"},
        {"alpha0", cfg.lr.alpha0}}},
      {"mode", cfg.mode == UpdateMode::Proximal ? "proximal" : "subgradient"},
      {"prox_tol",
       {{"schedule",
         cfg.prox_tol.kind == ProxTolSchedule::Kind::Constant ? "constant" : "polynomial"},
        {"eps0", cfg.prox_tol.eps0},
        {"power", cfg.prox_tol.power}}},
      {"solver",
       {{"method", to_string(cfg.solver.method)},
        {"tolerance", cfg.solver.tolerance},
        {"max_iters", cfg.solver.max_iters},
        {"fallback_to_bisection", cfg.solver.fallback_to_bisection},
        {"mcp_step_policy",
         cfg.solver.mcp_step_policy == McpStepPolicy::Error ? "error" : "clamp"}}}};
  j["steps"] = cfg.steps;
  j["minibatch_size"] = cfg.minibatch_size;
  j["output_dir"] = cfg.output_dir.string();
  return j.dump(2);
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("GROUPPROX_OUTPUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

TrainingProblem build_problem(const ExperimentConfig& cfg) {
  const auto& spec = cfg.problem;
  TrainingProblem out;
  if (spec.generator == "group_sparse_regression" ||
      spec.generator == "group_sparse_logistic") {
    const bool logistic = spec.generator == "group_sparse_logistic";
    std::shared_ptr<const LeastSquaresProblem> ls;
    std::shared_ptr<const LogisticProblem> lg;
    GroupPartition natural;
    Index n = 0;
    if (logistic) {
      lg = std::make_shared<const LogisticProblem>(generate_group_sparse_logistic(
          cfg.seed, spec.n_groups, spec.group_size, spec.n_active, spec.m,
          spec.noise_sigma));
      natural = lg->natural_partition();
      n = lg->n_params();
      out.n_samples = lg->n_samples();
      out.true_support = lg->true_support;
      out.batch_loss = [lg](const ParamVector& x, std::span<const Index> b) {
        return loss_and_grad(*lg, x, b);
      };
      out.full_loss = [lg](const ParamVector& x) { return loss_and_grad(*lg, x); };
    } else {
      ls = std::make_shared<const LeastSquaresProblem>(generate_group_sparse_regression(
          cfg.seed, spec.n_groups, spec.group_size, spec.n_active, spec.m,
          spec.noise_sigma));
      natural = ls->natural_partition();
      n = ls->n_params();
      out.n_samples = ls->n_samples();
      out.true_support = ls->true_support;
      out.batch_loss = [ls](const ParamVector& x, std::span<const Index> b) {
        return loss_and_grad(*ls, x, b);
      };
      out.full_loss = [ls](const ParamVector& x) { return loss_and_grad(*ls, x); };
    }
    out.init = ParamVector::Zero(n);
    out.to_network = linear_network;
    out.partition = partition_for(cfg.partition, n, natural, nullptr);
    return out;
  }

  // mlp_regression: a teacher network labels standard-normal inputs.
  if (spec.widths.front() != spec.teacher_widths.front() ||
      spec.widths.back() != spec.teacher_widths.back()) {
    config_error("student and teacher must share input and output widths");
  }
  if (spec.n_samples < 1) {
    throw Error(ErrorCode::InvalidSizes, "n_samples must be positive");
  }
  Rng rng(cfg.seed);
  const auto teacher = LayeredNetwork::random(rng, spec.teacher_widths);
  auto inputs = std::make_shared<const Matrix<double>>(
      rng.normal_matrix(spec.widths.front(), spec.n_samples));
  Matrix<double> targets = network_forward(teacher, *inputs);
  for (Index c = 0; c < targets.cols(); ++c)
    for (Index r = 0; r < targets.rows(); ++r) targets(r, c) += spec.noise_sigma * rng.normal();
  auto labels = std::make_shared<const Matrix<double>>(std::move(targets));

  LayeredNetwork student =
      spec.init_checkpoint.empty()
          ? LayeredNetwork::random(rng, spec.widths, Activation::Relu,
                                   Activation::Identity, spec.init_scale)
          : load_checkpoint(spec.init_checkpoint);
  if (student.input_dim() != spec.widths.front() ||
      student.output_dim() != spec.widths.back()) {
    config_error("init_checkpoint does not match the configured widths");
  }
  auto arch = std::make_shared<const LayeredNetwork>(student);
  out.n_samples = spec.n_samples;
  out.init = student.flatten();
  out.to_network = [arch](const ParamVector& x) { return arch->with_params(x); };
  out.batch_loss = [arch, inputs, labels](const ParamVector& x,
                                          std::span<const Index> b) {
    if (b.empty()) throw Error(ErrorCode::EmptyMinibatch, "empty minibatch");
    Matrix<double> in(inputs->rows(), static_cast<Index>(b.size()));
    Matrix<double> tg(labels->rows(), static_cast<Index>(b.size()));
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (b[k] < 0 || b[k] >= inputs->cols()) {
        throw Error(ErrorCode::IndexOutOfRange, "sample index out of range");
      }
      in.col(static_cast<Index>(k)) = inputs->col(b[k]);
      tg.col(static_cast<Index>(k)) = labels->col(b[k]);
    }
    return network_loss_and_grad(arch->with_params(x), in, tg);
  };
  out.full_loss = [arch, inputs, labels](const ParamVector& x) {
    return network_loss_and_grad(arch->with_params(x), *inputs, *labels);
  };
  out.partition = partition_for(cfg.partition, student.n_params(),
                                GroupPartition({}, student.n_params()), &student);
  return out;
}

SupportMetrics support_metrics(const ParamVector& x, const GroupPartition& p,
                               const std::vector<std::size_t>& true_support) {
  const std::set<std::size_t> truth(true_support.begin(), true_support.end());
  std::size_t predicted = 0, hits = 0;
  for (std::size_t g = 0; g < p.size(); ++g) {
    if (group_l2_norm(x, p.group(g)) > 0.0) {
      ++predicted;
      if (truth.count(g)) ++hits;
    }
  }
  SupportMetrics s;
  s.precision = predicted == 0 ? (truth.empty() ? 1.0 : 0.0)
                               : static_cast<double>(hits) / static_cast<double>(predicted);
  s.recall = truth.empty() ? 1.0
                           : static_cast<double>(hits) / static_cast<double>(truth.size());
  s.f1 = s.precision + s.recall == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

TrainingRun run_training(const ExperimentConfig& cfg) {
  return run_training(cfg, build_problem(cfg));
}

TrainingRun run_training(const ExperimentConfig& cfg, const TrainingProblem& problem) {
  const auto start = std::chrono::steady_clock::now();
  const ProxGenConfig opt = proxgen_config(cfg, problem);
  BatchSampler sampler(problem.n_samples, cfg.minibatch_size, cfg.seed ^ 0x5eedba7cULL);

  TrainingRun run;
  run.x = problem.init;
  OptimizerState state = OptimizerState::zeros(run.x.size());
  for (long t = 1; t <= cfg.steps; ++t) {
    try {
      const auto batch = sampler.next();
      const auto lg = problem.batch_loss(run.x, batch);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
        throw Error(ErrorCode::NonFinite, "non-finite loss or gradient");
      }
      StepResult step = opt.mode == UpdateMode::Proximal
                            ? proxgen_step(state, run.x, lg.grad, opt)
                            : subgradient_step(state, run.x, lg.grad, opt);
      const auto full = problem.full_loss(step.x_next);
      if (!std::isfinite(full.loss) || !step.x_next.allFinite()) {
        throw Error(ErrorCode::NonFinite, "iterate diverged");
      }
      MetricsRow row;
      row.step = t;
      row.loss = full.loss;
      row.penalty = penalty_value(step.x_next, problem.partition, cfg.penalty);
      row.objective = row.loss + row.penalty;
      row.group_sparsity = group_sparsity(step.x_next, problem.partition);
      row.mean_prox_iters = step.prox.iterations_per_group();
      if (opt.mode == UpdateMode::Proximal && sampler.full()) {
        row.stationarity_residual = stationarity_residual(
            step.x_next, run.x, step.m, step.D, step.alpha, full.grad);
      }
      run.metrics.push_back(row);
      run.x = std::move(step.x_next);
    } catch (const Error& e) {
      throw at_step(e, t);
    }
  }
  run.network = problem.to_network(run.x);
  if (problem.true_support) {
    run.support = support_metrics(run.x, problem.partition, *problem.true_support);
  }
  run.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out =
      "step,loss,penalty,objective,group_sparsity,mean_prox_iters,stationarity_residual\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + ',' + format_double(r.loss) + ',' +
           format_double(r.penalty) + ',' + format_double(r.objective) + ',' +
           format_double(r.group_sparsity) + ',' + format_double(r.mean_prox_iters) +
           ',' + (r.stationarity_residual ? format_double(*r.stationarity_residual) : "") +
           '\n';
  }
  return out;
}

std::string summary_json(const ExperimentConfig& cfg, const TrainingProblem& problem,
                         const TrainingRun& run) {
  // Numbers go through format_double so the file is reproducible byte for byte.
  std::ostringstream os;
  const auto& last = run.metrics.empty() ? MetricsRow{} : run.metrics.back();
  std::size_t zero_groups = 0;
  for (std::size_t g = 0; g < problem.partition.size(); ++g) {
    if (group_l2_norm(run.x, problem.partition.group(g)) == 0.0) ++zero_groups;
  }
  os << "{\n";
  os << "  \"steps\": " << cfg.steps << ",\n";
  os << "  \"mode\": \"" << (cfg.mode == UpdateMode::Proximal ? "proximal" : "subgradient")
     << "\",\n";
  if (!run.metrics.empty()) {
    os << "  \"final_loss\": " << format_double(last.loss) << ",\n";
    os << "  \"final_penalty\": " << format_double(last.penalty) << ",\n";
    os << "  \"final_objective\": " << format_double(last.objective) << ",\n";
  }
  os << "  \"n_groups\": " << problem.partition.size() << ",\n";
  os << "  \"exact_zero_groups\": " << zero_groups << ",\n";
  os << "  \"group_sparsity\": {";
  const double tols[] = {0.0, 1e-8, 1e-4, 1e-2};
  for (std::size_t k = 0; k < 4; ++k) {
    os << (k ? ", " : "") << '"' << format_double(tols[k])
       << "\": " << format_double(group_sparsity(run.x, problem.partition, tols[k]));
  }
  os << "},\n";
  if (run.support) {
    os << "  \"support\": {\"precision\": " << format_double(run.support->precision)
       << ", \"recall\": " << format_double(run.support->recall)
       << ", \"f1\": " << format_double(run.support->f1) << "},\n";
  }
  os << "  \"wall_time_seconds\": " << format_double(run.wall_time_seconds) << "\n";
  os << "}\n";
  return os.str();
}

void write_training_outputs(const ExperimentConfig& cfg, const TrainingProblem& problem,
                            const TrainingRun& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "metrics.csv", metrics_csv(run.metrics));
  write_file(dir / "summary.json", summary_json(cfg, problem, run));
  save_checkpoint(run.network, dir / "final.ckpt");
}

std::vector<BenchRow> run_bench_solvers(const ExperimentConfig& cfg) {
  return run_bench_solvers(cfg, build_problem(cfg));
}

std::vector<BenchRow> run_bench_solvers(const ExperimentConfig& cfg,
                                        const TrainingProblem& problem) {
  const ProxGenConfig opt = proxgen_config(cfg, problem);
  opt.prox_tol.validate();
  BatchSampler sampler(problem.n_samples, cfg.minibatch_size, cfg.seed ^ 0x5eedba7cULL);
  ParamVector x = problem.init;
  OptimizerState state = OptimizerState::zeros(x.size());
  std::vector<BenchRow> rows;
  for (long t = 1; t <= cfg.steps; ++t) {
    try {
      const auto batch = sampler.next();
      const auto lg = problem.batch_loss(x, batch);
      auto moments = update_moments(state, lg.grad, opt.rule);
      state.alpha = opt.lr.at(state.t);
      const ParamVector x_hat = preconditioned_step(x, moments, state.alpha);
      SolverConfig solver = opt.solver;
      solver.tolerance = opt.prox_tol.at(state.t);
      auto run_with = [&](SolverMethod method) {
        SolverConfig s = solver;
        s.method = method;
        return weighted_prox_full(x_hat, opt.partition, opt.penalty, moments.D,
                                  state.alpha, s);
      };
      auto newton = run_with(SolverMethod::Newton);
      const auto bisection = run_with(SolverMethod::Bisection);
      const auto adaprox = run_with(SolverMethod::AdaProx);
      rows.push_back({t, newton.summary.iterations_per_group(),
                      bisection.summary.iterations_per_group(),
                      adaprox.summary.iterations_per_group()});
      x = std::move(newton.x);
    } catch (const Error& e) {
      throw at_step(e, t);
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "step,newton_iters_per_group,bisection_iters_per_group,adaprox_iters_per_group\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + ',' + format_double(r.newton) + ',' +
           format_double(r.bisection) + ',' + format_double(r.adaprox) + '\n';
  }
  return out;
}

std::string prune_report_json(const PruneReport& report) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"original_params\": " << report.original_params << ",\n";
  os << "  \"pruned_params\": " << report.pruned_params << ",\n";
  os << "  \"direct_params\": " << report.direct_params << ",\n";
  os << "  \"direct_group_sparsity\": " << format_double(report.direct_group_sparsity) << ",\n";
  os << "  \"effective_sparsity\": " << format_double(report.effective_sparsity) << ",\n";
  os << "  \"direct_param_fraction\": " << format_double(report.direct_param_fraction)
     << ",\n";
  os << "  \"per_layer\": [";
  for (std::size_t l = 0; l < report.per_layer.size(); ++l) {
    const auto& info = report.per_layer[l];
    auto list = [](const std::vector<Index>& v) {
      std::string s = "[";
      for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
      return s + "]";
    };
    os << (l ? ",\n" : "\n") << "    {\"layer\": " << l
       << ", \"original_shape\": [" << info.original_shape.first << ", "
       << info.original_shape.second << "], \"pruned_shape\": ["
       << info.pruned_shape.first << ", " << info.pruned_shape.second
       << "], \"kept_rows\": " << list(info.kept_rows)
       << ", \"kept_cols\": " << list(info.kept_cols)
       << ", \"kept_weight_fraction\": " << format_double(info.kept_weight_fraction())
       << ", \"direct_weight_fraction\": " << format_double(info.direct_weight_fraction())
       << "}";
  }
  os << "\n  ]\n}\n";
  return os.str();
}

std::string prune_layers_csv(const PruneReport& report) {
  std::string out = "layer,original_params,pruned_params\n";
  for (std::size_t l = 0; l < report.per_layer.size(); ++l) {
    out += std::to_string(l) + ',' + std::to_string(report.per_layer[l].original_params) +
           ',' + std::to_string(report.per_layer[l].pruned_params) + '\n';
  }
  return out;
}

PruneCommandResult prune_network(const LayeredNetwork& net, GroupOrientation orientation,
                                 double zero_tol, bool fold_constant_units) {
  const auto partition =
      orientation == GroupOrientation::Row ? row_groups(net) : column_groups(net);
  const auto masks = zero_group_masks(net, partition, zero_tol);
  PruneOptions options;
  options.fold_constant_units = fold_constant_units;
  PruneCommandResult out{propagate_and_prune(net, masks, options), {}, {}};
  out.report_json = prune_report_json(out.pruned.report);
  out.per_layer_csv = prune_layers_csv(out.pruned.report);
  return out;
}

}  // namespace groupprox
