#include "tskit/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "tskit/models.hpp"

namespace tskit::cli {

namespace {

[[noreturn]] void fail(const std::string& what, const YAML::Node& at) {
  const YAML::Mark mark = at.Mark();
  if (mark.is_null()) throw ConfigError(what);
  throw ConfigError(what, mark.line + 1, mark.column + 1);
}

// A mapping whose keys are checked against an allow-list before any value
// is read.
class Section {
 public:
  Section(const YAML::Node& node, std::string name, const std::set<std::string>& allowed)
      : node_(node), name_(std::move(name)) {
    if (!node_.IsMap()) fail("section '" + name_ + "' must be a mapping", node_);
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail("unknown key '" + key + "' in section '" + name_ + "'", kv.first);
    }
  }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }
  YAML::Node operator[](const std::string& key) const { return node_[key]; }
  const YAML::Node& node() const { return node_; }
  const std::string& name() const { return name_; }

  template <class T>
  T scalar(const std::string& key, T fallback) const {
    const YAML::Node v = node_[key];
    if (!v) return fallback;
    if (!v.IsScalar()) fail("key '" + key + "' in section '" + name_ + "' must be a scalar", v);
    try {
      return v.as<T>();
    } catch (const YAML::BadConversion&) {
      fail("key '" + key + "' in section '" + name_ + "' has the wrong type", v);
    }
  }

  std::vector<double> vector(const std::string& key) const {
    const YAML::Node v = node_[key];
    std::vector<double> out;
    if (v.IsScalar()) {
      out.push_back(convert_double(v, key));
      return out;
    }
    if (!v.IsSequence()) fail("key '" + key + "' in section '" + name_ + "' must be a list of numbers", v);
    for (const auto& item : v) out.push_back(convert_double(item, key));
    return out;
  }

 private:
  double convert_double(const YAML::Node& v, const std::string& key) const {
    if (!v.IsScalar()) fail("key '" + key + "' in section '" + name_ + "' must hold numbers", v);
    try {
      return v.as<double>();
    } catch (const YAML::BadConversion&) {
      fail("key '" + key + "' in section '" + name_ + "' must hold numbers", v);
    }
  }

  YAML::Node node_;
  std::string name_;
};

const std::set<std::string> kRpmKeys = {"tolerance",      "max_iterations", "max_basis",         "grow_threshold",
                                        "drop_threshold", "history_length", "warmup_iterations", "refresh_interval"};

RpmSettings read_rpm(const Section& s, RpmSettings r = {}) {
  r.tolerance = s.scalar("tolerance", r.tolerance);
  r.max_iterations = s.scalar("max_iterations", r.max_iterations);
  r.max_basis = s.scalar("max_basis", r.max_basis);
  r.grow_threshold = s.scalar("grow_threshold", r.grow_threshold);
  r.drop_threshold = s.scalar("drop_threshold", r.drop_threshold);
  r.history_length = s.scalar("history_length", r.history_length);
  r.warmup_iterations = s.scalar("warmup_iterations", r.warmup_iterations);
  r.refresh_interval = s.scalar("refresh_interval", r.refresh_interval);
  try {
    r.to_options().validate();
  } catch (const Error& e) {
    fail(std::string("invalid solver settings: ") + e.what(), s.node());
  }
  return r;
}

RpmSettings read_nested_rpm(const Section& task) {
  if (!task.has("rpm")) return {};
  return read_rpm(Section(task["rpm"], "rpm", kRpmKeys));
}

std::set<std::string> with(std::set<std::string> base, std::initializer_list<const char*> extra) {
  for (const char* e : extra) base.insert(e);
  return base;
}

ModelKind parse_model_kind(const std::string& kind, const YAML::Node& at) {
  if (kind == "linear_map") return ModelKind::LinearMap;
  if (kind == "quadratic_map") return ModelKind::QuadraticMap;
  if (kind == "forced_oscillator") return ModelKind::ForcedOscillator;
  if (kind == "adsorption_column") return ModelKind::AdsorptionColumn;
  fail("unknown model kind '" + kind + "'", at);
}

ModelConfig read_model(const YAML::Node& node) {
  if (!node || !node.IsMap()) fail("missing or malformed 'model' section", node);
  const YAML::Node kind_node = node["kind"];
  if (!kind_node) fail("section 'model' is missing required key 'kind'", node);
  ModelConfig m;
  m.kind = parse_model_kind(kind_node.as<std::string>(), kind_node);

  const std::set<std::string> common = {"kind", "parameters", "initial_state"};
  std::set<std::string> allowed;
  switch (m.kind) {
    case ModelKind::LinearMap:
      allowed = with(common, {"eigenvalues", "complex_pairs", "offset", "fixed_point", "conjugation_seed", "lambda_slot"});
      break;
    case ModelKind::QuadraticMap: allowed = with(common, {"dimension"}); break;
    case ModelKind::ForcedOscillator: allowed = with(common, {"n_steps"}); break;
    case ModelKind::AdsorptionColumn: allowed = with(common, {"n_z", "length", "dt"}); break;
  }
  const Section s(node, "model", allowed);

  switch (m.kind) {
    case ModelKind::LinearMap: {
      if (s.has("eigenvalues")) m.eigenvalues = s.vector("eigenvalues");
      if (s.has("complex_pairs")) {
        const YAML::Node pairs = s["complex_pairs"];
        if (!pairs.IsSequence()) fail("'complex_pairs' must be a list of [r, theta] pairs", pairs);
        for (const auto& pr : pairs) {
          if (!pr.IsSequence() || pr.size() != 2) fail("each complex pair must be [r, theta]", pr);
          try {
            m.complex_pairs.emplace_back(pr[0].as<double>(), pr[1].as<double>());
          } catch (const YAML::BadConversion&) {
            fail("complex pair entries must be numbers", pr);
          }
        }
      }
      if (m.eigenvalues.empty() && m.complex_pairs.empty()) {
        fail("linear_map needs 'eigenvalues' and/or 'complex_pairs'", node);
      }
      if (s.has("offset")) m.offset = s.vector("offset");
      if (s.has("fixed_point")) m.fixed_point = s.vector("fixed_point");
      if (m.offset && m.fixed_point) fail("give either 'offset' or 'fixed_point', not both", node);
      if (s.has("conjugation_seed")) m.conjugation_seed = s.scalar<std::uint64_t>("conjugation_seed", 0);
      if (s.has("lambda_slot")) m.lambda_slot = s.scalar<int>("lambda_slot", 0);
      break;
    }
    case ModelKind::QuadraticMap:
      m.dimension = s.scalar("dimension", m.dimension);
      if (m.dimension < 1) fail("'dimension' must be >= 1", s["dimension"]);
      break;
    case ModelKind::ForcedOscillator:
      m.n_steps = s.scalar("n_steps", m.n_steps);
      if (m.n_steps < 1) fail("'n_steps' must be >= 1", s["n_steps"]);
      break;
    case ModelKind::AdsorptionColumn:
      m.n_z = s.scalar("n_z", m.n_z);
      m.length = s.scalar("length", m.length);
      m.dt = s.scalar("dt", m.dt);
      if (m.n_z < 2) fail("'n_z' must be >= 2", s["n_z"]);
      if (!(m.length > 0.0)) fail("'length' must be positive", s["length"]);
      if (!(m.dt > 0.0)) fail("'dt' must be positive", s["dt"]);
      break;
  }

  if (s.has("parameters")) {
    const YAML::Node params = s["parameters"];
    if (!params.IsMap()) fail("'parameters' must be a mapping of name: value", params);
    const auto names = known_parameters(m.kind);
    for (const auto& kv : params) {
      const auto key = kv.first.as<std::string>();
      if (std::find(names.begin(), names.end(), key) == names.end()) {
        fail("unknown parameter '" + key + "' for model " + to_string(m.kind), kv.first);
      }
      try {
        m.parameters[key] = kv.second.as<double>();
      } catch (const YAML::BadConversion&) {
        fail("parameter '" + key + "' must be a number", kv.second);
      }
    }
  }
  if (s.has("initial_state")) m.initial_state = s.vector("initial_state");
  return m;
}

TaskConfig read_task(const YAML::Node& node) {
  if (!node || !node.IsMap()) fail("missing or malformed 'task' section", node);
  const YAML::Node kind_node = node["kind"];
  if (!kind_node) fail("section 'task' is missing required key 'kind'", node);
  const auto kind = kind_node.as<std::string>();

  if (kind == "simulate") {
    const Section s(node, "task", {"kind", "n_cycles", "samples_per_cycle"});
    SimulateTask t;
    t.n_cycles = s.scalar("n_cycles", t.n_cycles);
    t.samples_per_cycle = s.scalar("samples_per_cycle", t.samples_per_cycle);
    if (t.n_cycles < 1) fail("'n_cycles' must be >= 1", s["n_cycles"]);
    if (t.samples_per_cycle < 0) fail("'samples_per_cycle' must be >= 0", s["samples_per_cycle"]);
    return t;
  }
  if (kind == "fixed-point") {
    const Section s(node, "task", with(kRpmKeys, {"kind", "method", "warm_cycles", "max_cycles"}));
    FixedPointTask t;
    const auto method = s.scalar<std::string>("method", "rpm");
    if (method == "rpm") {
      t.method = FixedPointMethod::Rpm;
    } else if (method == "direct") {
      t.method = FixedPointMethod::Direct;
    } else {
      fail("'method' must be 'rpm' or 'direct'", s["method"]);
    }
    t.rpm = read_rpm(s);
    t.warm_cycles = s.scalar("warm_cycles", t.warm_cycles);
    t.max_cycles = s.scalar("max_cycles", t.max_cycles);
    if (t.warm_cycles < 0) fail("'warm_cycles' must be >= 0", s["warm_cycles"]);
    if (t.max_cycles < 1) fail("'max_cycles' must be >= 1", s["max_cycles"]);
    return t;
  }
  if (kind == "eigs") {
    const Section s(node, "task", {"kind", "k", "stability_margin", "solve_first", "rpm", "start"});
    EigsTask t;
    t.k = s.scalar("k", t.k);
    t.stability_margin = s.scalar("stability_margin", t.stability_margin);
    t.solve_first = s.scalar("solve_first", t.solve_first);
    t.rpm = read_nested_rpm(s);
    if (s.has("start")) {
      const YAML::Node st = s["start"];
      if (st.IsSequence()) {
        t.start = "vector";
        t.start_vector = s.vector("start");
      } else {
        t.start = s.scalar<std::string>("start", "ones");
        if (t.start != "ones" && t.start != "random") fail("'start' must be ones, random or a list", st);
      }
    }
    if (t.k < 1) fail("'k' must be >= 1", s["k"]);
    return t;
  }
  if (kind == "continue") {
    const Section s(node, "task",
                    {"kind", "parameter", "lambda_min", "lambda_max", "step", "step_min", "step_max", "fold_step", "max_points",
                     "max_corrector_iterations", "tolerance", "theta", "arnoldi_steps", "multipliers", "refine_folds",
                     "rpm"});
    ContinueTask t;
    t.parameter = s.scalar("parameter", t.parameter);
    t.lambda_min = s.scalar("lambda_min", t.lambda_min);
    t.lambda_max = s.scalar("lambda_max", t.lambda_max);
    t.step = s.scalar("step", t.step);
    t.step_min = s.scalar("step_min", t.step_min);
    t.fold_step = s.scalar("fold_step", t.fold_step);
    t.step_max = s.scalar("step_max", t.step_max);
    t.max_points = s.scalar("max_points", t.max_points);
    t.max_corrector_iterations = s.scalar("max_corrector_iterations", t.max_corrector_iterations);
    t.tolerance = s.scalar("tolerance", t.tolerance);
    t.theta = s.scalar("theta", t.theta);
    t.arnoldi_steps = s.scalar("arnoldi_steps", t.arnoldi_steps);
    t.multipliers = s.scalar("multipliers", t.multipliers);
    t.refine_folds = s.scalar("refine_folds", t.refine_folds);
    t.rpm = read_nested_rpm(s);
    if (t.lambda_min > t.lambda_max) fail("'lambda_min' exceeds 'lambda_max'", node);
    if (t.multipliers < 0) fail("'multipliers' must be >= 0", s["multipliers"]);
    return t;
  }
  if (kind == "projective") {
    const Section s(node, "task",
                    {"kind", "inner_steps", "jump", "max_rounds", "tolerance", "adaptive", "chord_points"});
    ProjectiveTask t;
    t.inner_steps = s.scalar("inner_steps", t.inner_steps);
    t.jump = s.scalar("jump", t.jump);
    t.max_rounds = s.scalar("max_rounds", t.max_rounds);
    t.tolerance = s.scalar("tolerance", t.tolerance);
    t.adaptive = s.scalar("adaptive", t.adaptive);
    t.chord_points = s.scalar("chord_points", t.chord_points);
    try {
      t.to_schedule().validate();
    } catch (const Error& e) {
      fail(std::string("invalid projective schedule: ") + e.what(), node);
    }
    return t;
  }
  fail("unknown task kind '" + kind + "' (expected simulate, fixed-point, eigs, continue or projective)", kind_node);
}

OutputConfig read_output(const YAML::Node& node) {
  OutputConfig o;
  if (!node) return o;
  const Section s(node, "output", {"directory", "prefix", "stride"});
  o.directory = s.scalar("directory", o.directory);
  o.prefix = s.scalar("prefix", o.prefix);
  o.stride = s.scalar("stride", o.stride);
  if (o.stride < 1) fail("'stride' must be >= 1", s["stride"]);
  if (o.prefix.empty()) fail("'prefix' must not be empty", s["prefix"]);
  return o;
}

void emit_vector(YAML::Emitter& e, const std::vector<double>& v) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : v) e << x;
  e << YAML::EndSeq;
}

void emit_rpm(YAML::Emitter& e, const RpmSettings& r) {
  e << YAML::Key << "tolerance" << YAML::Value << r.tolerance;
  e << YAML::Key << "max_iterations" << YAML::Value << r.max_iterations;
  e << YAML::Key << "max_basis" << YAML::Value << r.max_basis;
  e << YAML::Key << "grow_threshold" << YAML::Value << r.grow_threshold;
  e << YAML::Key << "drop_threshold" << YAML::Value << r.drop_threshold;
  e << YAML::Key << "history_length" << YAML::Value << r.history_length;
  e << YAML::Key << "warmup_iterations" << YAML::Value << r.warmup_iterations;
  e << YAML::Key << "refresh_interval" << YAML::Value << r.refresh_interval;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LinearMap: return "linear_map";
    case ModelKind::QuadraticMap: return "quadratic_map";
    case ModelKind::ForcedOscillator: return "forced_oscillator";
    case ModelKind::AdsorptionColumn: return "adsorption_column";
  }
  return "unknown";
}

RpmOptions RpmSettings::to_options() const {
  RpmOptions o;
  o.tolerance = tolerance;
  o.max_iterations = max_iterations;
  o.max_basis = max_basis;
  o.grow_threshold = grow_threshold;
  o.drop_threshold = drop_threshold;
  o.history_length = history_length;
  o.warmup_iterations = warmup_iterations;
  o.refresh_interval = refresh_interval;
  return o;
}

ProjectiveSchedule ProjectiveTask::to_schedule() const {
  ProjectiveSchedule s;
  s.inner_steps = inner_steps;
  s.jump = jump;
  s.max_rounds = max_rounds;
  s.tolerance = tolerance;
  s.adaptive = adaptive;
  s.chord_points = chord_points;
  return s;
}

std::string task_name(const TaskConfig& task) {
  static const char* const names[] = {"simulate", "fixed-point", "eigs", "continue", "projective"};
  return names[task.index()];
}

std::vector<std::string> known_parameters(ModelKind kind) {
  switch (kind) {
    case ModelKind::LinearMap:
    case ModelKind::QuadraticMap: return {"lambda"};
    case ModelKind::ForcedOscillator: return {"zeta", "omega0", "omega", "f"};
    case ModelKind::AdsorptionColumn:
      return {"t_press", "t_blow", "v_feed", "v_blow", "c_feed", "c_purge", "q_sat", "K_L", "k_ldf", "phase_ratio"};
  }
  return {};
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("malformed YAML: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root || !root.IsMap()) throw ConfigError("configuration must be a YAML mapping");
  const Section top(root, "top level", {"model", "task", "output", "seed"});
  try {
    RunConfig c;
    c.model = read_model(root["model"]);
    c.task = read_task(root["task"]);
    c.output = read_output(root["output"]);
    c.seed = top.scalar<std::uint64_t>("seed", 0);
    return c;
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;

  const ModelConfig& m = c.model;
  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << to_string(m.kind);
  switch (m.kind) {
    case ModelKind::LinearMap:
      if (!m.eigenvalues.empty()) {
        e << YAML::Key << "eigenvalues" << YAML::Value;
        emit_vector(e, m.eigenvalues);
      }
      if (!m.complex_pairs.empty()) {
        e << YAML::Key << "complex_pairs" << YAML::Value << YAML::BeginSeq;
        for (const auto& [r, th] : m.complex_pairs) emit_vector(e, {r, th});
        e << YAML::EndSeq;
      }
      if (m.offset) {
        e << YAML::Key << "offset" << YAML::Value;
        emit_vector(e, *m.offset);
      }
      if (m.fixed_point) {
        e << YAML::Key << "fixed_point" << YAML::Value;
        emit_vector(e, *m.fixed_point);
      }
      if (m.conjugation_seed) e << YAML::Key << "conjugation_seed" << YAML::Value << *m.conjugation_seed;
      if (m.lambda_slot) e << YAML::Key << "lambda_slot" << YAML::Value << *m.lambda_slot;
      break;
    case ModelKind::QuadraticMap: e << YAML::Key << "dimension" << YAML::Value << m.dimension; break;
    case ModelKind::ForcedOscillator: e << YAML::Key << "n_steps" << YAML::Value << m.n_steps; break;
    case ModelKind::AdsorptionColumn:
      e << YAML::Key << "n_z" << YAML::Value << m.n_z;
      e << YAML::Key << "length" << YAML::Value << m.length;
      e << YAML::Key << "dt" << YAML::Value << m.dt;
      break;
  }
  if (!m.parameters.empty()) {
    e << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : m.parameters) e << YAML::Key << k << YAML::Value << v;
    e << YAML::EndMap;
  }
  if (m.initial_state) {
    e << YAML::Key << "initial_state" << YAML::Value;
    emit_vector(e, *m.initial_state);
  }
  e << YAML::EndMap;

  e << YAML::Key << "task" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << task_name(c.task);
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SimulateTask>) {
          e << YAML::Key << "n_cycles" << YAML::Value << t.n_cycles;
          e << YAML::Key << "samples_per_cycle" << YAML::Value << t.samples_per_cycle;
        } else if constexpr (std::is_same_v<T, FixedPointTask>) {
          e << YAML::Key << "method" << YAML::Value << (t.method == FixedPointMethod::Rpm ? "rpm" : "direct");
          emit_rpm(e, t.rpm);
          e << YAML::Key << "warm_cycles" << YAML::Value << t.warm_cycles;
          e << YAML::Key << "max_cycles" << YAML::Value << t.max_cycles;
        } else if constexpr (std::is_same_v<T, EigsTask>) {
          e << YAML::Key << "k" << YAML::Value << t.k;
          e << YAML::Key << "stability_margin" << YAML::Value << t.stability_margin;
          e << YAML::Key << "solve_first" << YAML::Value << t.solve_first;
          if (t.start == "vector") {
            e << YAML::Key << "start" << YAML::Value;
            emit_vector(e, t.start_vector);
          } else {
            e << YAML::Key << "start" << YAML::Value << t.start;
          }
          e << YAML::Key << "rpm" << YAML::Value << YAML::BeginMap;
          emit_rpm(e, t.rpm);
          e << YAML::EndMap;
        } else if constexpr (std::is_same_v<T, ContinueTask>) {
          e << YAML::Key << "parameter" << YAML::Value << t.parameter;
          e << YAML::Key << "lambda_min" << YAML::Value << t.lambda_min;
          e << YAML::Key << "lambda_max" << YAML::Value << t.lambda_max;
          e << YAML::Key << "step" << YAML::Value << t.step;
          e << YAML::Key << "step_min" << YAML::Value << t.step_min;
          e << YAML::Key << "fold_step" << YAML::Value << t.fold_step;
          e << YAML::Key << "step_max" << YAML::Value << t.step_max;
          e << YAML::Key << "max_points" << YAML::Value << t.max_points;
          e << YAML::Key << "max_corrector_iterations" << YAML::Value << t.max_corrector_iterations;
          e << YAML::Key << "tolerance" << YAML::Value << t.tolerance;
          e << YAML::Key << "theta" << YAML::Value << t.theta;
          e << YAML::Key << "arnoldi_steps" << YAML::Value << t.arnoldi_steps;
          e << YAML::Key << "multipliers" << YAML::Value << t.multipliers;
          e << YAML::Key << "refine_folds" << YAML::Value << t.refine_folds;
          e << YAML::Key << "rpm" << YAML::Value << YAML::BeginMap;
          emit_rpm(e, t.rpm);
          e << YAML::EndMap;
        } else {
          e << YAML::Key << "inner_steps" << YAML::Value << t.inner_steps;
          e << YAML::Key << "jump" << YAML::Value << t.jump;
          e << YAML::Key << "max_rounds" << YAML::Value << t.max_rounds;
          e << YAML::Key << "tolerance" << YAML::Value << t.tolerance;
          e << YAML::Key << "adaptive" << YAML::Value << t.adaptive;
          e << YAML::Key << "chord_points" << YAML::Value << t.chord_points;
        }
      },
      c.task);
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "directory" << YAML::Value << YAML::DoubleQuoted << c.output.directory;
  e << YAML::Key << "prefix" << YAML::Value << YAML::DoubleQuoted << c.output.prefix;
  e << YAML::Key << "stride" << YAML::Value << c.output.stride;
  e << YAML::EndMap;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::unique_ptr<Timestepper> build_model(const ModelConfig& m) {
  switch (m.kind) {
    case ModelKind::LinearMap: {
      LinearMapSpec spec;
      spec.real_eigenvalues = m.eigenvalues;
      spec.complex_pairs = m.complex_pairs;
      if (m.offset) spec.offset = Eigen::Map<const StateVector>(m.offset->data(), static_cast<Eigen::Index>(m.offset->size()));
      if (m.fixed_point) {
        spec.fixed_point =
            Eigen::Map<const StateVector>(m.fixed_point->data(), static_cast<Eigen::Index>(m.fixed_point->size()));
      }
      spec.conjugation_seed = m.conjugation_seed;
      spec.lambda_slot = m.lambda_slot;
      return std::make_unique<LinearMapModel>(std::move(spec));
    }
    case ModelKind::QuadraticMap: {
      const double lambda = m.parameters.count("lambda") ? m.parameters.at("lambda") : 0.0;
      return std::make_unique<QuadraticMap>(static_cast<std::size_t>(m.dimension), lambda);
    }
    case ModelKind::ForcedOscillator: {
      ForcedOscillatorSpec spec;
      spec.n_steps = m.n_steps;
      if (m.parameters.count("zeta")) spec.zeta = m.parameters.at("zeta");
      if (m.parameters.count("omega0")) spec.omega0 = m.parameters.at("omega0");
      if (m.parameters.count("omega")) spec.omega = m.parameters.at("omega");
      if (m.parameters.count("f")) spec.forcing = m.parameters.at("f");
      return std::make_unique<ForcedOscillatorModel>(spec);
    }
    case ModelKind::AdsorptionColumn: {
      AdsorptionGeometry g{m.n_z, m.length, m.dt};
      Parameters defaults = AdsorptionColumnModel::default_values();
      for (const auto& [k, v] : m.parameters) defaults.set(k, v);
      return std::make_unique<AdsorptionColumnModel>(g, defaults);
    }
  }
  throw ConfigError("unknown model kind");
}

Parameters build_parameters(const Timestepper& model, const ModelConfig& config) {
  Parameters p = model.default_parameters();
  for (const auto& [k, v] : config.parameters) {
    if (config.kind == ModelKind::LinearMap && !config.lambda_slot) {
      throw ConfigError("parameter 'lambda' needs 'lambda_slot' on a linear_map model");
    }
    p.set(k, v);
  }
  return p;
}

StateVector build_initial_state(const Timestepper& model, const ModelConfig& config) {
  const auto n = static_cast<Eigen::Index>(model.dimension());
  if (!config.initial_state) return model.default_initial_state();
  const auto& v = *config.initial_state;
  if (v.size() == 1) return StateVector::Constant(n, v[0]);
  if (static_cast<Eigen::Index>(v.size()) != n) {
    throw ConfigError("'initial_state' has " + std::to_string(v.size()) + " entries, model dimension is " +
                      std::to_string(n));
  }
  return Eigen::Map<const StateVector>(v.data(), n);
}

}  // namespace tskit::cli
