#include "tskit/cli/runner.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "tskit/arnoldi.hpp"
#include "tskit/cli/csv.hpp"
#include "tskit/continuation.hpp"
#include "tskit/models.hpp"
#include "tskit/projective.hpp"
#include "tskit/rpm.hpp"

namespace tskit::cli {

namespace {

struct Context {
  const RunConfig& config;
  const Timestepper& model;
  Parameters params;
  StateVector u0;
  RunReport& report;

  std::string path(const std::string& suffix) const {
    return (std::filesystem::path(config.output.directory) / (config.output.prefix + "_" + suffix + ".csv")).string();
  }

  void emit(const std::string& suffix, const std::vector<std::string>& header, const std::vector<CsvRow>& rows) {
    const std::string p = path(suffix);
    write_csv(p, header, rows);
    report.csv_paths.push_back(p);
  }

  void headline(const std::string& key, const std::string& value) { report.headline.emplace_back(key, value); }
  void headline(const std::string& key, double value) { headline(key, format_double(value)); }
  void headline(const std::string& key, std::int64_t value) { headline(key, std::to_string(value)); }

  std::vector<std::string> state_header() const {
    std::vector<std::string> h;
    for (Eigen::Index i = 0; i < u0.size(); i += config.output.stride) h.push_back("u" + std::to_string(i));
    return h;
  }

  void append_state(CsvRow& row, const StateVector& u) const {
    for (Eigen::Index i = 0; i < u.size(); i += config.output.stride) row.emplace_back(u[i]);
  }
};

std::string format_complex(const Complex& z) {
  std::ostringstream s;
  s << format_double(z.real());
  if (z.imag() != 0.0) s << (z.imag() < 0 ? "-" : "+") << format_double(std::abs(z.imag())) << "i";
  return s.str();
}

std::string format_multipliers(const std::vector<Complex>& values, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < std::min(count, values.size()); ++i) {
    if (i) out += " ";
    out += format_complex(values[i]);
  }
  return out.empty() ? "-" : out;
}

void note_balance(Context& ctx) {
  if (const auto* column = dynamic_cast<const AdsorptionColumnModel*>(&ctx.model)) {
    ctx.headline("max_mass_balance_error", column->max_balance_error());
  }
}

void run_simulate(Context& ctx, const SimulateTask& t) {
  std::vector<std::string> header = {"cycle", "time", "kind"};
  for (auto& h : ctx.state_header()) header.push_back(h);
  std::vector<CsvRow> rows;
  const double period = ctx.model.period();

  StateVector u = ctx.u0;
  CsvRow first = {std::int64_t{0}, 0.0, std::string("initial")};
  ctx.append_state(first, u);
  rows.push_back(std::move(first));

  double change = 0.0;
  for (int c = 1; c <= t.n_cycles; ++c) {
    StateVector next;
    if (t.samples_per_cycle > 0) {
      std::vector<CycleSample> samples;
      next = ctx.model.evaluate_sampled(u, ctx.params, t.samples_per_cycle, samples);
      // The last sample coincides with the end-of-cycle state.
      for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        CsvRow row = {std::int64_t{c - 1}, (c - 1) * period + samples[i].time, std::string("sample")};
        ctx.append_state(row, samples[i].state);
        rows.push_back(std::move(row));
      }
    } else {
      next = ctx.model.evaluate(u, ctx.params);
    }
    change = (next - u).norm();
    u = std::move(next);
    CsvRow row = {std::int64_t{c}, c * period, std::string("end")};
    ctx.append_state(row, u);
    rows.push_back(std::move(row));
  }
  ctx.emit("trajectory", header, rows);
  ctx.report.status = "Completed";
  ctx.report.success = true;
  ctx.headline("cycles", std::int64_t{t.n_cycles});
  ctx.headline("last_change", change);
  note_balance(ctx);
}

void run_fixed_point(Context& ctx, const FixedPointTask& t) {
  StateVector u = ctx.u0;
  if (t.warm_cycles > 0) {
    for (int c = 0; c < t.warm_cycles; ++c) u = ctx.model.evaluate(u, ctx.params);
    ctx.headline("warm_cycles", std::int64_t{t.warm_cycles});
  }

  std::vector<CsvRow> history;
  if (t.method == FixedPointMethod::Rpm) {
    const FixedPointResult r = rpm_solve(ctx.model, u, ctx.params, t.rpm.to_options());
    ctx.report.status = to_string(r.status);
    ctx.report.success = r.converged();
    ctx.report.fixed_point = r.u;
    ctx.headline("residual", r.residual);
    ctx.headline("iterations", std::int64_t{r.iterations});
    ctx.headline("solver_map_calls", static_cast<std::int64_t>(r.map_calls));
    ctx.headline("basis_size", static_cast<std::int64_t>(r.basis.size()));
    if (r.basis_full) ctx.headline("basis_full", "yes");
    ctx.headline("slow_multipliers", format_multipliers(slow_multipliers(r.basis), 6));
    for (std::size_t i = 0; i < r.residual_history.size(); ++i) {
      history.push_back({static_cast<std::int64_t>(i + 1), r.residual_history[i]});
    }
  } else {
    // Direct cycles, one map call each.
    DirectResult d;
    d.u = u;
    for (int c = 0; c < t.max_cycles; ++c) {
      StateVector next = ctx.model.evaluate(d.u, ctx.params);
      d.change = (next - d.u).norm();
      d.u = std::move(next);
      d.cycles = c + 1;
      history.push_back({std::int64_t{d.cycles}, d.change});
      if (d.change <= t.rpm.tolerance) {
        d.converged = true;
        break;
      }
    }
    ctx.report.status = d.converged ? "Converged" : "MaxIterations";
    ctx.report.success = d.converged;
    ctx.report.fixed_point = d.u;
    ctx.headline("residual", d.change);
    ctx.headline("cycles", std::int64_t{d.cycles});
  }
  ctx.report.tolerance = t.rpm.tolerance;

  std::vector<CsvRow> rows;
  const StateVector& fp = *ctx.report.fixed_point;
  for (Eigen::Index i = 0; i < fp.size(); i += ctx.config.output.stride) {
    rows.push_back({static_cast<std::int64_t>(i), fp[i]});
  }
  ctx.emit("fixed_point", {"index", "value"}, rows);
  ctx.emit("residuals", {"iteration", "residual"}, history);
  note_balance(ctx);
}

void run_eigs(Context& ctx, const EigsTask& t) {
  StateVector u = ctx.u0;
  if (t.solve_first) {
    const FixedPointResult r = rpm_solve(ctx.model, u, ctx.params, t.rpm.to_options());
    ctx.headline("fixed_point_status", to_string(r.status));
    ctx.headline("fixed_point_residual", r.residual);
    ctx.headline("rpm_slow_multipliers", format_multipliers(slow_multipliers(r.basis), 6));
    if (!r.converged()) {
      ctx.report.status = to_string(r.status);
      ctx.report.success = false;
      return;
    }
    u = r.u;
  }

  const int n = static_cast<int>(ctx.model.dimension());
  const int k = std::min({t.k, n, kArnoldiMaxSteps});
  FloquetOptions opts;
  opts.stability_margin = t.stability_margin;
  if (t.start == "random") {
    std::mt19937_64 rng(ctx.config.seed);
    std::normal_distribution<double> gauss;
    StateVector s(n);
    for (int i = 0; i < n; ++i) s[i] = gauss(rng);
    opts.start = s;
  } else if (t.start == "vector") {
    if (static_cast<int>(t.start_vector.size()) != n) {
      throw ConfigError("'start' has " + std::to_string(t.start_vector.size()) + " entries, model dimension is " +
                        std::to_string(n));
    }
    opts.start = Eigen::Map<const StateVector>(t.start_vector.data(), n);
  }

  const FloquetResult f = floquet_multipliers(ctx.model, u, ctx.params, k, opts);
  std::vector<CsvRow> rows;
  std::vector<Complex> values;
  for (const RitzPair& rp : f.pairs) {
    rows.push_back({rp.value.real(), rp.value.imag(), std::abs(rp.value), rp.residual});
    values.push_back(rp.value);
  }
  ctx.emit("spectrum", {"re", "im", "abs", "residual"}, rows);
  ctx.report.status = "Completed";
  ctx.report.success = true;
  ctx.headline("arnoldi_steps", std::int64_t{f.factorization.k});
  ctx.headline("breakdown", f.factorization.breakdown ? "yes" : "no");
  ctx.headline("leading_multipliers", format_multipliers(values, 4));
  ctx.headline("stable", f.stable ? "yes" : "no");
  if (!f.factorization.warning.empty()) ctx.headline("warning", f.factorization.warning);
}

void run_continue(Context& ctx, const ContinueTask& t) {
  if (!ctx.params.contains(t.parameter)) {
    throw ConfigError("continuation parameter '" + t.parameter + "' is not a parameter of model " +
                      to_string(ctx.config.model.kind));
  }
  Parameters p = ctx.params;
  p.set_continuation(t.parameter);

  ContinuationOptions opts;
  opts.step = t.step;
  opts.step_min = t.step_min;
  opts.fold_step = t.fold_step;
  opts.step_max = t.step_max;
  opts.max_points = t.max_points;
  opts.max_corrector_iterations = t.max_corrector_iterations;
  opts.tolerance = t.tolerance;
  opts.theta = t.theta;
  opts.arnoldi_steps = t.arnoldi_steps;
  opts.rpm = t.rpm.to_options();

  const BranchResult branch = trace_branch(ctx.model, ctx.u0, p.get(t.parameter), p, t.lambda_min, t.lambda_max, opts);
  const auto folds = t.refine_folds ? detect_fold(ctx.model, branch.points, p, opts) : detect_fold(branch.points);

  std::vector<std::string> header = {"s", "lambda", "residual", "fold_flag"};
  for (int i = 0; i < t.multipliers; ++i) {
    header.push_back("mu" + std::to_string(i + 1) + "_re");
    header.push_back("mu" + std::to_string(i + 1) + "_im");
  }
  for (auto& h : ctx.state_header()) header.push_back(h);
  std::vector<CsvRow> rows;
  for (const BranchPoint& pt : branch.points) {
    CsvRow row = {pt.arclength, pt.lambda, pt.residual, std::int64_t{pt.fold ? 1 : 0}};
    for (int i = 0; i < t.multipliers; ++i) {
      if (static_cast<std::size_t>(i) < pt.multipliers.size()) {
        row.emplace_back(pt.multipliers[i].real());
        row.emplace_back(pt.multipliers[i].imag());
      } else {
        row.emplace_back(std::string());
        row.emplace_back(std::string());
      }
    }
    ctx.append_state(row, pt.u);
    rows.push_back(std::move(row));
  }
  ctx.emit("branch", header, rows);

  std::vector<std::string> fold_header = {"lambda", "determinant", "left", "right"};
  for (auto& h : ctx.state_header()) fold_header.push_back(h);
  std::vector<CsvRow> fold_rows;
  std::string fold_text;
  for (const FoldRecord& f : folds) {
    CsvRow row = {f.lambda, f.determinant, static_cast<std::int64_t>(f.left), static_cast<std::int64_t>(f.right)};
    ctx.append_state(row, f.u);
    fold_rows.push_back(std::move(row));
    if (!fold_text.empty()) fold_text += " ";
    fold_text += format_double(f.lambda);
  }
  ctx.emit("folds", fold_header, fold_rows);

  ctx.report.status = to_string(branch.termination);
  ctx.report.success = branch.termination != BranchTermination::StepUnderflow;
  ctx.headline("points", static_cast<std::int64_t>(branch.points.size()));
  ctx.headline("fold_lambdas", fold_text.empty() ? "-" : fold_text);
  if (!branch.points.empty()) {
    const auto [lo, hi] = std::minmax_element(branch.points.begin(), branch.points.end(),
                                              [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
    ctx.headline("lambda_span", format_double(lo->lambda) + " .. " + format_double(hi->lambda));
  }
}

void run_projective(Context& ctx, const ProjectiveTask& t) {
  const EnvelopeTrajectory tr = projective_run(ctx.model, ctx.u0, ctx.params, t.to_schedule());
  std::vector<std::string> header = {"cycle", "kind"};
  for (auto& h : ctx.state_header()) header.push_back(h);
  std::vector<CsvRow> rows;
  for (const EnvelopeEntry& e : tr.entries) {
    CsvRow row = {static_cast<std::int64_t>(e.cycle), to_string(e.kind)};
    ctx.append_state(row, e.state);
    rows.push_back(std::move(row));
  }
  ctx.emit("trajectory", header, rows);
  ctx.report.status = tr.converged ? "Converged" : "MaxRounds";
  ctx.report.success = tr.converged;
  ctx.headline("rounds", std::int64_t{tr.rounds});
  ctx.headline("cycles_covered", static_cast<std::int64_t>(tr.cycles_covered));
  ctx.headline("speedup", tr.speedup());
  ctx.headline("final_change", tr.final_chord_norm);
  note_balance(ctx);
}

}  // namespace

std::string RunReport::to_text() const {
  std::ostringstream s;
  s << "task: " << task << "\n";
  s << "model: " << model << "\n";
  s << "status: " << status << (success ? "" : " (failure)") << "\n";
  s << "map_calls: " << map_calls << "\n";
  s << "wall_seconds: " << format_double(wall_seconds) << "\n";
  for (const auto& [k, v] : headline) s << k << ": " << v << "\n";
  for (const auto& p : csv_paths) s << "csv: " << p << "\n";
  return s.str();
}

RunReport run_task(const RunConfig& config) {
  const auto model = build_model(config.model);
  RunReport report;
  report.task = task_name(config.task);
  report.model = to_string(config.model.kind);

  Context ctx{config, *model, build_parameters(*model, config.model), build_initial_state(*model, config.model), report};
  for (const auto& [k, v] : ctx.params.values()) report.parameters.emplace_back(k, v);

  std::error_code ec;
  std::filesystem::create_directories(config.output.directory, ec);
  if (ec) throw IoError("cannot create output directory '" + config.output.directory + "': " + ec.message());

  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t calls_before = model->evaluations();
  std::visit(
      [&](const auto& task) {
        using T = std::decay_t<decltype(task)>;
        if constexpr (std::is_same_v<T, SimulateTask>) run_simulate(ctx, task);
        else if constexpr (std::is_same_v<T, FixedPointTask>) run_fixed_point(ctx, task);
        else if constexpr (std::is_same_v<T, EigsTask>) run_eigs(ctx, task);
        else if constexpr (std::is_same_v<T, ContinueTask>) run_continue(ctx, task);
        else run_projective(ctx, task);
      },
      config.task);
  report.map_calls = model->evaluations() - calls_before;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto report_path =
      (std::filesystem::path(config.output.directory) / (config.output.prefix + "_report.txt")).string();
  std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + report_path + "'");
  out << report.to_text();
  return report;
}

SpeedupSummary compare_runs(const RunReport& a, const RunReport& b) {
  if (!a.fixed_point || !b.fixed_point) throw IncomparableRuns("compare_runs: both runs must report a fixed point");
  if (a.parameters != b.parameters) throw IncomparableRuns("compare_runs: runs used different parameters");
  if (a.fixed_point->size() != b.fixed_point->size()) {
    throw IncomparableRuns("compare_runs: fixed points have different dimensions");
  }
  SpeedupSummary s;
  s.fixed_point_distance = (*a.fixed_point - *b.fixed_point).norm();
  s.bound = 10.0 * std::max(a.tolerance, b.tolerance);
  if (s.fixed_point_distance > s.bound) {
    throw IncomparableRuns("compare_runs: fixed points differ by " + format_double(s.fixed_point_distance) +
                           " > " + format_double(s.bound));
  }
  if (a.map_calls == 0) throw IncomparableRuns("compare_runs: reference run made no map calls");
  s.speedup = static_cast<double>(b.map_calls) / static_cast<double>(a.map_calls);
  return s;
}

}  // namespace tskit::cli
