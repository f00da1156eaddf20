// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion
// and exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "tskit/arnoldi.hpp"
#include "tskit/cli/csv.hpp"
#include "tskit/continuation.hpp"
#include "tskit/models.hpp"
#include "tskit/projective.hpp"
#include "tskit/rpm.hpp"

using namespace tskit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double nearest(const std::vector<Complex>& set, Complex z) {
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& w : set) best = std::min(best, std::abs(w - z));
  return best;
}

LinearMapModel slow_fast_map(std::uint64_t seed) {
  LinearMapSpec spec;
  spec.real_eigenvalues = {0.99, 0.98, 0.95};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fast(-0.3, 0.3);
  for (int i = 0; i < 20; ++i) spec.real_eigenvalues.push_back(fast(rng));
  spec.offset = StateVector::LinSpaced(23, 0.5, 1.5);
  spec.conjugation_seed = seed;
  return LinearMapModel(spec);
}

// ---------------------------------------------------------------------------

Outcome linear_oracle() {
  Outcome o;
  auto m = slow_fast_map(2024);
  const StateVector exact = m.fixed_point();
  RpmOptions opts;
  opts.tolerance = 1e-10;
  auto r = rpm_solve(m, StateVector::Zero(23), {}, opts);
  auto picard = direct_simulation(m, StateVector::Zero(23), {}, 1e-10, 1000000);
  o.require(r.converged() && r.residual <= 1e-10, "residual <= 1e-10");
  const double err = (r.u - exact).norm();
  o.require(err <= 1e-8, "distance to (I-A)^-1 b <= 1e-8");
  o.require(picard.converged, "Picard reference converged");
  o.require(10 * r.map_calls <= picard.map_calls, "calls <= 10% of Picard");
  o.note("residual " + fmt(r.residual) + ", error " + fmt(err) + ", calls " + std::to_string(r.map_calls) +
         " vs Picard " + std::to_string(picard.map_calls));
  return o;
}

Outcome unstable_fixed_point() {
  Outcome o;
  FunctionTimestepper m(1, [](const StateVector& u, const Parameters&) {
    return StateVector((1.02 * u.array() - 0.02).matrix());
  });
  StateVector u0(1);
  u0 << 1.5;
  RpmOptions opts;
  opts.tolerance = 1e-10;
  auto r = rpm_solve(m, u0, {}, opts);
  auto d = direct_simulation(m, u0, {}, 1e-10, 1000);
  o.require(r.converged() && std::abs(r.u[0] - 1.0) <= 1e-10, "rpm converges to u* = 1");
  o.require(!d.converged && std::abs(d.u[0] - 1.0) > 1e3 * 0.5, "direct iteration diverges");
  o.note("rpm |u-u*| " + fmt(std::abs(r.u[0] - 1.0)) + " in " + std::to_string(r.map_calls) +
         " calls; direct |u-u*| after 1000 cycles " + fmt(std::abs(d.u[0] - 1.0)));
  return o;
}

Outcome floquet_validation() {
  Outcome o;
  ForcedOscillatorModel osc;
  const Parameters p = osc.default_parameters();
  const Matrix monodromy = (ForcedOscillatorModel::system_matrix(p) * osc.period()).exp();
  const auto exact = dense_eigenvalues(monodromy).values;
  const StateVector ustar = ForcedOscillatorModel::periodic_state(p);

  auto fr = floquet_multipliers(osc, ustar, p, 2);
  std::vector<Complex> ritz;
  for (const auto& rp : fr.pairs) ritz.push_back(rp.value);
  double worst = 0.0;
  for (const Complex& z : exact) worst = std::max(worst, nearest(ritz, z));
  o.require(ritz.size() == 2 && worst <= 1e-6, "Arnoldi multipliers match e^{MT} to 1e-6");

  RpmOptions opts;
  opts.tolerance = 1e-10;
  auto r = rpm_solve(osc, StateVector::Zero(2), p, opts);
  o.require(r.converged(), "rpm converged on the oscillator");
  const auto h_vals = slow_multipliers(r.basis);
  double cross = h_vals.empty() ? INFINITY : 0.0;
  for (const Complex& z : h_vals) cross = std::max(cross, nearest(ritz, z));
  o.require(!h_vals.empty() && cross <= 1e-3, "H eigenvalues match Ritz values to 1e-3");
  o.note("|mu - exact| " + fmt(worst) + ", |eig(H) - ritz| " + fmt(cross) + " (m = " +
         std::to_string(r.basis.size()) + ")");
  return o;
}

Outcome arnoldi_exactness() {
  Outcome o;
  double worst = 0.0;
  for (int n : {8, 25, 60}) {
    LinearMapSpec spec;
    std::mt19937_64 rng(static_cast<std::uint64_t>(n));
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    for (int i = 0; i < n / 4; ++i) spec.complex_pairs.emplace_back(std::abs(u(rng)), 0.1 + std::abs(u(rng)) * 3.0);
    while (static_cast<int>(spec.real_eigenvalues.size() + 2 * spec.complex_pairs.size()) < n) {
      spec.real_eigenvalues.push_back(u(rng));
    }
    spec.conjugation_seed = static_cast<std::uint64_t>(n) + 1;
    LinearMapModel m(spec);
    const StateVector ustar = StateVector::Zero(n);
    auto fr = floquet_multipliers(m, ustar, {}, n);
    const auto dense = dense_eigenvalues(dense_jacobian_bruteforce(m, ustar, {})).values;
    std::vector<Complex> ritz;
    for (const auto& rp : fr.pairs) ritz.push_back(rp.value);
    o.require(ritz.size() == dense.size(), "full spectrum recovered at N = " + std::to_string(n));
    for (const Complex& z : dense) worst = std::max(worst, nearest(ritz, z));
  }
  o.require(worst <= 1e-6, "Ritz values match dense oracle to 1e-6");
  o.note("worst |ritz - dense| " + fmt(worst) + " over N = 8, 25, 60");
  return o;
}

Outcome continuation_fold() {
  Outcome o;
  QuadraticMap q;
  const Parameters p = q.default_parameters();
  ContinuationOptions opts;
  opts.tolerance = 1e-10;
  StateVector u0 = StateVector::Zero(1);
  auto br = trace_branch(q, u0, 0.0, p, 0.0, 0.3, opts);
  double worst = 0.0;
  for (const auto& pt : br.points) {
    worst = std::max(worst, residual(q, pt.u, p.with_continuation(pt.lambda)).norm);
  }
  auto folds = detect_fold(q, br.points, p, opts);
  o.require(worst <= 1e-8, "every accepted residual <= 1e-8");
  o.require(folds.size() == 1, "exactly one fold");
  if (folds.size() == 1) {
    const double du = std::abs(folds[0].u[0] - 0.5);
    const double dl = std::abs(folds[0].lambda - 0.25);
    o.require(du <= 1e-4 && dl <= 1e-4, "fold within 1e-4 of (0.5, 0.25)");
    o.note("fold at (" + fmt(folds[0].u[0]) + ", " + fmt(folds[0].lambda) + "), errors " + fmt(du) + ", " + fmt(dl));
  }
  o.note(std::to_string(br.points.size()) + " points, max residual " + fmt(worst));
  return o;
}

Outcome projective_integration() {
  Outcome o;
  LinearMapSpec spec;
  spec.real_eigenvalues = {0.99, 0.2, 0.15, 0.1, 0.05, -0.2, -0.1};
  spec.offset = StateVector::Constant(7, 0.01);
  spec.conjugation_seed = 5;
  LinearMapModel m(spec);
  const StateVector exact = m.fixed_point();

  ProjectiveSchedule s;
  s.inner_steps = 3;
  s.jump = 9;
  s.tolerance = 1e-8;
  auto t = projective_run(m, StateVector::Zero(7), {}, s);
  auto d = direct_simulation(m, StateVector::Zero(7), {}, 1e-8, 1000000);
  const double err = (t.final_state - exact).norm();
  o.require(t.converged && err <= 1e-6, "converges within 1e-6 of the fixed point");
  o.require(3 * t.map_calls <= d.map_calls, ">= 3x fewer calls than direct");
  o.note("error " + fmt(err) + ", calls " + std::to_string(t.map_calls) + " vs direct " +
         std::to_string(d.map_calls));

  for (double mu : {0.5, 0.9, 0.99}) {
    auto scalar = LinearMapModel::diagonal({mu}, StateVector::Constant(1, 1.0 - mu));
    ProjectiveSchedule a;
    a.inner_steps = 3;
    a.jump = 9;
    a.adaptive = true;
    a.tolerance = 1e-10;
    try {
      auto ta = projective_run(scalar, StateVector::Zero(1), {}, a);
      o.require(ta.converged, "adaptive run converges at mu = " + fmt(mu));
    } catch (const UnstableEnvelope&) {
      o.require(false, "adaptive cap avoids UnstableEnvelope at mu = " + fmt(mu));
    }
  }
  return o;
}

Outcome adsorption_end_to_end() {
  Outcome o;
  AdsorptionColumnModel m;  // n_z = 90
  const Parameters p = m.default_parameters();
  m.reset_balance_monitor();

  auto direct = direct_simulation(m, m.default_initial_state(), p, 1e-6, 200000);
  o.require(direct.converged, "direct simulation reaches a CSS");
  const int n_direct = direct.cycles;
  // The CSS itself: keep cycling well past the 1e-6 stopping point.
  auto reference = direct_simulation(m, direct.u, p, 1e-11, 200000);
  o.require(reference.converged, "reference CSS converged");

  const int warm = n_direct / 10;
  const auto calls_before = m.evaluations();
  StateVector u = m.default_initial_state();
  for (int i = 0; i < warm; ++i) u = m.evaluate(u, p);
  RpmOptions opts;
  opts.tolerance = 5e-8;
  opts.max_basis = 15;
  opts.max_iterations = 5000;
  auto r = rpm_solve(m, u, p, opts);
  const auto total = m.evaluations() - calls_before;
  const double dist = (r.u - reference.u).norm();

  o.require(r.converged(), "rpm converged");
  o.require(warm <= n_direct / 5, "warm start within 20% of the direct count");
  o.require(dist <= 1e-5, "same CSS within 1e-5");
  o.require(5 * total <= static_cast<std::uint64_t>(n_direct), "total calls <= direct / 5");
  o.require(m.max_balance_error() <= 1e-6, "mass balance closes to 1e-6 every cycle");
  o.note("N_direct " + std::to_string(n_direct) + ", warm-up " + std::to_string(warm) + " + rpm " +
         std::to_string(r.map_calls) + " = " + std::to_string(total) + " calls (ratio " +
         fmt(static_cast<double>(total) / n_direct) + "), distance " + fmt(dist) + ", m = " +
         std::to_string(r.basis.size()) + ", worst balance " + fmt(m.max_balance_error()) + " over " +
         std::to_string(m.balance_checks()) + " cycles");
  return o;
}

Outcome invariant_suites() {
  Outcome o;

  // Orthonormality of every basis RPM produced.
  double ortho = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto m = slow_fast_map(seed);
    RpmOptions opts;
    opts.tolerance = 1e-10;
    auto r = rpm_solve(m, StateVector::Zero(23), {}, opts);
    if (r.basis.size() > 0) ortho = std::max(ortho, orthonormality_error(r.basis.z));
  }
  o.require(ortho <= 1e-12, "basis orthonormality <= 1e-12");

  // Map-call accounting.
  {
    auto m = slow_fast_map(9);
    auto before = m.evaluations();
    RpmOptions opts;
    auto r = rpm_solve(m, StateVector::Zero(23), {}, opts);
    bool exact = r.map_calls == m.evaluations() - before;
    before = m.evaluations();
    auto f = arnoldi_factorize(m, m.fixed_point(), {}, 10);
    exact = exact && (m.evaluations() - before == static_cast<std::uint64_t>(f.k) + 1);
    ProjectiveSchedule s;
    s.max_rounds = 7;
    s.tolerance = 1e-300;
    before = m.evaluations();
    auto t = projective_run(m, StateVector::Zero(23), {}, s);
    exact = exact && t.map_calls == 21 && m.evaluations() - before == 21;
    before = m.evaluations();
    (void)dense_jacobian_bruteforce(m, StateVector::Zero(23), {});
    exact = exact && m.evaluations() - before == 24;
    o.require(exact, "map-call accounting exact");
  }

  // Bitwise reproducibility of a full solve.
  {
    AdsorptionColumnModel a(AdsorptionGeometry{30, 1.0, 0.01});
    AdsorptionColumnModel b(AdsorptionGeometry{30, 1.0, 0.01});
    RpmOptions opts;
    opts.tolerance = 1e-9;
    opts.max_basis = 15;
    // Warm cycles first: a cold Newton step can overshoot the admissible set.
    StateVector u0 = a.default_initial_state();
    for (int i = 0; i < 50; ++i) u0 = a.evaluate(u0, a.default_parameters());
    auto ra = rpm_solve(a, u0, a.default_parameters(), opts);
    auto rb = rpm_solve(b, u0, b.default_parameters(), opts);
    bool same = ra.map_calls == rb.map_calls && ra.u.size() == rb.u.size();
    for (Eigen::Index i = 0; same && i < ra.u.size(); ++i) same = ra.u[i] == rb.u[i];
    o.require(same, "bitwise-identical repeated solves");
  }

  // CSV golden.
  {
    const std::string golden = "a,b\n0.10000000000000001,2\n-3,x\n";
    const std::string text = cli::format_csv({"a", "b"}, {{0.1, std::int64_t{2}}, {-3.0, std::string("x")}});
    const std::string path = "acceptance_golden.csv";
    cli::write_csv(path, {"a", "b"}, {{0.1, std::int64_t{2}}, {-3.0, std::string("x")}});
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    std::remove(path.c_str());
    o.require(text == golden && ss.str() == golden, "CSV golden byte-stable");
  }
  o.note("orthonormality " + fmt(ortho));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "linear-map oracle equivalence", 1.0, linear_oracle},
      {2, "unstable fixed point", 1.0, unstable_fixed_point},
      {3, "Floquet validation", 5.0, floquet_validation},
      {4, "Arnoldi exactness", 5.0, arnoldi_exactness},
      {5, "continuation fold", 5.0, continuation_fold},
      {6, "projective integration", 5.0, projective_integration},
      {7, "adsorption column end-to-end", 60.0, adsorption_end_to_end},
      {8, "invariant suites", 60.0, invariant_suites},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= c.limit_seconds) {
      out.pass = false;
      out.detail += "; FAILED runtime limit " + fmt(c.limit_seconds) + " s";
    }
    if (!out.pass) ++failures;
    std::printf("[%s] criterion %d: %s (%.3f s) %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
