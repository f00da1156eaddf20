#include <algorithm>
#include <cmath>
#include <sstream>

#include "tskit/models.hpp"

namespace tskit {

namespace {

struct ColumnParams {
  double t_press, t_blow, v_feed, v_blow, c_feed, c_purge, q_sat, k_l, k_ldf, phase_ratio;
};

const char* const kKeys[] = {"t_press", "t_blow", "v_feed", "v_blow", "c_feed",
                             "c_purge", "q_sat",  "K_L",    "k_ldf",  "phase_ratio"};

ColumnParams read(const Parameters& p, const Parameters& defaults) {
  auto value = [&](const char* key) { return p.contains(key) ? p.get(key) : defaults.get(key); };
  ColumnParams c{value("t_press"), value("t_blow"), value("v_feed"), value("v_blow"), value("c_feed"),
                 value("c_purge"), value("q_sat"),  value("K_L"),    value("k_ldf"),  value("phase_ratio")};
  if (c.t_press < 0.0 || c.t_blow < 0.0) throw InvalidArgument("adsorption_column: step durations must be >= 0");
  if (c.v_feed < 0.0 || c.v_blow < 0.0) {
    throw InvalidArgument("adsorption_column: velocities are magnitudes and must be >= 0");
  }
  if (c.c_feed < 0.0 || c.c_purge < 0.0) throw InvalidArgument("adsorption_column: inlet concentrations must be >= 0");
  if (!(c.q_sat > 0.0) || c.k_l < 0.0 || c.k_ldf < 0.0 || c.phase_ratio < 0.0) {
    throw InvalidArgument("adsorption_column: isotherm and exchange parameters must be non-negative (q_sat > 0)");
  }
  return c;
}

inline double langmuir(double c, const ColumnParams& p) { return p.q_sat * p.k_l * c / (1.0 + p.k_l * c); }

// Semi-discrete right-hand side for one flow direction. Returns the outlet
// concentration that leaves the column at this stage.
double column_rhs(const StateVector& s, int n, double dz, double v, bool forward, double c_in,
                  const ColumnParams& p, StateVector& ds) {
  const double a = v / dz;
  for (int i = 0; i < n; ++i) {
    const double c = s[i];
    const double q = s[n + i];
    const double upstream = forward ? (i == 0 ? c_in : s[i - 1]) : (i == n - 1 ? c_in : s[i + 1]);
    const double rate = p.k_ldf * (langmuir(c, p) - q);
    ds[i] = -a * (c - upstream) - p.phase_ratio * rate;
    ds[n + i] = rate;
  }
  return forward ? s[n - 1] : s[0];
}

}  // namespace

double CycleBalance::relative_error() const {
  const double scale = std::max({std::abs(holdup_before), std::abs(holdup_after), 1e-300});
  return std::abs((holdup_after - holdup_before) - (inflow - outflow)) / scale;
}

AdsorptionColumnModel::AdsorptionColumnModel(AdsorptionGeometry geometry, Parameters defaults)
    : geometry_(geometry), defaults_(std::move(defaults)) {
  if (geometry_.n_z < 2) throw InvalidArgument("adsorption_column: n_z must be >= 2");
  if (!(geometry_.length > 0.0)) throw InvalidArgument("adsorption_column: length must be positive");
  if (!(geometry_.dt > 0.0)) throw InvalidArgument("adsorption_column: dt must be positive");
  for (const char* key : kKeys) {
    if (!defaults_.contains(key)) {
      throw UnknownParameter(std::string("adsorption_column: missing default for '") + key + "'");
    }
  }
  read(defaults_, defaults_);
}

Parameters AdsorptionColumnModel::default_values() {
  return Parameters({{"t_press", 1.0},
                     {"t_blow", 1.0},
                     {"v_feed", 1.0},
                     {"v_blow", 1.2},
                     {"c_feed", 1.0},
                     {"c_purge", 0.02},
                     {"q_sat", 200.0},
                     {"K_L", 1.0},
                     {"k_ldf", 0.3},
                     {"phase_ratio", 1.5}},
                    "c_feed");
}

double AdsorptionColumnModel::period() const {
  const ColumnParams c = read(defaults_, defaults_);
  return c.t_press + c.t_blow;
}

double AdsorptionColumnModel::equilibrium_loading(double c, const Parameters& p) {
  return p.get("q_sat") * p.get("K_L") * c / (1.0 + p.get("K_L") * c);
}

double AdsorptionColumnModel::holdup(const StateVector& u, const Parameters& p) const {
  const ColumnParams c = read(p, defaults_);
  const int n = geometry_.n_z;
  return cell_width() * (u.head(n).sum() + c.phase_ratio * u.tail(n).sum());
}

StateVector AdsorptionColumnModel::run_cycle(const StateVector& u, const Parameters& p, CycleBalance* balance,
                                             int samples, std::vector<CycleSample>* out) const {
  const ColumnParams prm = read(p, defaults_);
  const int n = geometry_.n_z;
  const double dz = cell_width();

  struct Phase {
    double duration, velocity, inlet;
    bool forward;
  };
  const Phase phases[2] = {{prm.t_press, prm.v_feed, prm.c_feed, true},
                           {prm.t_blow, prm.v_blow, prm.c_purge, false}};

  for (const Phase& ph : phases) {
    if (ph.velocity > 0.0 && geometry_.dt > 0.9 * dz / ph.velocity) {
      std::ostringstream msg;
      msg << "adsorption_column: dt = " << geometry_.dt << " exceeds the CFL bound 0.9 dz/|v| = "
          << 0.9 * dz / ph.velocity;
      throw CflViolation(msg.str());
    }
  }

  // Output bounds are checked, never clipped. The slack admits roundoff only.
  // Inputs are not checked: Newton and JVP probes may sit slightly outside.
  const double slack = 1e-12 * std::max({1.0, prm.c_feed, prm.c_purge});
  auto check_bounds = [&](const StateVector& x) {
    for (int i = 0; i < n; ++i) {
      if (x[i] < -slack || x[n + i] < -slack * prm.q_sat || x[n + i] > prm.q_sat * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "adsorption_column: cell " << i << " left the admissible range (c = " << x[i]
            << ", q = " << x[n + i] << ")";
        throw NegativeConcentration(msg.str());
      }
    }
  };

  int substeps[2];
  for (int k = 0; k < 2; ++k) {
    substeps[k] = phases[k].duration > 0.0 ? static_cast<int>(std::ceil(phases[k].duration / geometry_.dt - 1e-9)) : 0;
  }
  const long total_substeps = static_cast<long>(substeps[0]) + substeps[1];

  StateVector s = u;
  StateVector k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n), tmp(2 * n);
  double inflow = 0.0;
  double outflow = 0.0;
  double product_out = 0.0;
  long done = 0;
  int next_sample = 1;
  double time = 0.0;

  for (int k = 0; k < 2; ++k) {
    const Phase& ph = phases[k];
    if (substeps[k] == 0) continue;
    const double h = ph.duration / substeps[k];
    for (int step = 0; step < substeps[k]; ++step) {
      const double o1 = column_rhs(s, n, dz, ph.velocity, ph.forward, ph.inlet, prm, k1);
      tmp = s + 0.5 * h * k1;
      const double o2 = column_rhs(tmp, n, dz, ph.velocity, ph.forward, ph.inlet, prm, k2);
      tmp = s + 0.5 * h * k2;
      const double o3 = column_rhs(tmp, n, dz, ph.velocity, ph.forward, ph.inlet, prm, k3);
      tmp = s + h * k3;
      const double o4 = column_rhs(tmp, n, dz, ph.velocity, ph.forward, ph.inlet, prm, k4);
      s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

      const double out_step = ph.velocity * (h / 6.0) * (o1 + 2.0 * o2 + 2.0 * o3 + o4);
      inflow += ph.velocity * h * ph.inlet;
      outflow += out_step;
      if (ph.forward) product_out += out_step;

      ++done;
      time += h;
      if (out && samples > 0) {
        while (next_sample <= samples && done * samples >= next_sample * total_substeps) {
          out->push_back({time, s});
          ++next_sample;
        }
      }
    }
  }

  check_bounds(s);

  CycleBalance ledger;
  ledger.holdup_before = dz * (u.head(n).sum() + prm.phase_ratio * u.tail(n).sum());
  ledger.holdup_after = dz * (s.head(n).sum() + prm.phase_ratio * s.tail(n).sum());
  ledger.inflow = inflow;
  ledger.outflow = outflow;
  const double fed_volume = prm.v_feed * prm.t_press;
  ledger.product_concentration = fed_volume > 0.0 ? product_out / fed_volume : 0.0;

  const double err = ledger.relative_error();
  double seen = worst_balance_.load();
  while (err > seen && !worst_balance_.compare_exchange_weak(seen, err)) {
  }
  balance_checks_.fetch_add(1);
  if (balance) *balance = ledger;
  return s;
}

StateVector AdsorptionColumnModel::step(const StateVector& u, const Parameters& p) const {
  return run_cycle(u, p, nullptr, 0, nullptr);
}

StateVector AdsorptionColumnModel::step_sampled(const StateVector& u, const Parameters& p, int samples,
                                                std::vector<CycleSample>& out) const {
  return run_cycle(u, p, nullptr, samples, &out);
}

StateVector AdsorptionColumnModel::cycle_with_balance(const StateVector& u, const Parameters& p,
                                                      CycleBalance& balance) const {
  if (static_cast<std::size_t>(u.size()) != dimension()) {
    throw DimensionMismatch("adsorption_column: state dimension mismatch");
  }
  return run_cycle(u, p, &balance, 0, nullptr);
}

}  // namespace tskit
