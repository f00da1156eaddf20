#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tskit/timestepper.hpp"

namespace tskit {

// ---------------------------------------------------------------------------
// Affine linear map u -> A u + b with a prescribed spectrum.

struct LinearMapSpec {
  std::vector<double> real_eigenvalues;
  /// (r, theta) pairs; each contributes the block r * [[cos, -sin], [sin, cos]].
  std::vector<std::pair<double, double>> complex_pairs;
  /// Either the offset b or the desired fixed point may be given (not both);
  /// b = 0 when neither is.
  std::optional<StateVector> offset;
  std::optional<StateVector> fixed_point;
  /// Conjugate the block-diagonal matrix by a seeded random orthogonal matrix.
  std::optional<std::uint64_t> conjugation_seed;
  /// Position of a real eigenvalue driven by the parameter "lambda".
  std::optional<int> lambda_slot;
};

class LinearMapModel : public Timestepper {
 public:
  explicit LinearMapModel(LinearMapSpec spec);

  /// Convenience: diagonal A with offset b.
  static LinearMapModel diagonal(std::vector<double> eigenvalues, StateVector offset);

  std::size_t dimension() const override { return static_cast<std::size_t>(a_.rows()); }
  std::string name() const override { return "linear_map"; }
  Parameters default_parameters() const override;

  /// A at the given parameters (lambda applied when a slot is configured).
  Matrix matrix(const Parameters& p = {}) const;
  const StateVector& offset() const { return b_; }
  /// Eigenvalues as configured, sorted by modulus.
  std::vector<std::complex<double>> prescribed_spectrum(const Parameters& p = {}) const;
  /// (I - A)^{-1} b; throws InvalidArgument when 1 is in the spectrum.
  StateVector fixed_point(const Parameters& p = {}) const;
  const LinearMapSpec& spec() const { return spec_; }

 protected:
  StateVector step(const StateVector& u, const Parameters& p) const override;

 private:
  LinearMapSpec spec_;
  Matrix a_;
  StateVector b_;
  // Unit direction of the lambda slot in the conjugated frame.
  StateVector slot_direction_;
  double slot_base_ = 0.0;
};

// ---------------------------------------------------------------------------
// Elementwise u -> u*u + lambda. Fold of the fixed-point branch at
// (u, lambda) = (1/2, 1/4).

class QuadraticMap : public Timestepper {
 public:
  explicit QuadraticMap(std::size_t dim = 1, double lambda = 0.0);

  std::size_t dimension() const override { return dim_; }
  std::string name() const override { return "quadratic_map"; }
  Parameters default_parameters() const override;

 protected:
  StateVector step(const StateVector& u, const Parameters& p) const override;

 private:
  std::size_t dim_;
  double lambda_;
};

// ---------------------------------------------------------------------------
// x'' + 2 zeta omega0 x' + omega0^2 x = f cos(omega t), sampled once per
// forcing period 2 pi / omega with fixed-step RK4.

struct ForcedOscillatorSpec {
  double zeta = 0.1;
  double omega0 = 1.0;
  double omega = 1.0;
  double forcing = 1.0;
  int n_steps = 800;
};

class ForcedOscillatorModel : public Timestepper {
 public:
  explicit ForcedOscillatorModel(ForcedOscillatorSpec spec = {});

  std::size_t dimension() const override { return 2; }
  double period() const override;
  std::string name() const override { return "forced_oscillator"; }
  /// zeta, omega0, omega, f
  Parameters default_parameters() const override;

  /// [[0, 1], [-omega0^2, -2 zeta omega0]]
  static Matrix system_matrix(const Parameters& p);
  /// e^{M T}, closed form for the underdamped, critically damped and
  /// overdamped cases.
  static Matrix monodromy(const Parameters& p);
  /// (x, x') at t = 0 on the periodic particular solution.
  static StateVector periodic_state(const Parameters& p);

  int n_steps() const { return spec_.n_steps; }

 protected:
  StateVector step(const StateVector& u, const Parameters& p) const override;
  StateVector step_sampled(const StateVector& u, const Parameters& p, int samples,
                           std::vector<CycleSample>& out) const override;

 private:
  StateVector integrate(const StateVector& u, const Parameters& p, int samples,
                        std::vector<CycleSample>* out) const;

  ForcedOscillatorSpec spec_;
};

// ---------------------------------------------------------------------------
// Two-step cyclic adsorption column: feed (flow towards z = L, inlet c_feed)
// then counter-current blowdown (flow towards z = 0, purge inlet c_purge at
// z = L). Gas concentration c and loading q per cell; upwind transport, LDF
// uptake to a Langmuir isotherm, classic RK4 in time.

struct AdsorptionGeometry {
  int n_z = 90;
  double length = 1.0;
  /// Upper bound on the inner time step. Each step is split into equal
  /// substeps no longer than this.
  double dt = 0.005;
};

/// Per-cycle inventory bookkeeping; all quantities per unit cross section.
struct CycleBalance {
  double holdup_before = 0.0;
  double holdup_after = 0.0;
  double inflow = 0.0;
  double outflow = 0.0;
  /// Mean outlet concentration at z = L during the feed step.
  double product_concentration = 0.0;

  /// |dHoldup - (in - out)| / max(holdup, tiny)
  double relative_error() const;
};

class AdsorptionColumnModel : public Timestepper {
 public:
  explicit AdsorptionColumnModel(AdsorptionGeometry geometry = {}, Parameters defaults = default_values());

  /// Documented default parameter set:
  ///   t_press 1, t_blow 1, v_feed 1, v_blow 1.2, c_feed 1, c_purge 0.02,
  ///   q_sat 200, K_L 1, k_ldf 0.3, phase_ratio 1.5
  static Parameters default_values();

  std::size_t dimension() const override { return 2 * static_cast<std::size_t>(geometry_.n_z); }
  double period() const override;
  std::string name() const override { return "adsorption_column"; }
  Parameters default_parameters() const override { return defaults_; }
  /// Clean bed: c = 0, q = 0.
  StateVector default_initial_state() const override { return StateVector::Zero(dimension()); }

  const AdsorptionGeometry& geometry() const { return geometry_; }
  double cell_width() const { return geometry_.length / geometry_.n_z; }

  /// Equilibrium loading q_sat K_L c / (1 + K_L c).
  static double equilibrium_loading(double c, const Parameters& p);
  /// Total inventory dz * sum(c + phase_ratio * q).
  double holdup(const StateVector& u, const Parameters& p) const;

  /// Uncounted helper for diagnostics: one cycle with inventory ledger.
  StateVector cycle_with_balance(const StateVector& u, const Parameters& p, CycleBalance& balance) const;

  /// Every cycle (counted or not) records its balance error here.
  double max_balance_error() const { return worst_balance_.load(); }
  std::uint64_t balance_checks() const { return balance_checks_.load(); }
  void reset_balance_monitor() const {
    worst_balance_.store(0.0);
    balance_checks_.store(0);
  }

 protected:
  StateVector step(const StateVector& u, const Parameters& p) const override;
  StateVector step_sampled(const StateVector& u, const Parameters& p, int samples,
                           std::vector<CycleSample>& out) const override;

 private:
  StateVector run_cycle(const StateVector& u, const Parameters& p, CycleBalance* balance, int samples,
                        std::vector<CycleSample>* out) const;

  AdsorptionGeometry geometry_;
  Parameters defaults_;
  mutable std::atomic<double> worst_balance_{0.0};
  mutable std::atomic<std::uint64_t> balance_checks_{0};
};

}  // namespace tskit
