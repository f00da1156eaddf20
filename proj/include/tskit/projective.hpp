#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tskit/timestepper.hpp"

namespace tskit {

struct ProjectiveSchedule {
  int inner_steps = 3;
  int jump = 9;
  int max_rounds = 10000;
  /// Stop once |u_k - u_{k-1}| <= tolerance.
  double tolerance = 1e-6;
  /// Cap the jump from the estimated slow multiplier each round.
  bool adaptive = false;
  /// Number of trailing inner states in the slope fit (2 = plain chord).
  int chord_points = 2;

  void validate() const;
};

enum class EnvelopeKind { Inner, Jump };

std::string to_string(EnvelopeKind kind);

struct EnvelopeEntry {
  long cycle = 0;
  StateVector state;
  EnvelopeKind kind = EnvelopeKind::Inner;
};

struct EnvelopeTrajectory {
  std::vector<EnvelopeEntry> entries;
  std::uint64_t map_calls = 0;
  long cycles_covered = 0;
  int rounds = 0;
  bool converged = false;
  std::vector<int> jumps;  // jump actually taken in each round
  StateVector final_state;
  double final_chord_norm = 0.0;

  double speedup() const {
    return map_calls > 0 ? static_cast<double>(cycles_covered) / static_cast<double>(map_calls) : 0.0;
  }
};

/// Per-cycle slow derivative estimate u_k - u_{k-1}.
StateVector chord_estimate(const StateVector& previous, const StateVector& last);

/// Least-squares slope per cycle over equally spaced states (oldest first).
StateVector chord_estimate(std::span<const StateVector> states);

/// u_k + M d; no map calls.
StateVector projective_step(const StateVector& u, const StateVector& d, int jump);

/// Largest jump keeping the outer forward-Euler step stable for the
/// estimated slow multiplier: floor(2 / (1 - mu)) - inner_steps, >= 0.
/// Zero when mu >= 1 or mu is not finite.
int adaptive_jump_cap(double mu_hat, int inner_steps);

/// Amplification of one projective round on the scalar map u -> mu u.
double projective_amplification(double mu, int inner_steps, int jump);

EnvelopeTrajectory projective_run(const Timestepper& stepper, const StateVector& u0, const Parameters& p,
                                  const ProjectiveSchedule& schedule);

}  // namespace tskit
