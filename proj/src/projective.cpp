#include "tskit/projective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tskit {

void ProjectiveSchedule::validate() const {
  if (inner_steps < 2) throw InvalidArgument("projective: inner_steps must be >= 2");
  if (jump < 0) throw InvalidArgument("projective: jump must be >= 0");
  if (max_rounds < 1) throw InvalidArgument("projective: max_rounds must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidArgument("projective: tolerance must be positive");
  if (chord_points < 2 || chord_points > inner_steps + 1) {
    throw InvalidArgument("projective: chord_points must lie in [2, inner_steps + 1]");
  }
}

std::string to_string(EnvelopeKind kind) { return kind == EnvelopeKind::Inner ? "inner" : "jump"; }

StateVector chord_estimate(const StateVector& previous, const StateVector& last) {
  if (previous.size() != last.size()) throw DimensionMismatch("chord_estimate: dimension mismatch");
  return last - previous;
}

StateVector chord_estimate(std::span<const StateVector> states) {
  if (states.size() < 2) throw InvalidArgument("chord_estimate: need at least two states");
  if (states.size() == 2) return chord_estimate(states[0], states[1]);
  const double h = static_cast<double>(states.size());
  const double mean_t = 0.5 * (h - 1.0);
  double denom = 0.0;
  StateVector slope = StateVector::Zero(states[0].size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double dt = static_cast<double>(i) - mean_t;
    slope += dt * states[i];
    denom += dt * dt;
  }
  return slope / denom;
}

StateVector projective_step(const StateVector& u, const StateVector& d, int jump) {
  if (jump < 0) throw InvalidArgument("projective_step: jump must be >= 0");
  if (jump == 0) return u;
  return u + static_cast<double>(jump) * d;
}

int adaptive_jump_cap(double mu_hat, int inner_steps) {
  // A non-decaying chord gains nothing from extrapolation.
  if (!(mu_hat < 1.0) || !std::isfinite(mu_hat)) return 0;
  const double bound = std::floor(2.0 / (1.0 - mu_hat)) - inner_steps;
  if (bound <= 0.0) return 0;
  if (bound >= static_cast<double>(std::numeric_limits<int>::max())) return std::numeric_limits<int>::max();
  return static_cast<int>(bound);
}

double projective_amplification(double mu, int inner_steps, int jump) {
  return std::pow(mu, inner_steps) + jump * std::pow(mu, inner_steps - 1) * (mu - 1.0);
}

EnvelopeTrajectory projective_run(const Timestepper& stepper, const StateVector& u0, const Parameters& p,
                                  const ProjectiveSchedule& schedule) {
  schedule.validate();
  if (static_cast<std::size_t>(u0.size()) != stepper.dimension()) {
    throw DimensionMismatch("projective_run: initial state dimension mismatch");
  }
  const std::uint64_t calls_before = stepper.evaluations();

  EnvelopeTrajectory out;
  StateVector u = u0;
  long cycle = 0;
  double previous_chord = -1.0;
  int growth_streak = 0;

  std::vector<StateVector> inner;
  inner.reserve(schedule.inner_steps + 1);
  for (int round = 0; round < schedule.max_rounds; ++round) {
    inner.clear();
    inner.push_back(u);
    for (int i = 0; i < schedule.inner_steps; ++i) {
      u = stepper.evaluate(u, p);
      ++cycle;
      inner.push_back(u);
      out.entries.push_back({cycle, u, EnvelopeKind::Inner});
    }
    const std::size_t h = static_cast<std::size_t>(schedule.chord_points);
    const StateVector d = chord_estimate(std::span<const StateVector>(inner).last(h));
    const double chord = (inner.back() - inner[inner.size() - 2]).norm();

    int jump = schedule.jump;
    if (schedule.adaptive) {
      const double last = chord;
      const double before = (inner[inner.size() - 2] - inner[inner.size() - 3]).norm();
      // A zero previous difference leaves nothing to extrapolate.
      const double mu_hat = before > 0.0 ? last / before : std::numeric_limits<double>::infinity();
      jump = std::min(jump, adaptive_jump_cap(mu_hat, schedule.inner_steps));
    }

    if (jump > 0) {
      u = projective_step(u, d, jump);
      cycle += jump;
      out.entries.push_back({cycle, u, EnvelopeKind::Jump});
    }
    out.jumps.push_back(jump);
    out.rounds = round + 1;
    out.final_chord_norm = chord;

    if (chord <= schedule.tolerance) {
      out.converged = true;
      break;
    }
    if (previous_chord > 0.0 && chord > 10.0 * previous_chord) {
      if (++growth_streak >= 3) {
        out.final_state = u;
        out.cycles_covered = cycle;
        out.map_calls = stepper.evaluations() - calls_before;
        throw UnstableEnvelope("projective_run: chord norm grew more than tenfold for three consecutive rounds");
      }
    } else {
      growth_streak = 0;
    }
    previous_chord = chord;
  }

  out.final_state = u;
  out.cycles_covered = cycle;
  out.map_calls = stepper.evaluations() - calls_before;
  return out;
}

}  // namespace tskit
