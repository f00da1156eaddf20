#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tskit/errors.hpp"

namespace tskit {

/// Dense state of the differential variables at a cycle boundary.
using StateVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Named real parameters with one slot designated for continuation.
class Parameters {
 public:
  Parameters() = default;
  explicit Parameters(std::map<std::string, double> values, std::string continuation = {});

  double get(const std::string& name) const;
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  void set(const std::string& name, double value) { values_[name] = value; }

  /// Copy with a single entry replaced.
  Parameters with(const std::string& name, double value) const;

  const std::string& continuation_name() const { return continuation_; }
  void set_continuation(const std::string& name);
  double continuation_value() const;
  Parameters with_continuation(double value) const;

  const std::map<std::string, double>& values() const { return values_; }

  friend bool operator==(const Parameters&, const Parameters&) = default;

 private:
  std::map<std::string, double> values_;
  std::string continuation_;
};

/// Sampled intermediate state inside one map evaluation.
struct CycleSample {
  double time = 0.0;
  StateVector state;
};

/// Black-box cycle map U -> Phi(U; p).
///
/// Concrete models implement `step`. All evaluations go through the
/// non-virtual `evaluate`, which validates dimensions and finiteness and
/// bumps the call counter. `step` must be a pure function of its inputs so
/// that evaluations may run concurrently.
class Timestepper {
 public:
  virtual ~Timestepper() = default;

  virtual std::size_t dimension() const = 0;
  /// Informational horizon of one map application, in model time units.
  virtual double period() const { return 1.0; }
  virtual Parameters default_parameters() const { return {}; }
  virtual StateVector default_initial_state() const { return StateVector::Zero(dimension()); }
  virtual std::string name() const = 0;

  StateVector evaluate(const StateVector& u, const Parameters& p) const;
  /// As `evaluate`, additionally returning `samples` evenly spaced
  /// intermediate states (one counted map call).
  StateVector evaluate_sampled(const StateVector& u, const Parameters& p, int samples,
                               std::vector<CycleSample>& out) const;

  std::uint64_t evaluations() const { return calls_.load(std::memory_order_relaxed); }

 protected:
  virtual StateVector step(const StateVector& u, const Parameters& p) const = 0;
  virtual StateVector step_sampled(const StateVector& u, const Parameters& p, int samples,
                                   std::vector<CycleSample>& out) const;

 private:
  void check_input(const StateVector& u) const;
  void check_output(const StateVector& v) const;

  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Wraps an arbitrary callable as a timestepper.
class FunctionTimestepper : public Timestepper {
 public:
  using Map = std::function<StateVector(const StateVector&, const Parameters&)>;

  FunctionTimestepper(std::size_t dim, Map map, std::string name = "function",
                      Parameters defaults = {}, double period = 1.0);

  std::size_t dimension() const override { return dim_; }
  double period() const override { return period_; }
  Parameters default_parameters() const override { return defaults_; }
  std::string name() const override { return name_; }

 protected:
  StateVector step(const StateVector& u, const Parameters& p) const override { return map_(u, p); }

 private:
  std::size_t dim_;
  Map map_;
  std::string name_;
  Parameters defaults_;
  double period_;
};

/// Finite-difference step policy: eps = base * (1 + |u|) when scaling.
struct EpsilonPolicy {
  double base = 1.4901161193847656e-08;  // sqrt(DBL_EPSILON)
  bool scale_with_state = true;

  double step_for(double state_norm) const {
    return scale_with_state ? base * (1.0 + state_norm) : base;
  }
};

struct Residual {
  StateVector vector;
  double norm = 0.0;
};

StateVector evaluate_map(const Timestepper& stepper, const StateVector& u, const Parameters& p);

/// u - Phi(u; p) and its 2-norm. One map call.
Residual residual(const Timestepper& stepper, const StateVector& u, const Parameters& p);

/// Forward-difference estimate of Phi_U v, given phi_u = Phi(u; p).
/// One map call.
StateVector jacobian_vector_product(const Timestepper& stepper, const StateVector& u,
                                    const StateVector& phi_u, const StateVector& v,
                                    const EpsilonPolicy& eps, const Parameters& p);

inline constexpr std::size_t kMaxBruteForceDimension = 200;

/// Dense Jacobian assembled column by column from unit directions; N+1 map
/// calls. Intended as a test oracle.
Matrix dense_jacobian_bruteforce(const Timestepper& stepper, const StateVector& u,
                                 const Parameters& p, const EpsilonPolicy& eps = {});

}  // namespace tskit
