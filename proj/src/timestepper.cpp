#include "tskit/timestepper.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace tskit {

Parameters::Parameters(std::map<std::string, double> values, std::string continuation)
    : values_(std::move(values)) {
  if (!continuation.empty()) set_continuation(continuation);
}

double Parameters::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw UnknownParameter("unknown parameter '" + name + "'");
  return it->second;
}

Parameters Parameters::with(const std::string& name, double value) const {
  Parameters out = *this;
  out.values_[name] = value;
  return out;
}

void Parameters::set_continuation(const std::string& name) {
  if (!contains(name)) {
    throw UnknownParameter("continuation parameter '" + name + "' is not a parameter");
  }
  continuation_ = name;
}

double Parameters::continuation_value() const {
  if (continuation_.empty()) throw UnknownParameter("no continuation parameter designated");
  return get(continuation_);
}

Parameters Parameters::with_continuation(double value) const {
  if (continuation_.empty()) throw UnknownParameter("no continuation parameter designated");
  return with(continuation_, value);
}

void Timestepper::check_input(const StateVector& u) const {
  if (static_cast<std::size_t>(u.size()) != dimension()) {
    std::ostringstream msg;
    msg << name() << ": state has dimension " << u.size() << ", expected " << dimension();
    throw DimensionMismatch(msg.str());
  }
  if (!u.allFinite()) throw NonFiniteInput(name() + ": input state contains NaN/Inf");
}

void Timestepper::check_output(const StateVector& v) const {
  if (static_cast<std::size_t>(v.size()) != dimension()) {
    std::ostringstream msg;
    msg << name() << ": map returned dimension " << v.size() << ", expected " << dimension();
    throw DimensionMismatch(msg.str());
  }
  if (!v.allFinite()) throw NonFiniteOutput(name() + ": map produced NaN/Inf");
}

StateVector Timestepper::evaluate(const StateVector& u, const Parameters& p) const {
  check_input(u);
  calls_.fetch_add(1, std::memory_order_relaxed);
  StateVector out = step(u, p);
  check_output(out);
  return out;
}

StateVector Timestepper::evaluate_sampled(const StateVector& u, const Parameters& p, int samples,
                                          std::vector<CycleSample>& out) const {
  check_input(u);
  calls_.fetch_add(1, std::memory_order_relaxed);
  StateVector result = step_sampled(u, p, samples, out);
  check_output(result);
  return result;
}

StateVector Timestepper::step_sampled(const StateVector& u, const Parameters& p, int,
                                      std::vector<CycleSample>&) const {
  return step(u, p);
}

FunctionTimestepper::FunctionTimestepper(std::size_t dim, Map map, std::string name,
                                         Parameters defaults, double period)
    : dim_(dim),
      map_(std::move(map)),
      name_(std::move(name)),
      defaults_(std::move(defaults)),
      period_(period) {
  if (dim_ == 0) throw InvalidArgument("timestepper dimension must be >= 1");
  if (!map_) throw InvalidArgument("timestepper map is empty");
}

StateVector evaluate_map(const Timestepper& stepper, const StateVector& u, const Parameters& p) {
  return stepper.evaluate(u, p);
}

Residual residual(const Timestepper& stepper, const StateVector& u, const Parameters& p) {
  Residual r;
  r.vector = u - stepper.evaluate(u, p);
  r.norm = r.vector.norm();
  return r;
}

StateVector jacobian_vector_product(const Timestepper& stepper, const StateVector& u,
                                    const StateVector& phi_u, const StateVector& v,
                                    const EpsilonPolicy& eps, const Parameters& p) {
  if (v.size() != u.size() || phi_u.size() != u.size()) {
    throw DimensionMismatch("jacobian_vector_product: operand dimensions differ");
  }
  const double vnorm = v.norm();
  if (!(vnorm > 0.0)) throw ZeroDirection("jacobian_vector_product: zero direction");
  const double h = eps.step_for(u.norm());
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");

  StateVector perturbed = u + (h / vnorm) * v;
  StateVector image = stepper.evaluate(perturbed, p);
  return (image - phi_u) * (vnorm / h);
}

Matrix dense_jacobian_bruteforce(const Timestepper& stepper, const StateVector& u,
                                 const Parameters& p, const EpsilonPolicy& eps) {
  const auto n = static_cast<std::size_t>(u.size());
  if (n > kMaxBruteForceDimension) {
    throw DimensionTooLarge("dense_jacobian_bruteforce: N = " + std::to_string(n) +
                            " exceeds " + std::to_string(kMaxBruteForceDimension));
  }
  const StateVector phi_u = stepper.evaluate(u, p);
  Matrix jac(n, n);
  StateVector e = StateVector::Zero(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    jac.col(j) = jacobian_vector_product(stepper, u, phi_u, e, eps, p);
    e[j] = 0.0;
  }
  return jac;
}

}  // namespace tskit
