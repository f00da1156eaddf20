#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "tskit/models.hpp"

namespace tskit {

namespace {

struct OscillatorParams {
  double zeta, omega0, omega, f;
};

OscillatorParams read(const Parameters& p, const ForcedOscillatorSpec& fallback) {
  auto value = [&](const char* key, double dflt) { return p.contains(key) ? p.get(key) : dflt; };
  OscillatorParams out{value("zeta", fallback.zeta), value("omega0", fallback.omega0),
                       value("omega", fallback.omega), value("f", fallback.forcing)};
  if (!(out.omega > 0.0)) throw InvalidArgument("forced_oscillator: omega must be positive");
  return out;
}

}  // namespace

ForcedOscillatorModel::ForcedOscillatorModel(ForcedOscillatorSpec spec) : spec_(spec) {
  if (spec_.n_steps < 1) throw InvalidArgument("forced_oscillator: n_steps must be >= 1");
  if (!(spec_.omega > 0.0)) throw InvalidArgument("forced_oscillator: omega must be positive");
}

double ForcedOscillatorModel::period() const { return 2.0 * std::numbers::pi / spec_.omega; }

Parameters ForcedOscillatorModel::default_parameters() const {
  return Parameters({{"zeta", spec_.zeta}, {"omega0", spec_.omega0}, {"omega", spec_.omega}, {"f", spec_.forcing}},
                    "f");
}

Matrix ForcedOscillatorModel::system_matrix(const Parameters& p) {
  const OscillatorParams q = read(p, ForcedOscillatorSpec{});
  Matrix m(2, 2);
  m << 0.0, 1.0, -q.omega0 * q.omega0, -2.0 * q.zeta * q.omega0;
  return m;
}

Matrix ForcedOscillatorModel::monodromy(const Parameters& p) {
  const OscillatorParams q = read(p, ForcedOscillatorSpec{});
  const Matrix m = system_matrix(p);
  const double t = 2.0 * std::numbers::pi / q.omega;
  const double alpha = 0.5 * m.trace();
  const double disc = alpha * alpha - m.determinant();
  const Matrix shifted = m - alpha * Matrix::Identity(2, 2);
  const double scale = std::exp(alpha * t);
  if (disc < 0.0) {
    const double beta = std::sqrt(-disc);
    return scale * (std::cos(beta * t) * Matrix::Identity(2, 2) + (std::sin(beta * t) / beta) * shifted);
  }
  if (disc > 0.0) {
    const double beta = std::sqrt(disc);
    return scale * (std::cosh(beta * t) * Matrix::Identity(2, 2) + (std::sinh(beta * t) / beta) * shifted);
  }
  return scale * (Matrix::Identity(2, 2) + t * shifted);
}

StateVector ForcedOscillatorModel::periodic_state(const Parameters& p) {
  const OscillatorParams q = read(p, ForcedOscillatorSpec{});
  // x_p(t) = A cos(omega t) + B sin(omega t)
  const double detune = q.omega0 * q.omega0 - q.omega * q.omega;
  const double damp = 2.0 * q.zeta * q.omega0 * q.omega;
  const double denom = detune * detune + damp * damp;
  if (!(denom > 0.0)) throw InvalidArgument("forced_oscillator: undamped resonance has no periodic solution");
  StateVector s(2);
  s << q.f * detune / denom, q.omega * q.f * damp / denom;
  return s;
}

StateVector ForcedOscillatorModel::integrate(const StateVector& u, const Parameters& p, int samples,
                                             std::vector<CycleSample>* out) const {
  const OscillatorParams q = read(p, spec_);
  const double k2 = q.omega0 * q.omega0;
  const double c = 2.0 * q.zeta * q.omega0;
  const int n = spec_.n_steps;
  const double period = 2.0 * std::numbers::pi / q.omega;
  const double h = period / n;

  auto rhs = [&](double t, double x, double v, double& dx, double& dv) {
    dx = v;
    dv = -k2 * x - c * v + q.f * std::cos(q.omega * t);
  };

  double x = u[0];
  double v = u[1];
  int next_sample = 1;
  for (int i = 0; i < n; ++i) {
    const double t = i * h;
    double k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
    rhs(t, x, v, k1x, k1v);
    rhs(t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v, k2x, k2v);
    rhs(t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v, k3x, k3v);
    rhs(t + h, x + h * k3x, v + h * k3v, k4x, k4v);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (out && samples > 0) {
      while (next_sample <= samples && (i + 1) * static_cast<long>(samples) >= next_sample * static_cast<long>(n)) {
        StateVector s(2);
        s << x, v;
        out->push_back({(i + 1) * h, s});
        ++next_sample;
      }
    }
  }
  StateVector r(2);
  r << x, v;
  return r;
}

StateVector ForcedOscillatorModel::step(const StateVector& u, const Parameters& p) const {
  return integrate(u, p, 0, nullptr);
}

StateVector ForcedOscillatorModel::step_sampled(const StateVector& u, const Parameters& p, int samples,
                                                std::vector<CycleSample>& out) const {
  return integrate(u, p, samples, &out);
}

}  // namespace tskit
