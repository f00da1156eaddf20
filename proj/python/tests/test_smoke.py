import math

import numpy as np
import pytest

import tskit


def test_rpm_linear_map_matches_closed_form():
    m = tskit.LinearMapModel([0.99, 0.3], offset=np.array([0.01, 0.7]))
    r = tskit.rpm_solve(m, np.zeros(2), tolerance=1e-10)
    assert r.converged and r.status == "Converged"
    assert np.allclose(r.u, [1.0, 1.0], atol=1e-8)
    assert r.map_calls <= 40
    assert r.map_calls == m.evaluations


def test_rpm_rejects_unknown_option():
    m = tskit.QuadraticMap()
    with pytest.raises(TypeError):
        tskit.rpm_solve(m, np.zeros(1), tolerence=1e-8)


def test_python_callable_as_timestepper():
    m = tskit.FunctionTimestepper(1, lambda u, p: 1.02 * u - 0.02)
    r = tskit.rpm_solve(m, np.array([1.5]), tolerance=1e-10)
    assert r.converged
    assert abs(r.u[0] - 1.0) < 1e-10
    d = tskit.direct_simulation(m, np.array([1.5]), tolerance=1e-10, max_cycles=200)
    assert not d.converged


def test_floquet_multipliers_of_oscillator():
    osc = tskit.ForcedOscillatorModel()
    p = osc.default_parameters()
    u = tskit.ForcedOscillatorModel.periodic_state(p)
    f = tskit.floquet_multipliers(osc, u, 2)
    expected = np.linalg.eigvals(tskit.ForcedOscillatorModel.monodromy(p))
    got = np.array(f.multipliers)
    for z in expected:
        assert np.min(np.abs(got - z)) < 1e-6
    assert f.stable


def test_fold_of_quadratic_map():
    q = tskit.QuadraticMap()
    br = tskit.trace_branch(q, np.zeros(1), 0.0, 0.0, 0.3, tolerance=1e-10)
    folds = tskit.detect_fold(br, q)
    assert len(folds) == 1
    assert abs(folds[0].lambda_ - 0.25) < 1e-4
    assert abs(folds[0].u[0] - 0.5) < 1e-4
    assert max(pt.lambda_ for pt in br.points) == pytest.approx(0.25, abs=1e-4)


def test_projective_run_and_instability():
    m = tskit.LinearMapModel([0.99, 0.2, 0.1], fixed_point=np.ones(3), conjugation_seed=3)
    t = tskit.projective_run(m, np.zeros(3), tolerance=1e-8)
    assert t.converged
    assert np.linalg.norm(t.final_state - 1.0) < 1e-6
    assert t.speedup == pytest.approx(4.0, rel=0.05)
    scalar = tskit.LinearMapModel([0.5], offset=np.array([0.5]))
    with pytest.raises(tskit.UnstableEnvelope):
        tskit.projective_run(scalar, np.zeros(1), inner_steps=2, jump=50)
    assert issubclass(tskit.UnstableEnvelope, tskit.Error)
    assert tskit.adaptive_jump_cap(0.5, 3) == 1


def test_adsorption_cycle_respects_bounds():
    col = tskit.AdsorptionColumnModel(n_z=20, dt=0.01)
    u = col.default_initial_state()
    for _ in range(5):
        u = col.evaluate(u)
    assert u.shape == (40,)
    assert u.min() >= -1e-12
    assert col.max_balance_error <= 1e-6
    with pytest.raises(tskit.CflViolation):
        tskit.AdsorptionColumnModel(n_z=90, dt=0.05).evaluate(np.zeros(180))


def test_run_config_and_errors(tmp_path):
    yaml = """
model:
  kind: linear_map
  eigenvalues: [0.99, 0.5]
  offset: [0.01, 0.5]
task:
  kind: fixed-point
  tolerance: 1.0e-10
"""
    report = tskit.run_config(yaml, out=str(tmp_path))
    assert report.success and report.status == "Converged"
    assert np.allclose(report.fixed_point, [1.0, 1.0], atol=1e-8)
    assert all((tmp_path / p.split("/")[-1]).exists() for p in report.csv_paths)
    canonical = tskit.validate_config(yaml)
    assert "max_basis" in canonical
    with pytest.raises(tskit.ConfigError, match="tolerence"):
        tskit.run_config(yaml.replace("tolerance", "tolerence"))


def test_evaluation_is_deterministic():
    col = tskit.AdsorptionColumnModel(n_z=20, dt=0.01)
    u = np.linspace(0.0, 0.5, 40)
    a = col.evaluate(u)
    b = col.evaluate(u)
    assert np.array_equal(a, b)
    assert math.isfinite(float(a.sum()))
