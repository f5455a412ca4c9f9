import numpy as np
import pytest

import oracles
from semiclassical_lab.classical import (
    check_derivatives, compute_t0, dilation, double_well, estimate_mu, free_particle, harmonic, harper,
    integrate_flow, normal_form_chart, pendulum, quartic_oscillator, richardson_error, rotated, separatrix,
    tangent_flow,
)
from semiclassical_lab.errors import EnergyDriftExceeded, NotHyperbolic
from semiclassical_lab.reconstruction import lobe_action, pendulum_arc_action

SYSTEMS = [free_particle, harmonic, quartic_oscillator, double_well, pendulum, harper, dilation]


def test_harmonic_flow_matches_closed_form():
    z0 = (0.3, 0.2)
    tr = integrate_flow(harmonic(), z0, 5.0, 1e-2)
    assert np.allclose(tr.end, oracles.harmonic_orbit(z0, 5.0), atol=1e-8)


def test_splitting_is_fourth_order():
    z0, T = (0.3, 0.2), 5.0
    ref = np.array(oracles.harmonic_orbit(z0, T))
    e = [np.linalg.norm(np.array(integrate_flow(harmonic(), z0, T, dt, energy_tol=None).end) - ref)
         for dt in (0.05, 0.025)]
    assert 14.0 < e[0] / e[1] < 18.0


def test_gauss_legendre_on_dilation_is_exact_flow():
    tr = integrate_flow(dilation(), (0.1, 0.2), 2.0, 1e-2, tangent=True)
    assert tr.end[0] == pytest.approx(0.1 * np.exp(2), rel=1e-9)
    assert tr.end[1] == pytest.approx(0.2 * np.exp(-2), rel=1e-9)
    assert np.allclose(tr.tangent[-1], np.diag([np.exp(2), np.exp(-2)]), rtol=1e-9)


@pytest.mark.parametrize("factory", [double_well, harper, quartic_oscillator])
def test_tangent_flow_is_symplectic(factory):
    flow = tangent_flow(factory(), (0.4, 0.3), 3.0, 1e-2, energy_tol=None)
    dets = np.linalg.det(flow.matrices)
    assert np.max(np.abs(dets - 1)) < 1e-8


def test_tangent_flow_matches_finite_differences():
    sysm, z0, T, d = double_well(), np.array([0.4, 0.3]), 1.5, 1e-6
    M = tangent_flow(sysm, z0, T, 1e-3).final
    cols = []
    for k in range(2):
        e = np.zeros(2)
        e[k] = d
        plus = np.array(integrate_flow(sysm, z0 + e, T, 1e-3).end)
        minus = np.array(integrate_flow(sysm, z0 - e, T, 1e-3).end)
        cols.append((plus - minus) / (2 * d))
    assert np.allclose(M, np.column_stack(cols), atol=1e-6)


@pytest.mark.parametrize("factory", SYSTEMS)
def test_derivatives_match_finite_differences(factory):
    pts = [(0.2, 0.1), (-0.5, 0.7), (1.1, -0.4)]
    assert check_derivatives(factory(), pts) < 1e-6
    assert check_derivatives(rotated(factory(), 0.7), pts) < 1e-6


def test_action_of_free_flow():
    # l(t) = int (xi dx - h dt) = xi^2 t / 2 for h = xi^2 / 2
    tr = integrate_flow(free_particle(), (0.0, 1.5), 2.0, 1e-2)
    assert tr.action[-1] == pytest.approx(1.5 ** 2 * 2.0 / 2, rel=1e-12)


def test_energy_drift_guard():
    with pytest.raises(EnergyDriftExceeded):
        integrate_flow(double_well(), (1.3, 0.9), 20.0, 0.2, energy_tol=1e-14)


def test_richardson_estimate_is_small_and_positive():
    err = richardson_error(double_well(), (0.3, 0.1), 3.0, 1e-2)
    assert 0 < err < 1e-6


def test_lyapunov_rate():
    assert estimate_mu(harmonic(), (0.3, 0.0), 10.0, 1e-2) == 0.0
    assert estimate_mu(double_well(), (1e-3, 0.0), 3.0, 1e-2) == pytest.approx(2.0, abs=1e-3)


def test_normal_form_chart():
    chart = normal_form_chart(double_well())
    assert chart.rate == pytest.approx(2.0, abs=1e-12)
    assert np.linalg.det(chart.P) == pytest.approx(1.0, abs=1e-12)
    X, Xi = chart.to_chart(0.3, -0.2)
    x, xi = chart.from_chart(X, Xi)
    assert float(x[0]) == pytest.approx(0.3) and float(xi[0]) == pytest.approx(-0.2)
    with pytest.raises(NotHyperbolic):
        normal_form_chart(harmonic(), center=(0.0, 0.0))


@pytest.mark.parametrize("factory,oracle", [
    (double_well, oracles.t0_double_well),
    (pendulum, oracles.t0_pendulum),
    (harper, oracles.t0_harper),
])
def test_t0_matches_closed_form_separatrix(factory, oracle):
    assert compute_t0(separatrix(factory())) == pytest.approx(oracle(), abs=1e-6)


def test_t0_constants():
    assert oracles.t0_double_well() == pytest.approx(np.log(8), abs=1e-9)
    assert oracles.t0_pendulum() == pytest.approx(np.log(32), abs=1e-9)
    assert oracles.t0_harper() == pytest.approx(np.log(8), abs=1e-9)


def test_separatrix_endpoints():
    assert separatrix(double_well()).end.center == pytest.approx((0.0, 0.0), abs=1e-12)
    assert separatrix(pendulum()).end.center == pytest.approx((2 * np.pi, 0.0), abs=1e-12)
    assert separatrix(harper()).end.center == pytest.approx((np.pi, -np.pi), abs=1e-12)


def test_separatrix_actions():
    ref = oracles.double_well_lobe_action()
    assert lobe_action(double_well(), branch=1) == pytest.approx(ref, abs=1e-9)
    assert lobe_action(double_well(), branch=-1) == pytest.approx(ref, abs=1e-9)
    assert pendulum_arc_action() == pytest.approx(oracles.pendulum_arc_action(), abs=1e-9)


def test_trajectory_csv(tmp_path):
    tr = integrate_flow(harmonic(), (1.0, 0.0), 1.0, 1e-2)
    path = tmp_path / "traj.csv"
    tr.write_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,x,xi,action,energy" and len(rows) == len(tr.t) + 1
