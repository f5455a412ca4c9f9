import dataclasses

import numpy as np
import pytest

import oracles
from semiclassical_lab.classical import dilation, double_well, harmonic, separatrix
from semiclassical_lab.errors import AdmissibilityWarning, PeakNotFound, TooManyPaths, UnsupportedSymbolForm
from semiclassical_lab.phase_space import (
    CoherentStateSpec, Grid, SymbolFunction, WaveFunction, gaussian_symbol, ipr, make_coherent_state,
)
from semiclassical_lab.propagators import EigenPropagator, ObservableSymbol, line_grid_for
from semiclassical_lab.reconstruction import (
    AutocorrelationSeries, ReconstructionReport, _half_line_transform, apply_step, autocorrelation_scan, cutoff,
    dilation_propagator, enumerate_paths, find_revival_peak, half_line_transform_quad, harper_lattice_point,
    heteroclinic_map, heteroclinic_travel_time, iterate_symbol_map, lagrangian_expectation, path_action,
    path_endpoint, path_sum_element, path_symbol, reachable, revival_time_scaling, symbol_map_U,
    wide_symbol_grid,
)

GAMMA = 0.15
S_LOBE = 2.0 / 3.0


@pytest.fixture(scope="module")
def wide_gaussian():
    return gaussian_symbol(wide_symbol_grid())


@pytest.fixture(scope="module")
def small_gaussian():
    return gaussian_symbol(wide_symbol_grid(64.0, 4096))


def test_cutoff_profile():
    y = np.linspace(-3, 3, 6001)
    r = cutoff(y)
    assert np.all(r[np.abs(y) <= 1] == 1.0)
    assert np.all(r[np.abs(y) >= 2] == 0.0)
    assert np.all((r >= 0) & (r <= 1))
    right = r[(y >= 1) & (y <= 2)]
    assert np.all(np.diff(right) <= 0)
    # flat to all orders at both junctions: derivatives vanish numerically
    d = np.gradient(r, y)
    assert np.max(np.abs(d[np.abs(np.abs(y) - 1) < 0.01])) < 1e-6


@pytest.mark.parametrize("arg_sign,exp_sign", [(1, 1), (-1, -1), (1, -1)])
def test_half_line_transform_three_routes(wide_gaussian, arg_sign, exp_sign):
    a, hbar = wide_gaussian, 1e-3
    grid = Grid.line(-20, 20, 4000)
    idx = [np.argmin(np.abs(grid.x - e)) for e in (-3.0, -0.5, 0.0, 0.7, 2.5, 10.0)]
    eta = grid.x[idx]
    trap = _half_line_transform(a, hbar, GAMMA, arg_sign, exp_sign, grid)[idx]
    filon = half_line_transform_quad(a, hbar, GAMMA, arg_sign, exp_sign, eta)
    plain = oracles.half_line_transform(a, hbar, GAMMA, arg_sign, exp_sign, eta, cutoff)
    assert np.max(np.abs(trap - filon)) < 1e-7
    assert np.max(np.abs(filon - plain)) < 1e-7


def test_symbol_map_of_zero_is_zero(wide_gaussian):
    zero = SymbolFunction(wide_gaussian.grid, np.zeros(wide_gaussian.grid.n))
    assert np.max(np.abs(symbol_map_U(zero, 1e-3, GAMMA, S_LOBE, S_LOBE).values)) == 0.0


def test_symbol_map_norm_deviation(wide_gaussian):
    devs = [abs(symbol_map_U(wide_gaussian, h, GAMMA, S_LOBE, S_LOBE).norm() - 1) for h in (1e-3, 1e-4, 1e-5)]
    assert devs[0] > devs[1] > devs[2]
    assert devs[1] <= 0.5 * 1e-4 ** (GAMMA / 2)


def test_iteration_identity_and_admissibility(wide_gaussian):
    out = iterate_symbol_map(wide_gaussian, 0, 1e-3, GAMMA, S_LOBE, S_LOBE)
    assert len(out) == 1 and out[0] is wide_gaussian
    with pytest.warns(AdmissibilityWarning):
        iterate_symbol_map(SymbolFunction(Grid.line(-8, 8, 256), np.zeros(256)), 5, 1e-3, GAMMA, S_LOBE, S_LOBE)


def test_heteroclinic_quarter_turn_matches_plus_branch(small_gaussian):
    a, hbar = small_gaussian, 1e-3
    plus = np.exp(1j * (S_LOBE + np.pi / 2) / hbar) * _half_line_transform(a, hbar, GAMMA, 1, 1, a.grid)
    out = heteroclinic_map(a, np.pi / 2, 1.0, S_LOBE, 1, hbar, GAMMA)(a.grid.x, method="trig")
    ov = np.vdot(plus, out)
    assert np.max(np.abs(out - ov / abs(ov) * plus)) < 1e-6


def test_heteroclinic_degenerate_parameters_match_plus_branch(small_gaussian):
    # literal degeneration theta0 = 0, mu0 = 1
    a, hbar = small_gaussian, 1e-3
    plus = np.exp(1j * (S_LOBE + np.pi / 2) / hbar) * _half_line_transform(a, hbar, GAMMA, 1, 1, a.grid)
    out = heteroclinic_map(a, 0.0, 1.0, S_LOBE, 1, hbar, GAMMA)(a.grid.x, method="trig")
    assert np.max(np.abs(out - plus)) < 1e-6


def test_heteroclinic_norm_bound_and_travel_time(small_gaussian):
    a, hbar = small_gaussian, 1e-3
    out = heteroclinic_map(a, 0.4, 2.0, S_LOBE, 1, hbar, GAMMA)
    pos = a.grid.x > 0
    inverted = np.zeros(a.grid.n, complex)
    inverted[pos] = a(1 / a.grid.x[pos]) / a.grid.x[pos] * cutoff(a.grid.x[pos] * hbar ** GAMMA)
    half = np.sqrt(np.sum(np.abs(inverted) ** 2) * a.grid.dx)
    assert out.norm() <= half + 1e-8
    t0 = np.log(8)
    assert heteroclinic_travel_time(2.0, hbar, t0) == pytest.approx(np.log(1 / hbar) - t0)
    with pytest.raises(ValueError):
        heteroclinic_travel_time(0.0, hbar, t0)


def test_path_enumeration_counts():
    assert enumerate_paths("pendulum", 1) == ["+", "-"]
    assert enumerate_paths("harper", 1) == ["D", "L", "R", "U"]
    assert enumerate_paths("harper", 0) == [""]
    for n in range(1, 9):
        assert len(enumerate_paths("pendulum", n)) == 2 ** n
        assert len(enumerate_paths("harper", n)) == 4 ** n
        assert len(enumerate_paths("harper", n, no_straight_runs=True)) == 4 * 3 ** (n - 1)
    with pytest.raises(TooManyPaths):
        enumerate_paths("harper", 13)


def test_harper_actions():
    assert path_action("harper", "RULD") == -1.0
    assert path_action("harper", "RRRR") == 0.0
    assert path_action("harper", "RULD", physical=True) == pytest.approx(-2 * np.pi ** 2)
    rng = np.random.default_rng(4)
    flip = {"R": "L", "L": "R", "U": "D", "D": "U"}
    for _ in range(20):
        path = "".join(rng.choice(list("RLUD"), size=6))
        end = np.array(path_endpoint("harper", path))
        back = "".join(flip[c] for c in reversed(path))
        # the reversed chain runs from the endpoint back to the origin; translate it to start at 0
        v = np.vstack([end, end + np.cumsum([{"R": (1, 0), "L": (-1, 0), "U": (0, 1), "D": (0, -1)}[c]
                                              for c in back], axis=0)])
        q, p = v[:, 0], v[:, 1]
        reversed_area = 0.5 * float(np.sum(p[:-1] * q[1:] - q[:-1] * p[1:]))
        assert reversed_area == -path_action("harper", path)


def test_pendulum_action_per_step():
    assert path_action("pendulum", "+-+") == pytest.approx(3 * oracles.pendulum_arc_action())


def test_lattice_helpers():
    assert harper_lattice_point(1, 0) == (np.pi, np.pi)
    assert harper_lattice_point(0, 1) == (-np.pi, np.pi)
    assert reachable("harper", (1, 0), 1) and not reachable("harper", (1, 1), 1)
    assert not reachable("harper", (3, 0), 1) and reachable("pendulum", -2, 4)


def test_empty_path_and_right_step(small_gaussian):
    a = small_gaussian
    assert path_symbol("harper", "", a, 1e-3, GAMMA) is a
    right = apply_step("harper", "R", a, 1e-3, GAMMA)
    i = int(np.argmin(np.abs(a.grid.x - 2.0)))
    assert a.grid.x[i] == 2.0
    assert right.values[i] == a(np.array([0.5]))[0] / 2


def test_single_path_element(small_gaussian):
    a, hbar = small_gaussian, 1e-3
    right = apply_step("harper", "R", a, hbar, GAMMA)
    hand = np.vdot(a.values, right.values) * a.grid.dx
    assert path_sum_element(a, a, (1, 0), 1, hbar, "harper", GAMMA) == pytest.approx(hand, abs=1e-15)
    assert path_sum_element(a, a, (1, 1), 1, hbar, "harper", GAMMA) == 0


def test_pendulum_minus_step_is_the_minus_half(small_gaussian):
    a, hbar = small_gaussian, 1e-3
    step = apply_step("pendulum", "-", a, hbar, GAMMA).values
    half = _half_line_transform(a, hbar, GAMMA, -1, -1, a.grid)
    assert np.max(np.abs(step - half)) < 1e-7


def test_pendulum_plus_step_reproduces_plus_half(small_gaussian):
    # literal module contract: "+" step equals the phase-stripped "+" half of U
    a, hbar = small_gaussian, 1e-3
    step = apply_step("pendulum", "+", a, hbar, GAMMA).values
    half = _half_line_transform(a, hbar, GAMMA, 1, 1, a.grid)
    assert np.max(np.abs(step - half)) < 1e-7


def test_lagrangian_expectation_total_mass(small_gaussian):
    curve = separatrix(double_well())
    one = ObservableSymbol(position=lambda x: 1.0 + 0 * x)
    assert lagrangian_expectation(one, small_gaussian, 0.5, curve) == pytest.approx(0.5, abs=1e-6)
    with pytest.raises(UnsupportedSymbolForm):
        lagrangian_expectation(ObservableSymbol(general=lambda x, p: x), small_gaussian, 0.5, curve)


def test_lagrangian_expectation_is_covariant(small_gaussian):
    curve = separatrix(double_well())
    shift = 0.3
    moved = dataclasses.replace(curve, seed_offset=curve.seed_offset + shift)
    P = ObservableSymbol(position=lambda x: x * x)
    a = lagrangian_expectation(P, small_gaussian, 0.5, moved)
    b = lagrangian_expectation(P, small_gaussian, 0.5 + shift, curve)
    assert a == pytest.approx(b, abs=1e-8)


def test_autocorrelation_harmonic_period():
    hbar = 1e-2
    spec = CoherentStateSpec(0.5, 0.0, gaussian_symbol())
    grid = line_grid_for(harmonic(), spec, hbar)
    psi = make_coherent_state(spec, grid, hbar)
    s = autocorrelation_scan(EigenPropagator(harmonic(), grid, hbar), psi, [0.0, np.pi, 2 * np.pi])
    assert s.fidelity[0] == pytest.approx(1.0, abs=1e-12)
    assert s.fidelity[2] == pytest.approx(1.0, abs=1e-6)
    assert np.all((s.fidelity >= 0) & (s.fidelity <= 1 + 1e-12))


def test_dilation_never_revives():
    spec = CoherentStateSpec(0.0, 0.0, gaussian_symbol())
    with pytest.raises(PeakNotFound):
        revival_time_scaling(dilation(), spec, [1e-2, 5e-3, 2e-3], t0=0.0,
                             propagator_factory=lambda s, g, h: dilation_propagator)


def test_peak_refinement_on_a_parabola():
    t = np.linspace(0, 10, 101)
    f = np.where(t < 2, 1 - 0.4 * t, np.maximum(0.2, 0.9 - 0.3 * (t - 6.23) ** 2))
    s = AutocorrelationSeries(t, f, np.zeros_like(t), np.zeros_like(t))
    peak, height = find_revival_peak(s)
    assert peak == pytest.approx(6.23, abs=1e-9)
    assert height == pytest.approx(0.9, abs=1e-9)
    with pytest.raises(PeakNotFound):
        find_revival_peak(AutocorrelationSeries(t, np.exp(-t), t, t))


def test_ipr_scales_inversely_with_width():
    grid = Grid.line(-5, 5, 8192)
    ws = np.array([0.1, 0.2, 0.4])
    iprs = [ipr(WaveFunction(grid, np.exp(-grid.x ** 2 / (2 * w * w)), 1.0)) for w in ws]
    assert np.polyfit(np.log(ws), np.log(iprs), 1)[0] == pytest.approx(-1.0, abs=0.05)


def test_report_json_round_trip():
    rep = ReconstructionReport("homoclinic", [1e-3, 3e-4], {"peak": np.float64(10.5)}, {"ok": True})
    back = ReconstructionReport.from_json(rep.to_json())
    assert back.quantities["peak"] == 10.5 and back.hbar_list == [1e-3, 3e-4]
