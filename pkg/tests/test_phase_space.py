import numpy as np
import pytest

from oracles import gaussian_overlap_modulus
from semiclassical_lab.errors import GridTooCoarse, NonNormalizedSymbol
from semiclassical_lab.phase_space import (
    CoherentStateSpec, Grid, SymbolFunction, WaveFunction, aligned_distance, fidelity, fourier_side,
    from_fourier_side, gaussian_symbol, hermite_symbol, inner_product, ipr, make_coherent_state,
    read_wavefunction_csv, trig_interpolate, write_wavefunction_csv,
)

TWO_PI = 2 * np.pi


def test_grid_geometry():
    g = Grid.line(-1.0, 1.0, 8)
    assert g.dx == pytest.approx(0.25)
    assert g.x[0] == -1.0 and g.x[-1] == pytest.approx(0.75)
    assert g.weight == g.dx
    assert Grid.torus(16).weight == 1.0
    w = g.widened(2)
    assert w.n == 16 and w.dx == g.dx and w.x_min == -2.0


@pytest.mark.parametrize("kind,n", [("line", 1), ("bogus", 8)])
def test_grid_rejects_bad_input(kind, n):
    with pytest.raises(ValueError):
        Grid(kind, n, 0.0, 1.0)


def test_gaussian_symbol_is_normalized():
    assert gaussian_symbol().norm() == pytest.approx(1.0, abs=1e-12)
    for j in range(5):
        assert hermite_symbol(j).norm() == pytest.approx(1.0, abs=1e-12)


def test_circle_gaussian_state_matches_image_sum():
    # the analytic Fourier-coefficient route and a direct periodized sample agree
    hbar = TWO_PI / 512
    grid = Grid.circle(2048)
    spec = CoherentStateSpec(1.0, 0.5, gaussian_symbol())
    psi = make_coherent_state(spec, grid, hbar)
    x = grid.x
    direct = sum(np.exp(-((x + TWO_PI * m - 1.0) ** 2) / (2 * hbar)) * np.exp(0.5j * (x + TWO_PI * m) / hbar)
                 for m in range(-3, 4))
    ref = WaveFunction(grid, direct, hbar).normalized()
    assert aligned_distance(psi, ref) < 1e-10
    assert psi.norm() == pytest.approx(1.0, abs=1e-13)


def test_line_state_overlap_against_quadrature():
    hbar = 1e-2
    grid = Grid.line(-2, 2, 2048)
    a = make_coherent_state(CoherentStateSpec(0.0, 0.0, gaussian_symbol()), grid, hbar)
    b = make_coherent_state(CoherentStateSpec(0.15, 0.0, gaussian_symbol()), grid, hbar)
    assert abs(inner_product(a, b)) == pytest.approx(gaussian_overlap_modulus(0.15, hbar), rel=1e-10)
    assert abs(inner_product(a, b)) == pytest.approx(np.exp(-0.15 ** 2 / (4 * hbar)), rel=1e-10)


def test_squeezed_state_width():
    hbar, eps = 1e-3, 0.3
    grid = Grid.line(-1, 1, 2 ** 14)
    psi = make_coherent_state(CoherentStateSpec(0.0, 0.0, gaussian_symbol(), squeeze_eps=eps), grid, hbar)
    var = np.sum(grid.x ** 2 * np.abs(psi.values) ** 2) * grid.dx
    assert var == pytest.approx(hbar ** (1 - eps) / 2, rel=1e-8)


def test_coarse_grid_and_bad_symbol_are_rejected():
    with pytest.raises(GridTooCoarse):
        make_coherent_state(CoherentStateSpec(0.0, 0.0, gaussian_symbol()), Grid.circle(64), 1e-4)
    half = SymbolFunction.from_callable(lambda y: 0.5 * np.pi ** -0.25 * np.exp(-y * y / 2) + 0j)
    with pytest.raises(NonNormalizedSymbol):
        make_coherent_state(CoherentStateSpec(0.0, 0.0, half), Grid.circle(4096), 1e-3)


def test_fourier_round_trip_and_parseval():
    rng = np.random.default_rng(1)
    grid = Grid.circle(256)
    f = WaveFunction(grid, rng.normal(size=256) + 1j * rng.normal(size=256), 0.1)
    co = fourier_side(f)
    back = from_fourier_side(co, grid, 0.1)
    assert np.max(np.abs(back.values - f.values)) < 1e-12
    # coefficients of exp(i n x): ||f||^2 = 2 pi sum |c_n|^2
    assert grid.length * np.sum(np.abs(co.c) ** 2) == pytest.approx(f.norm() ** 2, rel=1e-12)


def test_fidelity_and_ipr():
    grid = Grid.line(-5, 5, 1000)
    box = WaveFunction(grid, (np.abs(grid.x) < 1).astype(float), 1.0)
    assert ipr(box) == pytest.approx(0.5, rel=1e-2)
    assert fidelity(box, box.with_values(2j * box.values)) == pytest.approx(1.0)
    assert aligned_distance(box.normalized(), box.with_values(1j * box.values).normalized()) < 1e-14


def test_trig_interpolation_is_exact_for_band_limited_data():
    grid = Grid.circle(32)
    vals = np.exp(3j * grid.x) + 0.5 * np.cos(5 * grid.x)
    y = np.linspace(0, TWO_PI, 17)[:-1] + 0.1
    out = trig_interpolate(vals, grid, y)
    assert np.max(np.abs(out - (np.exp(3j * y) + 0.5 * np.cos(5 * y)))) < 1e-12


def test_wavefunction_csv_round_trip(tmp_path):
    grid = Grid.circle(64)
    f = WaveFunction(grid, np.exp(1j * grid.x) * np.sin(grid.x) ** 2, 0.25)
    path = tmp_path / "psi.csv"
    write_wavefunction_csv(path, f)
    g = read_wavefunction_csv(path)
    assert g.grid == grid and g.hbar == 0.25
    assert np.array_equal(g.values, f.values)
