"""Long-time reconstruction of wave packets near hyperbolic points: revival
scans, the symbol maps of homoclinic/heteroclinic passages, lattice path
sums (pendulum and Harper) and the Lagrangian-measure limit of
expectation values."""
from __future__ import annotations

import itertools
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.signal import czt

from .classical import HamiltonianSystem, SeparatrixCurve, compute_t0, normal_form_chart, separatrix
from .errors import (AdmissibilityWarning, PeakNotFound, SupportTruncated, TooManyPaths,
                     UnsupportedSymbolForm)
from .metaplectic import SymplecticMatrix2, lct_apply
from .phase_space import TWO_PI, CoherentStateSpec, Grid, SymbolFunction, WaveFunction
from .propagators import (EigenPropagator, ObservableSymbol, harper_operator, line_grid_for,
                          torus_coherent_state, torus_propagate)


# cutoff ------------------------------------------------------------------------------

def _bump_tail(s):
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def cutoff(y) -> np.ndarray:
    """Smooth cutoff: 1 on ``|y| <= 1``, 0 on ``|y| >= 2``, infinitely smooth between."""
    u = np.abs(np.asarray(y, dtype=float)) - 1.0
    a = _bump_tail(1.0 - u)
    b = _bump_tail(u)
    return a / (a + b)


def wide_symbol_grid(half_width: float = 256.0, n: int = 32768) -> Grid:
    """Symbol grid for the symbol maps; their outputs decay only like ``exp(-c |eta|^{2/3})``."""
    return Grid.line(-half_width, half_width, n)


# autocorrelation scans -------------------------------------------------------------------

@dataclass
class AutocorrelationSeries:
    times: np.ndarray
    fidelity: np.ndarray
    ipr: np.ndarray
    peak_x: np.ndarray


def autocorrelation_scan(propagator, psi0: WaveFunction, times) -> AutocorrelationSeries:
    """Fidelity ``|<psi0, psi_t>|``, IPR and density peak location along ``times``.

    ``propagator`` is an :class:`EigenPropagator` or a callable returning the
    stacked values ``(len(times), N)``.
    """
    times = np.asarray(times, dtype=float)
    if hasattr(propagator, "propagate_many"):
        states = propagator.propagate_many(psi0, times)
    else:
        states = np.asarray(propagator(psi0, times))
    w = psi0.grid.weight
    fid = np.abs(states @ psi0.values.conj() * w)
    dens = np.abs(states) ** 2
    iprs = np.sum(dens ** 2, axis=1) * w / (np.sum(dens, axis=1) * w) ** 2
    peaks = psi0.grid.x[np.argmax(dens, axis=1)]
    return AutocorrelationSeries(times, fid, iprs, peaks)


def find_revival_peak(series: AutocorrelationSeries, t_min: float = 1.0, rise: float = 0.2) -> tuple:
    """First local maximum after ``t_min`` rising at least ``rise`` above the
    running minimum; refined by a parabola through the three nearest samples."""
    t, f = series.times, series.fidelity
    running_min = np.inf
    for i in range(1, len(t) - 1):
        if t[i] <= t_min:
            continue
        running_min = min(running_min, f[i - 1])
        if f[i] >= f[i - 1] and f[i] > f[i + 1] and f[i] - running_min >= rise:
            denom = f[i - 1] - 2 * f[i] + f[i + 1]
            shift = 0.5 * (f[i - 1] - f[i + 1]) / denom if denom != 0 else 0.0
            dt = t[i + 1] - t[i]
            height = f[i] - 0.25 * (f[i - 1] - f[i + 1]) * shift
            return float(t[i] + shift * dt), float(height)
    raise PeakNotFound("no revival peak in the scanned window")


def dilation_propagator(psi0: WaveFunction, times) -> np.ndarray:
    """Exact evolution under the quantized ``x xi``:
    ``psi_t(x) = exp(-t/2) psi0(exp(-t) x)``."""
    out = []
    sym = SymbolFunction(psi0.grid, psi0.values)
    for t in np.asarray(times, dtype=float):
        out.append(np.exp(-0.5 * t) * sym(np.exp(-t) * psi0.grid.x, method="trig"))
    return np.array(out)


@dataclass
class RevivalScalingReport:
    hbars: np.ndarray
    log_inv_hbar: np.ndarray
    peak_times: np.ndarray
    peak_heights: np.ndarray
    slope: float
    intercept: float
    t0: float
    rate: float
    series: list = field(default_factory=list)


def revival_time_scaling(system: HamiltonianSystem, spec: CoherentStateSpec, hbars: Sequence[float],
                         window=(0.5, 2.0), step: float = 0.02, t0: Optional[float] = None,
                         propagator_factory: Optional[Callable] = None, threads: int = 1) -> RevivalScalingReport:
    """Locate the first autocorrelation revival for each hbar and fit
    ``peak = A log(1/hbar) + B``. Times are in hyperbolic units (physical
    time times the rate at the saddle)."""
    if len(hbars) < 3:
        raise ValueError("the fit needs at least three hbar values")
    chart = normal_form_chart(system)
    lam = chart.rate
    if t0 is None:
        t0 = compute_t0(separatrix(system))

    def one(hbar):
        L = np.log(1.0 / hbar)
        taus = np.arange(window[0] * L, window[1] * L + 1e-12, step * L)
        grid = line_grid_for(system, spec, hbar)
        psi0 = _coherent(spec, grid, hbar)
        prop = propagator_factory(system, grid, hbar) if propagator_factory else EigenPropagator(system, grid, hbar)
        series = autocorrelation_scan(prop, psi0, taus / lam)
        series.times = taus
        return series, find_revival_peak(series, t_min=lam * 1.0)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, hbars))
    else:
        results = [one(h) for h in hbars]
    peaks = np.array([r[1][0] for r in results])
    heights = np.array([r[1][1] for r in results])
    L = np.log(1.0 / np.asarray(hbars, dtype=float))
    A, B = np.polyfit(L, peaks, 1)
    return RevivalScalingReport(np.asarray(hbars, float), L, peaks, heights,
                                float(A), float(B), float(t0), float(lam), [r[0] for r in results])


def _coherent(spec, grid, hbar):
    from .phase_space import make_coherent_state

    return make_coherent_state(spec, grid, hbar)


# normal-form chart transfer -----------------------------------------------------------------

def lobe_action(system: HamiltonianSystem, branch: int = 1, ds: float = 2e-3) -> float:
    """``int xi dx`` along the traced separatrix branch."""
    return _curve_action(system, separatrix(system, branch=branch, ds=ds))


def _curve_action(system: HamiltonianSystem, curve: SeparatrixCurve) -> float:
    # xi dx = xi dh/dxi dt, integrated in the smooth curve parameter
    _, dxi = system.grad(curve.x, curve.xi)
    return float(integrate.trapezoid(curve.xi * dxi, curve.s) / curve.start.rate)


def chart_symbol(a: SymbolFunction, system: HamiltonianSystem) -> SymbolFunction:
    """Symbol of a coherent state at the saddle, expressed in normal-form coordinates."""
    P = SymplecticMatrix2.from_array(normal_form_chart(system).P)
    return lct_apply(P.inverse(), a)


def chart_state(u: SymbolFunction, system: HamiltonianSystem, grid: Grid, hbar: float) -> WaveFunction:
    """Coherent state at the saddle whose normal-form symbol is ``u``."""
    chart = normal_form_chart(system)
    back = lct_apply(SymplecticMatrix2.from_array(chart.P), u)
    q, p = chart.center
    x = grid.x
    vals = hbar ** -0.25 * back((x - q) / np.sqrt(hbar), method="spline") * np.exp(1j * p * x / hbar)
    return WaveFunction(grid, vals, hbar)


# symbol maps ---------------------------------------------------------------------------

def _half_line_transform(a: SymbolFunction, hbar: float, gamma: float, arg_sign: int, exp_sign: int,
                         out_grid: Grid, dmu: Optional[float] = None) -> np.ndarray:
    """``(2 pi)^{-1/2} int_0^inf a(arg_sign/mu) mu^{-1} rho(mu hbar^gamma) exp(exp_sign i eta mu) dmu``
    on ``out_grid`` by the trapezoid rule and a chirp-z sum.

    The integrand vanishes to all orders at both ends, so the uniform rule
    converges faster than any power of ``dmu``.
    """
    top = 2.0 * hbar ** -gamma
    eta_max = max(abs(out_grid.x_min), abs(out_grid.x_max))
    if dmu is None:
        dmu = min(0.5 * np.pi / eta_max, 4e-3)
    K = int(np.ceil(top / dmu))
    dmu = top / K
    mu = dmu * np.arange(1, K)
    f = a(arg_sign / mu) / mu * cutoff(mu * hbar ** gamma)
    f = np.concatenate([[0.0], f])
    eta0, deta, m = out_grid.x_min, out_grid.dx, out_grid.n
    k = np.arange(K)
    pre = f * np.exp(exp_sign * 1j * eta0 * dmu * k)
    w = np.exp(exp_sign * 1j * deta * dmu)
    core = czt(pre, m=m, w=w, a=1.0)
    return dmu / np.sqrt(TWO_PI) * core


def half_line_transform_quad(a: Callable, hbar: float, gamma: float, arg_sign: int, exp_sign: int,
                             eta: Sequence[float]) -> np.ndarray:
    """Independent evaluation with QUADPACK's oscillatory (Filon-type) rules."""
    top = 2.0 * hbar ** -gamma

    def g(mu, part):
        if mu <= 0:
            return 0.0
        v = complex(np.asarray(a(np.array([arg_sign / mu])))[0]) / mu * float(cutoff(mu * hbar ** gamma))
        return v.real if part == 0 else v.imag

    out = []
    for e in eta:
        val = 0j
        for part, unit in ((0, 1.0), (1, 1j)):
            if e == 0:
                c = integrate.quad(g, 0.0, top, args=(part,), limit=400, epsabs=1e-13)[0]
                s = 0.0
            else:
                c = integrate.quad(g, 0.0, top, args=(part,), weight="cos", wvar=e, limit=400, epsabs=1e-13)[0]
                s = integrate.quad(g, 0.0, top, args=(part,), weight="sin", wvar=e, limit=400, epsabs=1e-13)[0]
            val += unit * (c + exp_sign * 1j * s)
        out.append(val / np.sqrt(TWO_PI))
    return np.array(out)


def symbol_map_U(a: SymbolFunction, hbar: float, gamma: float, S_plus: float, S_minus: float,
                 grid: Optional[Grid] = None) -> SymbolFunction:
    """Homoclinic symbol map: both lobes' inverted-and-transformed symbols,
    each carrying ``exp(i (S + pi/2) / hbar)``."""
    grid = grid or a.grid
    b_plus = _half_line_transform(a, hbar, gamma, +1, +1, grid)
    b_minus = _half_line_transform(a, hbar, gamma, -1, -1, grid)
    vals = (np.exp(1j * (S_plus + 0.5 * np.pi) / hbar) * b_plus
            + np.exp(1j * (S_minus + 0.5 * np.pi) / hbar) * b_minus)
    return SymbolFunction(grid, vals, label="U")


def admissible_iterations(hbar: float, C: float = 1.0) -> float:
    L = np.log(1.0 / hbar)
    return C * L / np.log(L)


def iterate_symbol_map(a: SymbolFunction, n: int, hbar: float, gamma: float, S_plus: float,
                       S_minus: float, C: float = 1.0) -> list:
    """``[a, U a, ..., U^n a]``; warns beyond the admissible iteration count."""
    if n > admissible_iterations(hbar, C):
        warnings.warn(f"n={n} exceeds C log(1/hbar)/log log(1/hbar)", AdmissibilityWarning, stacklevel=2)
    out = [a]
    for _ in range(n):
        out.append(symbol_map_U(out[-1], hbar, gamma, S_plus, S_minus))
    return out


def heteroclinic_map(a: SymbolFunction, theta0: float, mu0: float, S_plus: float, sigma: int,
                     hbar: float, gamma: float) -> SymbolFunction:
    """Heteroclinic passage: invert ``eta -> 1/eta`` with the cutoff, dilate by
    ``mu0``, rotate by ``theta0`` and attach ``exp(i (S + sigma pi/2) / hbar)``."""
    eta = a.grid.x
    inv = np.zeros(a.grid.n, dtype=complex)
    pos = eta > 0
    inv[pos] = a(1.0 / eta[pos]) / eta[pos] * cutoff(eta[pos] * hbar ** gamma)
    M = SymplecticMatrix2.rotation(theta0) @ SymplecticMatrix2.squeeze(mu0)
    out = lct_apply(M, SymbolFunction(a.grid, inv))
    return SymbolFunction(out.grid, np.exp(1j * (S_plus + 0.5 * sigma * np.pi) / hbar) * out.values,
                          label="heteroclinic")


def heteroclinic_travel_time(mu0: float, hbar: float, t0: float) -> float:
    """Passage time ``(1/2 + 1/mu0) log(1/hbar) - t0`` attached to the heteroclinic map."""
    if not mu0 > 0:
        raise ValueError("mu0 must be positive")
    return (0.5 + 1.0 / mu0) * np.log(1.0 / hbar) - t0


# lattice paths ---------------------------------------------------------------------------

HARPER_STEPS = {"R": (1, 0), "L": (-1, 0), "U": (0, 1), "D": (0, -1)}
PENDULUM_STEPS = {"+": 1, "-": -1}
MAX_PATH_LENGTH = 12
PENDULUM_LOBE_ACTION = 8.0


def _alphabet(model: str) -> list:
    if model == "harper":
        return sorted(HARPER_STEPS)
    if model == "pendulum":
        return sorted(PENDULUM_STEPS)
    raise ValueError(f"unknown lattice model {model!r}")


def enumerate_paths(model: str, n: int, no_straight_runs: bool = False) -> list:
    """All step strings of length ``n`` in lexicographic order.

    ``no_straight_runs`` drops paths that repeat a step (two collinear
    consecutive segments in the same direction).
    """
    if n > MAX_PATH_LENGTH:
        raise TooManyPaths(f"n={n} exceeds {MAX_PATH_LENGTH}")
    letters = _alphabet(model)
    paths = ("".join(p) for p in itertools.product(letters, repeat=n))
    if no_straight_runs:
        return [p for p in paths if all(p[i] != p[i + 1] for i in range(len(p) - 1))]
    return list(paths)


def path_vertices(model: str, path: str) -> np.ndarray:
    if model == "harper":
        steps = [HARPER_STEPS[c] for c in path]
        return np.vstack([[0, 0], np.cumsum(steps, axis=0)]) if steps else np.zeros((1, 2), int)
    steps = [PENDULUM_STEPS[c] for c in path]
    return np.concatenate([[0], np.cumsum(steps)]) if steps else np.zeros(1, int)


def path_endpoint(model: str, path: str):
    v = path_vertices(model, path)
    return tuple(int(c) for c in v[-1]) if model == "harper" else int(v[-1])


def path_action(model: str, path: str, physical: bool = False) -> float:
    """Harper: ``1/2 sum (p dq - q dp)`` over the polygon with vertices
    ``(q, p)`` in lattice units (times ``2 pi^2`` when ``physical``).
    Pendulum: one separatrix arc of action 8 per step."""
    if model == "harper":
        v = path_vertices(model, path).astype(float)
        q, p = v[:, 0], v[:, 1]
        s = 0.5 * float(np.sum(p[:-1] * q[1:] - q[:-1] * p[1:]))
        return 2.0 * np.pi ** 2 * s if physical else s
    if model == "pendulum":
        _alphabet(model)
        return PENDULUM_LOBE_ACTION * len(path)
    raise ValueError(f"unknown lattice model {model!r}")


def pendulum_arc_action(ds: float = 1e-3) -> float:
    """``int p dq`` along one pendulum separatrix arc, by quadrature."""
    from .classical import pendulum

    system = pendulum()
    return _curve_action(system, separatrix(system, ds=ds))


def _pointwise_inversion(b: SymbolFunction, sign: int, hbar: float, gamma: float) -> np.ndarray:
    eta = b.grid.x
    out = np.zeros(b.grid.n, dtype=complex)
    live = sign * eta > 0
    e = eta[live]
    out[live] = sign * b(1.0 / e) / e * cutoff(e * hbar ** gamma)
    return out


def apply_step(model: str, step: str, b: SymbolFunction, hbar: float, gamma: float) -> SymbolFunction:
    """One lattice step of the path-sum symbol composition."""
    g = b.grid
    if model == "harper":
        if step == "R":
            vals = _pointwise_inversion(b, +1, hbar, gamma)
        elif step == "L":
            vals = _pointwise_inversion(b, -1, hbar, gamma)
        elif step == "U":
            vals = _half_line_transform(b, hbar, gamma, +1, -1, g)
        elif step == "D":
            vals = _half_line_transform(b, hbar, gamma, -1, -1, g)
        else:
            raise ValueError(f"unknown Harper step {step!r}")
    elif model == "pendulum":
        if step == "+":
            vals = _half_line_transform(b, hbar, gamma, +1, -1, g)
        elif step == "-":
            vals = _half_line_transform(b, hbar, gamma, -1, -1, g)
        else:
            raise ValueError(f"unknown pendulum step {step!r}")
    else:
        raise ValueError(f"unknown lattice model {model!r}")
    return SymbolFunction(g, vals, label=step)


def path_symbol(model: str, path: str, a: SymbolFunction, hbar: float, gamma: float) -> SymbolFunction:
    b = a
    for step in path:
        b = apply_step(model, step, b, hbar, gamma)
    return b


def reachable(model: str, endpoint, n: int) -> bool:
    if model == "harper":
        i, j = endpoint
        d = abs(i) + abs(j)
    else:
        d = abs(int(endpoint))
    return d <= n and (n - d) % 2 == 0


def path_sum_element(a: SymbolFunction, b: SymbolFunction, endpoint, n: int, hbar: float, model: str,
                     gamma: float, no_straight_runs: bool = False) -> complex:
    """``sum over paths Gamma of length n ending at endpoint of
    exp(i S_Gamma / hbar) <a, V_Gamma b>`` with lattice-unit actions.

    Unreachable endpoints give exactly zero.
    """
    if not reachable(model, endpoint, n):
        return 0j
    target = tuple(endpoint) if model == "harper" else int(endpoint)
    total = 0j
    cache = {"": b}

    def symbol_for(prefix):
        if prefix not in cache:
            cache[prefix] = apply_step(model, prefix[-1], symbol_for(prefix[:-1]), hbar, gamma)
        return cache[prefix]

    for path in enumerate_paths(model, n, no_straight_runs):
        if path_endpoint(model, path) != target:
            continue
        V = symbol_for(path)
        inner = np.vdot(a.values, V.values) * a.grid.dx
        total += np.exp(1j * path_action(model, path) / hbar) * inner
    return complex(total)


# Harper torus overlaps ---------------------------------------------------------------------

def harper_lattice_point(i: int, j: int) -> tuple:
    """Phase-space position ``(q, p) = pi (i - j, i + j)`` of lattice node ``(i, j)``."""
    return np.pi * (i - j), np.pi * (i + j)


def harper_overlaps(n: int, t: float, points, psi0_center=(0.0, 0.0)) -> np.ndarray:
    """``|<psi_(q,p), exp(-i t H / hbar) psi_0>|`` on the ``N``-point torus for each point."""
    op = harper_operator(n)
    psi0 = torus_coherent_state(n, *psi0_center)
    psit = torus_propagate(psi0, op, t)
    out = []
    for q, p in points:
        probe = torus_coherent_state(n, q, p)
        out.append(abs(np.vdot(probe.values, psit.values)))
    return np.array(out)


# Lagrangian expectation --------------------------------------------------------------------

def lagrangian_expectation(P: ObservableSymbol, a: SymbolFunction, t_prime: float, curve: SeparatrixCurve,
                           tail_tol: float = 1e-6) -> float:
    """``int P(z(s)) |a(+-e^{s + t'})|^2 e^{s + t'} ds`` along one separatrix branch,
    with ``s`` normalized so that the outgoing coordinate behaves like ``e^s``.

    Below the traced range the curve is continued by its linearization.
    """
    if P.form == "general":
        raise UnsupportedSymbolForm("only position, momentum or separable-sum symbols are supported")
    sigma = curve.outgoing_parameter
    sign = curve.branch

    def Pz(x, xi):
        val = 0.0
        if P.position is not None:
            val = val + P.position(x)
        if P.momentum is not None:
            val = val + P.momentum(xi)
        return val

    def density(s):
        u = np.exp(s + t_prime)
        return np.abs(a(sign * u)) ** 2 * u

    head = np.linspace(sigma[0] - 40.0, sigma[0], 4001)
    vu = curve.start.P[:, 0]
    hx = curve.start.center[0] + sign * np.exp(head) * vu[0]
    hxi = curve.start.center[1] + sign * np.exp(head) * vu[1]
    s_all = np.concatenate([head[:-1], sigma])
    x_all = np.concatenate([hx[:-1], curve.x])
    xi_all = np.concatenate([hxi[:-1], curve.xi])
    dens = density(s_all)
    total_mass = 0.5 if a.label == "gaussian" else None
    captured = integrate.trapezoid(dens, s_all)
    if total_mass is None:
        u = np.linspace(0, 60, 200001)[1:]
        total_mass = integrate.trapezoid(np.abs(a(sign * u)) ** 2, u)
    if total_mass - captured > tail_tol:
        raise SupportTruncated(f"density mass {total_mass - captured:.2e} lies beyond the traced curve")
    return float(integrate.trapezoid(Pz(x_all, xi_all) * dens, s_all))


def lagrangian_expectation_both(P: ObservableSymbol, a: SymbolFunction, t_prime: float,
                                system: HamiltonianSystem) -> float:
    """Sum of both separatrix branches."""
    return sum(lagrangian_expectation(P, a, t_prime, separatrix(system, branch=b)) for b in (+1, -1))


# reports -------------------------------------------------------------------------------------

@dataclass
class ReconstructionReport:
    experiment: str
    hbar_list: list
    quantities: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable)

    @classmethod
    def from_json(cls, text: str) -> "ReconstructionReport":
        return cls(**json.loads(text))


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"cannot serialize {type(v)}")
