"""Metaplectic action of 2x2 symplectic matrices on symbols and the
linearized (frozen-symbol) approximation of quantum evolution.

Convention: the operator attached to ``S`` moves Wigner functions by
``W -> W o S^{-1}``, so the free flow of ``h = xi**2/2`` over time ``t``
corresponds to ``[[1, t], [0, 1]]``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.signal import czt

from .circle_spectral import hermite_functions
from .classical import HamiltonianSystem, integrate_flow
from .errors import DegenerateDecomposition, NotSymplectic, TruncationWarning
from .phase_space import (CoherentStateSpec, Grid, SymbolFunction, WaveFunction, aligned_distance,
                          make_coherent_state)


@dataclass(frozen=True)
class SymplecticMatrix2:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > 1e-10:
            raise NotSymplectic(f"determinant {det!r} differs from 1")

    @classmethod
    def from_array(cls, m) -> "SymplecticMatrix2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def rotation(cls, theta: float) -> "SymplecticMatrix2":
        c, s = np.cos(theta), np.sin(theta)
        return cls(c, -s, s, c)

    @classmethod
    def shear_upper(cls, b: float) -> "SymplecticMatrix2":
        return cls(1.0, b, 0.0, 1.0)

    @classmethod
    def shear_lower(cls, c: float) -> "SymplecticMatrix2":
        return cls(1.0, 0.0, c, 1.0)

    @classmethod
    def squeeze(cls, lam: float) -> "SymplecticMatrix2":
        return cls(lam, 0.0, 0.0, 1.0 / lam)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other: "SymplecticMatrix2") -> "SymplecticMatrix2":
        return SymplecticMatrix2.from_array(self.as_array() @ other.as_array())

    def inverse(self) -> "SymplecticMatrix2":
        return SymplecticMatrix2(self.d, -self.b, -self.c, self.a)


# elementary operators --------------------------------------------------------

def _chirp(values, y, c):
    """Lower shear ``[[1, 0], [c, 1]]``: multiply by ``exp(i c y^2 / 2)``."""
    return values * np.exp(0.5j * c * y * y)


def _fresnel(values, grid: Grid, b):
    """Upper shear ``[[1, b], [0, 1]]``: free evolution, zero padded."""
    n = grid.n
    padded = np.zeros(2 * n, dtype=complex)
    padded[n // 2:n // 2 + n] = values
    k = 2 * np.pi * np.fft.fftfreq(2 * n, d=grid.dx)
    out = np.fft.ifft(np.fft.fft(padded) * np.exp(-0.5j * b * k * k))
    return out[n // 2:n // 2 + n]


def grid_fourier(values, grid: Grid, sign: int = -1) -> np.ndarray:
    """Unitary Fourier transform sampled on the same grid,
    ``(2 pi)^{-1/2} int f(y) exp(sign i k y) dy``, via a chirp-z transform."""
    y0, dy, n = grid.x_min, grid.dx, grid.n
    j = np.arange(n)
    pre = values * np.exp(sign * 1j * y0 * dy * j)
    w = np.exp(sign * 1j * dy * dy)
    core = czt(pre, m=n, w=w, a=1.0)
    return dy / np.sqrt(2 * np.pi) * np.exp(sign * 1j * (y0 * y0 + y0 * dy * j)) * core


def _quarter(values, grid: Grid, turns: int):
    """Operator of ``R(turns * pi/2)``; ``R(pi/2)`` is ``exp(i pi/4)`` times the inverse transform."""
    turns %= 4
    for _ in range(turns):
        values = np.exp(0.25j * np.pi) * grid_fourier(values, grid, sign=1)
    return values


def _dilate(values, grid: Grid, lam: float):
    """Operator of ``diag(lam, 1/lam)``: ``f(y) -> lam^{-1/2} f(y / lam)``."""
    sym = SymbolFunction(grid, values)
    method = "trig" if grid.n <= 4096 else "spline"
    return sym(grid.x / lam, method=method) / np.sqrt(abs(lam))


def _support_radius(values, grid: Grid, rel: float = 1e-16) -> float:
    dens = np.abs(values) ** 2
    live = np.nonzero(dens > rel * np.max(dens))[0] if np.any(dens) else np.array([0])
    y = grid.x[live]
    return float(max(abs(y.min()), abs(y.max()), grid.dx))


def _plan(S: SymplecticMatrix2, grid: Grid, radius: float):
    """Pick quarter turns ``k`` so that ``S = S' R(k pi/2)`` has a well-conditioned
    factorization of ``S'``: a dilation when ``S'`` is diagonal, otherwise
    shears ``L(alpha) U(B) L(beta)``."""
    kmax = np.pi / grid.dx
    y = min(radius, max(abs(grid.x_min), abs(grid.x_max)))
    best = None
    for k in range(4):
        Sp = S @ SymplecticMatrix2.rotation(-k * np.pi / 2)
        if abs(Sp.b) < 1e-12 and abs(Sp.c) < 1e-12 and Sp.a > 0:
            return k, "dilate", Sp.a
        if abs(Sp.b) < 1e-12:
            continue
        alpha = (Sp.d - 1.0) / Sp.b
        beta = (Sp.a - 1.0) / Sp.b
        cost = max(abs(alpha), abs(beta)) * y / kmax + abs(Sp.b) * 1e-3
        if best is None or cost < best[0]:
            best = (cost, k, (alpha, Sp.b, beta))
    if best is None or best[0] > 0.9:
        raise DegenerateDecomposition("no resolvable shear factorization on this grid")
    return best[1], "shear", best[2]


def _is_rotation(S: SymplecticMatrix2) -> bool:
    return abs(S.a - S.d) < 1e-12 and abs(S.b + S.c) < 1e-12


def lct_apply(S: SymplecticMatrix2, a: SymbolFunction, tail: float = 1e-12, max_widen: int = 3) -> SymbolFunction:
    """Apply the metaplectic operator of ``S`` to a symbol.

    The sign of the metaplectic lift is fixed by the factorization; all
    downstream comparisons are insensitive to a global phase. The grid is
    widened (same spacing) when the output spills toward its edges.
    """
    try:
        return _lct_direct(S, a, tail, max_widen)
    except DegenerateDecomposition:
        theta = float(np.arctan2(S.c, S.a))
        if not _is_rotation(S) or abs(theta) < 1e-3:
            raise
    # wide grids cannot resolve the chirps of a large rotation; halve it
    half = SymplecticMatrix2.rotation(theta / 2)
    return lct_apply(half, lct_apply(half, a, tail, max_widen), tail, max_widen)


def _lct_direct(S: SymplecticMatrix2, a: SymbolFunction, tail: float, max_widen: int) -> SymbolFunction:
    grid, vals = a.grid, a.values
    for _ in range(max_widen + 1):
        # chirps only need resolving where the rotated input lives
        radius = max(_support_radius(vals, grid), _support_radius(_quarter(vals, grid, 1), grid))
        k, kind, params = _plan(S, grid, radius)
        y = grid.x
        out = _quarter(vals, grid, k)
        if kind == "dilate":
            if params != 1.0:
                out = _dilate(out, grid, params)
        else:
            alpha, b, beta = params
            out = _chirp(out, y, beta)
            out = _fresnel(out, grid, b)
            out = _chirp(out, y, alpha)
        edge = np.abs(y) > 0.85 * max(abs(grid.x_min), abs(grid.x_max))
        if np.sum(np.abs(out[edge]) ** 2) * grid.dx <= tail:
            return SymbolFunction(grid, out, label="lct")
        grid = grid.widened(2)
        padded = np.zeros(grid.n, dtype=complex)
        offset = grid.n // 4
        padded[offset:offset + vals.size] = vals
        vals = padded
    raise DegenerateDecomposition("output does not fit even on the widened grid")


def fractional_fourier(theta: float, a: SymbolFunction, jmax: Optional[int] = None,
                       tol: float = 1e-10) -> SymbolFunction:
    """``exp(i theta H)`` with ``H`` the harmonic oscillator, via Hermite expansion.

    Coefficient ``j`` is multiplied by ``exp(i theta (j + 1/2))``; at
    ``theta = pi/2`` this is ``exp(i pi/4)`` times the inverse Fourier transform.
    """
    if theta == 0:
        return SymbolFunction(a.grid, a.values.copy(), func=a.func, label=a.label)
    y = a.grid.x
    if jmax is None:
        half = max(abs(a.grid.x_min), abs(a.grid.x_max))
        jmax = int(min(200, max(8, ((0.8 * half) ** 2 - 1) / 2)))
    H = hermite_functions(jmax, y)
    coeffs = H @ a.values * a.grid.dx
    lost = a.norm() ** 2 - np.sum(np.abs(coeffs) ** 2)
    if lost > tol:
        warnings.warn(f"Hermite truncation at j={jmax} drops weight {lost:.2e}", TruncationWarning, stacklevel=2)
    phases = np.exp(1j * theta * (np.arange(jmax + 1) + 0.5))
    return SymbolFunction(a.grid, (coeffs * phases) @ H, label="frft")


# linearized evolution --------------------------------------------------------------

@dataclass
class SemiclassicalApproximant:
    """Coherent state transported along the classical orbit with its symbol
    deformed by the linearized flow."""

    center: tuple
    phase: float
    symbol: SymbolFunction
    matrix: SymplecticMatrix2

    def evaluate(self, grid: Grid, hbar: float, method: str = "trig") -> WaveFunction:
        q, p = self.center
        sq = np.sqrt(hbar)
        x = grid.x
        vals = hbar ** -0.25 * self.symbol((x - q) / sq, method=method) * np.exp(1j * p * x / hbar)
        return WaveFunction(grid, np.exp(1j * self.phase / hbar) * vals, hbar)


def build_approximant(system: HamiltonianSystem, spec: CoherentStateSpec, t: float, hbar: float,
                      dt: float = 1e-3) -> SemiclassicalApproximant:
    """Frozen-symbol approximation of ``exp(-i t H / hbar)`` applied to the coherent state.

    The phase is ``l(t) - (xi_t x_t - xi_0 x_0)``, the form that matches
    states carrying ``exp(i p x / hbar)``.
    """
    if spec.squeeze_eps != 0:
        raise ValueError("the linearized approximant is built for isotropic states")
    step = min(dt, abs(t) / 100.0) if t else dt
    traj = integrate_flow(system, (spec.q, spec.p), t, step, tangent=True, energy_tol=1e-6)
    M = SymplecticMatrix2.from_array(traj.tangent[-1])
    xt, pt = traj.end
    phase = traj.action[-1] - (pt * xt - spec.p * spec.q)
    return SemiclassicalApproximant((xt, pt), phase, lct_apply(M, spec.symbol), M)


@dataclass
class EhrenfestReport:
    hbars: np.ndarray
    errors: np.ndarray
    slope: float
    exact: bool


def log_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)[0])


def ehrenfest_experiment(system: HamiltonianSystem, spec: CoherentStateSpec, t: float, hbars: Sequence[float],
                         reference: Optional[Callable] = None) -> EhrenfestReport:
    """Phase-aligned L2 error between exact and approximate evolution for each hbar.

    ``reference(system, psi0, t, hbar)`` returns the exact state; by default a
    dense spectral propagator on a line grid.
    """
    from .propagators import EigenPropagator, line_grid_for

    errors = []
    for hbar in hbars:
        grid = line_grid_for(system, spec, hbar)
        psi0 = make_coherent_state(spec, grid, hbar)
        if reference is None:
            exact = EigenPropagator(system, grid, hbar).propagate(psi0, t)
        else:
            exact = reference(system, psi0, t, hbar)
        approx = build_approximant(system, spec, t, hbar).evaluate(grid, hbar)
        errors.append(aligned_distance(exact, approx))
    errors = np.array(errors)
    exact_flag = bool(np.all(errors < 1e-6))
    slope = log_slope(hbars, np.maximum(errors, 1e-300)) if len(hbars) > 1 else float("nan")
    return EhrenfestReport(np.asarray(hbars, float), errors, slope, exact_flag)
