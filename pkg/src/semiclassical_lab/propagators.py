"""Quantum propagators on grids: Strang split-step, a dense spectral
reference, and Weyl-quantized operators on the discrete torus."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps
from scipy.special import jv

from .classical import HamiltonianSystem
from .errors import BoundaryMassLeak, DimensionTooLarge, StepUnconverged, UnsupportedSymbolForm
from .phase_space import TWO_PI, CoherentStateSpec, Grid, SymbolFunction, WaveFunction, gaussian_symbol

DENSE_LIMIT = 4096


def _need_separable(system: HamiltonianSystem):
    if system.separable is None:
        raise ValueError(f"{system.name} is not of the form T(xi) + V(x)")
    return system.separable


def boundary_mass(f: WaveFunction, fraction: float = 0.05) -> float:
    if f.grid.kind != "line":
        return 0.0
    n = max(1, int(round(fraction * f.grid.n)))
    dens = np.abs(f.values) ** 2
    return float((np.sum(dens[:n]) + np.sum(dens[-n:])) * f.grid.weight)


def line_grid_for(system: HamiltonianSystem, spec: CoherentStateSpec, hbar: float,
                  domain: Optional[tuple] = None, min_n: int = 256) -> Grid:
    """Smallest power-of-two line grid over the system's domain that resolves the state."""
    lo, hi = domain or system.domain
    width = np.sqrt(spec.effective_hbar(hbar))
    kneed = abs(spec.p) / hbar + 8.0 / width
    n = min_n
    while (hi - lo) / n > width / 8.0 or np.pi * n / (hi - lo) < kneed:
        n *= 2
    return Grid.line(lo, hi, n)


_VERIFIED: set = set()


def _strang(values, kin_phase, pot_half, steps):
    for _ in range(steps):
        values = pot_half * values
        values = np.fft.ifft(kin_phase * np.fft.fft(values))
        values = pot_half * values
    return values


def split_step(f: WaveFunction, system: HamiltonianSystem, t: float, dt: float, *,
               verify: bool = True, leak_tol: float = 1e-8) -> WaveFunction:
    """Strang splitting for ``T(hbar D) + V(x)``.

    On the first call for a given (system, grid, hbar, dt) the result is
    compared with a run at ``dt/2``; a change above ``1e-6`` raises
    :class:`StepUnconverged`.
    """
    sep = _need_separable(system)
    steps = max(1, int(np.ceil(abs(t) / dt - 1e-9)))
    h = t / steps
    k = f.grid.k
    x = f.grid.x
    hbar = f.hbar

    def run(nsteps, tau):
        kin = np.exp(-1j * tau * sep.T(hbar * k) / hbar)
        pot = np.exp(-0.5j * tau * sep.V(x) / hbar)
        return _strang(f.values.copy(), kin, pot, nsteps)

    out = run(steps, h)
    key = (system.name, f.grid, hbar, round(dt, 15))
    if verify and key not in _VERIFIED:
        fine = run(2 * steps, h / 2)
        change = float(np.sqrt(np.sum(np.abs(fine - out) ** 2) * f.grid.weight))
        if change > 1e-6:
            raise StepUnconverged(f"halving dt changes the state by {change:.3g}")
        _VERIFIED.add(key)
    result = f.with_values(out)
    if boundary_mass(result) > leak_tol:
        raise BoundaryMassLeak(f"boundary mass {boundary_mass(result):.3g} exceeds {leak_tol:.1g}")
    return result


def kinetic_matrix(grid: Grid, hbar: float, T: Callable) -> np.ndarray:
    """Dense matrix of the Fourier multiplier ``T(hbar k)``."""
    n = grid.n
    sym = T(hbar * grid.k)
    column = np.fft.ifft(sym)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    K = column[idx]
    return 0.5 * (K + K.conj().T)


class EigenPropagator:
    """Exact-in-time propagation by diagonalizing the grid Hamiltonian
    ``T(hbar D) + V(x)``; limited to ``N <= 4096``."""

    def __init__(self, system: HamiltonianSystem, grid: Grid, hbar: float):
        sep = _need_separable(system)
        if grid.n > DENSE_LIMIT:
            raise DimensionTooLarge(f"N={grid.n} exceeds the dense limit {DENSE_LIMIT}")
        self.grid = grid
        self.hbar = hbar
        H = kinetic_matrix(grid, hbar, sep.T)
        if np.max(np.abs(H.imag)) < 1e-13 * np.max(np.abs(H.real)):
            H = H.real
        H[np.diag_indices_from(H)] += sep.V(grid.x)
        self.energies, self.vectors = np.linalg.eigh(H)

    def propagate(self, f: WaveFunction, t: float) -> WaveFunction:
        return f.with_values(self.propagate_many(f, [t])[0])

    def propagate_many(self, f: WaveFunction, times) -> np.ndarray:
        """Values at each time, shape ``(len(times), N)``."""
        c = self.vectors.conj().T @ f.values
        times = np.asarray(times, dtype=float)
        phases = np.exp(-1j * np.outer(self.energies, times) / self.hbar)
        return (self.vectors @ (phases * c[:, None])).T


# torus ---------------------------------------------------------------------------

@dataclass
class TorusOperator:
    """Hermitian operator on ``C^N`` with ``hbar = 2 pi / N``."""

    n: int
    matrix: object
    name: str = ""
    _eig: Optional[tuple] = field(default=None, repr=False)

    @property
    def hbar(self) -> float:
        return TWO_PI / self.n

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sps.issparse(m) else np.asarray(m)

    def eig(self):
        if self._eig is None:
            if self.n > DENSE_LIMIT:
                raise DimensionTooLarge(f"N={self.n} exceeds the dense limit {DENSE_LIMIT}")
            self._eig = np.linalg.eigh(self.dense())
        return self._eig


def harper_operator(n: int) -> TorusOperator:
    """Weyl quantization of ``cos p - cos q`` on the ``N``-point torus."""
    k = np.arange(n)
    shift = sps.diags([np.ones(n - 1), np.ones(n - 1), [1.0], [1.0]], [1, -1, n - 1, -(n - 1)], shape=(n, n))
    if n == 2:
        shift = sps.csr_matrix(np.array([[0.0, 2.0], [2.0, 0.0]]))
    H = 0.5 * shift - sps.diags(np.cos(TWO_PI * k / n))
    return TorusOperator(n, sps.csr_matrix(H), name="harper")


def _chebyshev(op: TorusOperator, v: np.ndarray, t: float, tol: float = 1e-12) -> np.ndarray:
    A = op.matrix if sps.issparse(op.matrix) else np.asarray(op.matrix)
    radius = float(np.max(np.abs(A).sum(axis=1)))
    arg = t * radius / op.hbar
    kmax = int(abs(arg) + 10 * np.cbrt(abs(arg)) + 40)
    coeffs = jv(np.arange(kmax + 1), arg)
    while kmax > 10 and abs(coeffs[kmax]) < tol * 1e-3:
        kmax -= 1
    t0 = v.astype(complex)
    t1 = (A @ t0) / radius
    out = coeffs[0] * t0 + 2 * (-1j) * coeffs[1] * t1
    for k in range(2, kmax + 1):
        t0, t1 = t1, 2 * (A @ t1) / radius - t0
        out = out + 2 * (-1j) ** k * coeffs[k] * t1
    return out


def torus_propagate(state: WaveFunction, op: TorusOperator, t: float, method: str = "auto") -> WaveFunction:
    """``exp(-i t H / hbar)`` applied to a torus state."""
    if state.grid.n != op.n:
        raise ValueError("state and operator sizes differ")
    if method == "auto":
        method = "eig" if op.n <= DENSE_LIMIT else "chebyshev"
    if method == "eig":
        E, V = op.eig()
        vals = V @ (np.exp(-1j * t * E / op.hbar) * (V.conj().T @ state.values))
    elif method == "chebyshev":
        vals = _chebyshev(op, state.values, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    return state.with_values(vals)


def torus_coherent_state(n: int, q: float, p: float, symbol: Optional[SymbolFunction] = None,
                         images: int = 3) -> WaveFunction:
    """Coherent state at ``(q, p)`` on the ``N``-point torus, unit l2 norm."""
    symbol = symbol or gaussian_symbol()
    hbar = TWO_PI / n
    sq = np.sqrt(hbar)
    grid = Grid.torus(n)
    x = grid.x
    vals = np.zeros(n, dtype=complex)
    for m in range(-images, images + 1):
        xm = x + TWO_PI * m
        vals += symbol((xm - q) / sq) * np.exp(1j * p * xm / hbar)
    return WaveFunction(grid, vals, hbar).normalized()


def save_torus_operator(op: TorusOperator, path) -> Path:
    """Row-major little-endian complex128 dump plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    m = op.dense().astype("<c16")
    m.tofile(path)
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps({"N": op.n, "hbar": op.hbar, "name": op.name}, sort_keys=True))
    return sidecar


def load_torus_operator(path) -> TorusOperator:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    n = int(meta["N"])
    m = np.fromfile(path, dtype="<c16").reshape(n, n)
    return TorusOperator(n, m, name=meta.get("name", ""))


# observables ----------------------------------------------------------------------

@dataclass(frozen=True)
class ObservableSymbol:
    """Observable ``P(x, xi)``; only ``P1(x) + P2(xi)`` forms are supported."""

    position: Optional[Callable] = None
    momentum: Optional[Callable] = None
    general: Optional[Callable] = None

    @property
    def form(self) -> str:
        if self.general is not None:
            return "general"
        if self.position is not None and self.momentum is not None:
            return "separable"
        return "position" if self.position is not None else "momentum"


def observable_expectation(f: WaveFunction, P: ObservableSymbol) -> float:
    if P.form == "general":
        raise UnsupportedSymbolForm("only position, momentum or separable-sum symbols are supported")
    total = 0.0
    norm2 = f.norm() ** 2
    if P.position is not None:
        total += float(np.sum(P.position(f.grid.x) * np.abs(f.values) ** 2) * f.grid.weight / norm2)
    if P.momentum is not None:
        c = np.fft.fft(f.values)
        w = np.abs(c) ** 2
        total += float(np.sum(P.momentum(f.hbar * f.grid.k) * w) / np.sum(w))
    return total
