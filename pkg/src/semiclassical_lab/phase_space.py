"""Grids, wavefunctions, symbols and coherent states.

Coherent states follow the scaling

    psi(x) = h_e**(-1/4) * a((x - q) / sqrt(h_e)) * exp(i p x / hbar),

with ``h_e = hbar**(1 - eps)`` (``eps = 0`` is the isotropic case). On the
circle the state is the periodization of the line state.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GridTooCoarse, NonNormalizedSymbol

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid.

    ``kind`` is ``"line"`` (a finite segment treated as periodic), ``"circle"``
    (``[0, 2pi)``) or ``"torus"`` (``N`` points with counting measure).
    """

    kind: str
    n: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if self.kind not in ("line", "circle", "torus"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("grid needs at least two points")
        if not self.x_max > self.x_min:
            raise ValueError("empty grid interval")

    @classmethod
    def line(cls, x_min: float, x_max: float, n: int) -> "Grid":
        return cls("line", int(n), float(x_min), float(x_max))

    @classmethod
    def circle(cls, n: int) -> "Grid":
        return cls("circle", int(n), 0.0, TWO_PI)

    @classmethod
    def torus(cls, n: int) -> "Grid":
        return cls("torus", int(n), 0.0, TWO_PI)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def weight(self) -> float:
        """Quadrature weight of the inner product."""
        return 1.0 if self.kind == "torus" else self.dx

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return TWO_PI * np.fft.fftfreq(self.n, d=self.dx)

    def widened(self, factor: int = 2) -> "Grid":
        """Same spacing, ``factor`` times the extent, centred on the old centre."""
        centre = 0.5 * (self.x_min + self.x_max)
        half = 0.5 * self.length * factor
        return Grid(self.kind, self.n * factor, centre - half, centre + half)


@dataclass
class WaveFunction:
    grid: Grid
    values: np.ndarray
    hbar: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values do not match the grid size")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.weight))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values / self.norm(), self.hbar)

    def with_values(self, values: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, values, self.hbar)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x


@dataclass
class SymbolFunction:
    """A profile sampled on a symbol grid, optionally with a closed form.

    ``func`` (when present) is used for evaluation off the grid; otherwise
    values are interpolated and taken to vanish outside the grid.
    """

    grid: Grid
    values: np.ndarray
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values do not match the grid size")
        self._spline = None

    @classmethod
    def from_callable(cls, func, grid: Optional[Grid] = None, label: str = "") -> "SymbolFunction":
        grid = grid or default_symbol_grid()
        return cls(grid, func(grid.x), func=func, label=label)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dx))

    def with_values(self, values, label: str = "") -> "SymbolFunction":
        return SymbolFunction(self.grid, values, label=label)

    def __call__(self, y, method: str = "auto") -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.func is not None and method in ("auto", "analytic"):
            return np.asarray(self.func(y), dtype=complex)
        if method in ("auto", "spline"):
            return self._spline_eval(y)
        if method == "trig":
            return trig_interpolate(self.values, self.grid, y)
        raise ValueError(f"unknown evaluation method {method!r}")

    def _spline_eval(self, y):
        if self._spline is None:
            # periodic closure at the right edge keeps the spline well posed
            xs = np.append(self.grid.x, self.grid.x_max)
            vs = np.append(self.values, self.values[0])
            self._spline = (CubicSpline(xs, vs.real), CubicSpline(xs, vs.imag))
        out = np.zeros(y.shape, dtype=complex)
        inside = (y >= self.grid.x_min) & (y <= self.grid.x_max)
        re, im = self._spline
        out[inside] = re(y[inside]) + 1j * im(y[inside])
        return out


def trig_interpolate(values: np.ndarray, grid: Grid, y: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Band-limited interpolation of periodic samples; zero outside the grid."""
    y = np.asarray(y, dtype=float)
    coeffs = np.fft.fft(values) / grid.n
    k = grid.k
    flat = y.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    inside = np.nonzero((flat >= grid.x_min) & (flat < grid.x_max))[0]
    for start in range(0, inside.size, chunk):
        idx = inside[start:start + chunk]
        phase = np.exp(1j * np.outer(flat[idx] - grid.x_min, k))
        out[idx] = phase @ coeffs
    return out.reshape(y.shape)


def default_symbol_grid(half_width: float = 12.0, n: int = 1024) -> Grid:
    return Grid.line(-half_width, half_width, n)


def gaussian_symbol(grid: Optional[Grid] = None) -> SymbolFunction:
    """Normalized Gaussian ``pi**(-1/4) exp(-y**2/2)``."""

    def func(y):
        y = np.asarray(y, dtype=float)
        return np.pi ** -0.25 * np.exp(-0.5 * y * y) + 0j

    return SymbolFunction.from_callable(func, grid, label="gaussian")


def hermite_symbol(j: int, grid: Optional[Grid] = None) -> SymbolFunction:
    """Normalized Hermite function of degree ``j`` as a symbol."""
    from .circle_spectral import hermite_function

    return SymbolFunction.from_callable(lambda y: hermite_function(j, y) + 0j, grid, label=f"hermite{j}")


@dataclass(frozen=True)
class CoherentStateSpec:
    q: float
    p: float
    symbol: SymbolFunction
    squeeze_eps: float = 0.0

    def effective_hbar(self, hbar: float) -> float:
        return hbar ** (1.0 - self.squeeze_eps)


def _check_symbol(a: SymbolFunction, tol: float = 1e-9):
    nrm = a.norm()
    if abs(nrm - 1.0) > tol:
        raise NonNormalizedSymbol(f"symbol norm {nrm!r} differs from 1")


def _check_resolution(spec: CoherentStateSpec, grid: Grid, hbar: float):
    he = spec.effective_hbar(hbar)
    width = np.sqrt(he)
    if grid.kind == "circle":
        if grid.n < 16.0 / width:
            raise GridTooCoarse(f"N={grid.n} < 16 h_e^(-1/2) = {16.0 / width:.1f}")
        if grid.n / 2 < abs(spec.p) / hbar + 8.0 / width:
            raise GridTooCoarse("momentum content exceeds the Nyquist range")
    elif grid.kind == "line":
        if grid.dx > width / 8.0:
            raise GridTooCoarse(f"dx={grid.dx:.3g} > sqrt(h_e)/8 = {width / 8:.3g}")
        if np.pi / grid.dx < abs(spec.p) / hbar + 8.0 / width:
            raise GridTooCoarse("momentum content exceeds the Nyquist range")
    else:
        raise ValueError("use the torus helpers for torus coherent states")


def make_coherent_state(spec: CoherentStateSpec, grid: Grid, hbar: float) -> WaveFunction:
    """Sample the coherent state of ``spec`` on ``grid`` and normalize it."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    _check_symbol(spec.symbol)
    _check_resolution(spec, grid, hbar)
    he = spec.effective_hbar(hbar)
    sq = np.sqrt(he)
    x = grid.x
    if grid.kind == "line":
        vals = he ** -0.25 * spec.symbol((x - spec.q) / sq) * np.exp(1j * spec.p * x / hbar)
    elif spec.symbol.label == "gaussian" and spec.symbol.func is not None:
        n = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
        shift = n - spec.p / hbar
        c = (he ** 0.25 * np.pi ** -0.25 / np.sqrt(TWO_PI)
             * np.exp(-0.5 * he * shift ** 2 - 1j * shift * spec.q))
        vals = np.fft.ifft(c) * grid.n
    else:
        vals = np.zeros(grid.n, dtype=complex)
        images = int(np.ceil(10.0 * sq / TWO_PI)) + 1
        for m in range(-images, images + 1):
            xm = x + TWO_PI * m
            vals += he ** -0.25 * spec.symbol((xm - spec.q) / sq) * np.exp(1j * spec.p * xm / hbar)
    return WaveFunction(grid, vals, hbar).normalized()


def inner_product(f: WaveFunction, g: WaveFunction) -> complex:
    """``<f, g>``, antilinear in the first slot."""
    if f.grid != g.grid:
        raise ValueError("wavefunctions live on different grids")
    return complex(np.vdot(f.values, g.values) * f.grid.weight)


def fidelity(f: WaveFunction, g: WaveFunction) -> float:
    return abs(inner_product(f, g)) / (f.norm() * g.norm())


def aligned_distance(f: WaveFunction, g: WaveFunction) -> float:
    """L2 distance minimized over a global phase."""
    ov = inner_product(g, f)
    phase = ov / abs(ov) if ov != 0 else 1.0
    diff = f.values - phase * g.values
    return float(np.sqrt(np.sum(np.abs(diff) ** 2) * f.grid.weight))


def ipr(f: WaveFunction) -> float:
    """Inverse participation ratio ``int |f|^4 / (int |f|^2)^2``."""
    dens = np.abs(f.values) ** 2
    w = f.grid.weight
    return float(np.sum(dens ** 2) * w / (np.sum(dens) * w) ** 2)


@dataclass
class FourierCoefficients:
    """Coefficients with ``f(x) = sum_n c_n exp(i k_n (x - x_min))``."""

    n: np.ndarray
    k: np.ndarray
    c: np.ndarray


def fourier_side(f: WaveFunction) -> FourierCoefficients:
    """Fourier coefficients in symmetric order ``n = -N/2 .. N/2-1``."""
    N = f.grid.n
    c = np.fft.fftshift(np.fft.fft(f.values)) / N
    n = np.arange(-(N // 2), N - N // 2)
    return FourierCoefficients(n=n, k=TWO_PI * n / f.grid.length, c=c)


def from_fourier_side(coeffs: FourierCoefficients, grid: Grid, hbar: float) -> WaveFunction:
    vals = np.fft.ifft(np.fft.ifftshift(coeffs.c)) * grid.n
    return WaveFunction(grid, vals, hbar)


def write_wavefunction_csv(path, f: WaveFunction) -> None:
    g = f.grid
    with open(path, "w", newline="") as fh:
        fh.write(f"# grid={g.kind} N={g.n} x_min={g.x_min!r} x_max={g.x_max!r} hbar={f.hbar!r}\n")
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for xv, v in zip(g.x, f.values):
            w.writerow([repr(float(xv)), repr(float(v.real)), repr(float(v.imag))])


def read_wavefunction_csv(path) -> WaveFunction:
    with open(path, newline="") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("missing grid header")
        meta = dict(item.split("=", 1) for item in header[1:].split())
        rows = list(csv.reader(fh))
    if rows[0] != ["x", "re", "im"]:
        raise ValueError("unexpected column names")
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    grid = Grid(meta["grid"], int(meta["N"]), float(meta["x_min"]), float(meta["x_max"]))
    return WaveFunction(grid, data[:, 1] + 1j * data[:, 2], float(meta["hbar"]))
