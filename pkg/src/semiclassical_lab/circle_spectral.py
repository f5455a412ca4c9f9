"""Exact spectral propagation on the circle and the closed-form profiles it is
compared against (fractional revivals, Airy caustics, squeezed states and
product-mode dynamics)."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import gamma, gcd
from typing import Callable, Optional

import numpy as np

from . import ddouble as ddm
from .errors import NotCoprime, OverflowGuard, PhasePrecisionLoss, RegimeMismatch, TruncationWarning
from .phase_space import TWO_PI, CoherentStateSpec, Grid, WaveFunction, make_coherent_state

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class DispersionLaw:
    """A symbol ``h(xi)`` depending on momentum only.

    Polynomial laws store ``{power: coefficient}`` and get double-double phase
    reduction; general callables are evaluated in plain floating point.
    """

    coefficients: Optional[dict] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if (self.coefficients is None) == (self.func is None):
            raise ValueError("give exactly one of coefficients or func")

    @classmethod
    def quadratic(cls) -> "DispersionLaw":
        return cls({2: 1.0})

    @classmethod
    def cubic_quartic(cls, c: float = 0.0, d: float = 0.0) -> "DispersionLaw":
        coeffs = {2: 1.0}
        if c:
            coeffs[3] = float(c)
        if d:
            coeffs[4] = float(d)
        return cls(coeffs)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.func is not None:
            return self.func(xi)
        return sum(c * xi ** m for m, c in self.coefficients.items())


def _dd_scalar(value) -> tuple:
    if isinstance(value, Fraction):
        return ddm.div(ddm.dd(float(value.numerator)), ddm.dd(float(value.denominator)))
    return ddm.dd(float(value))


def _dd_hbar_power(hbar: float, m: int):
    base = ddm.dd(hbar)
    if m >= 0:
        return ddm.power(base, m)
    return ddm.div(ddm.dd(1.0), ddm.power(base, -m))


def dispersion_phase(n: np.ndarray, law: DispersionLaw, hbar: float, t=None, periods=None,
                     weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Phase ``-t h(n hbar) / hbar`` reduced to ``[-pi, pi)``.

    ``periods`` gives the time as a multiple of ``2 pi / hbar`` (ints, floats
    or ``Fraction``), which avoids rounding ``2 pi / hbar`` at all.
    """
    if (t is None) == (periods is None):
        raise ValueError("give exactly one of t or periods")
    n = np.asarray(n, dtype=float)
    if law.coefficients is not None:
        if periods is not None:
            scale = _dd_scalar(periods)
            shift = -2
        else:
            scale = ddm.div(ddm.dd(float(t)), ddm.TWO_PI)
            shift = -1
        nd = ddm.dd(n)
        cycles = ddm.dd(np.zeros_like(n))
        for m, coef in law.coefficients.items():
            factor = ddm.mul(ddm.mul(scale, _dd_hbar_power(hbar, m + shift)), ddm.dd(float(coef)))
            term = ddm.mul(ddm.power(nd, m), (np.full_like(n, factor[0]), np.full_like(n, factor[1])))
            cycles = ddm.add(cycles, term)
        return -TWO_PI * ddm.frac(cycles)
    tt = float(periods) * TWO_PI / hbar if t is None else float(t)
    raw = tt * law.func(n * hbar) / hbar
    live = np.ones(n.shape, bool) if weights is None else np.abs(weights) > 1e-14 * np.max(np.abs(weights))
    worst = float(np.max(np.abs(raw[live]))) if np.any(live) else 0.0
    if EPS * worst > 1e-6:
        raise PhasePrecisionLoss(f"phase magnitude {worst:.3g} loses more than 1e-6 rad")
    return -np.mod(raw + np.pi, TWO_PI) + np.pi


def propagate_dispersion(f: WaveFunction, law: DispersionLaw, t=None, *, periods=None) -> WaveFunction:
    """Exact evolution under ``h(hbar D)`` by multiplying Fourier modes."""
    if f.grid.kind != "circle":
        raise ValueError("dispersion propagation needs a circle grid")
    c = np.fft.fft(f.values)
    n = np.fft.fftfreq(f.grid.n, d=1.0 / f.grid.n)
    phase = dispersion_phase(n, law, f.hbar, t=t, periods=periods, weights=c)
    return f.with_values(np.fft.ifft(c * np.exp(1j * phase)))


@dataclass
class RevivalPrediction:
    p: int
    q: int
    time: float
    sites: np.ndarray
    weights: np.ndarray


def fractional_revival(p: int, q: int, spec: CoherentStateSpec, hbar: float) -> RevivalPrediction:
    """Sites and weights of the fractional revival at ``t = (p/q) 2 pi / hbar``
    for ``h = xi**2``; each site carries the initial state translated there."""
    if q < 1 or gcd(p, q) != 1:
        raise NotCoprime(f"p={p}, q={q} are not coprime")
    k = np.arange(q)
    j = np.arange(q)
    kernel = np.exp(-2j * np.pi * p * (k * k % (2 * q)) / q)
    weights = (np.exp(2j * np.pi * np.outer(j, k) / q) @ kernel) / q
    weights /= np.sqrt(np.sum(np.abs(weights) ** 2))
    sites = np.mod(spec.q + TWO_PI * j / q, TWO_PI)
    return RevivalPrediction(p, q, p / q * TWO_PI / hbar, sites, weights)


def revival_superposition(pred: RevivalPrediction, spec: CoherentStateSpec, grid: Grid, hbar: float) -> WaveFunction:
    """Build ``sum_j w_j T_j psi0`` from freshly constructed coherent states."""
    total = np.zeros(grid.n, dtype=complex)
    for j, w in enumerate(pred.weights):
        shift = TWO_PI * j / pred.q
        moved = CoherentStateSpec(spec.q + shift, spec.p, spec.symbol, spec.squeeze_eps)
        psi = make_coherent_state(moved, grid, hbar)
        total += w * np.exp(-1j * spec.p * shift / hbar) * psi.values
    return WaveFunction(grid, total, hbar)


# Airy function ---------------------------------------------------------------

_AI0 = 3.0 ** (-2.0 / 3.0) / gamma(2.0 / 3.0)
_AIP0 = 3.0 ** (-1.0 / 3.0) / gamma(1.0 / 3.0)
_SERIES_RADIUS = 6.0


def _airy_maclaurin(z):
    z3 = z ** 3
    f = np.ones_like(z)
    g = z.copy()
    tf = np.ones_like(z)
    tg = z.copy()
    for k in range(60):
        tf = tf * z3 / ((3 * k + 2) * (3 * k + 3))
        tg = tg * z3 / ((3 * k + 3) * (3 * k + 4))
        f = f + tf
        g = g + tg
    return _AI0 * f - _AIP0 * g


def _asymptotic_coefficients(kmax: int = 40):
    u = [1.0]
    for k in range(1, kmax):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1)))
    return np.array(u)


_U = _asymptotic_coefficients()


def _optimal_series(zeta, coefs, powers):
    """Sum ``sum_k coefs[k] zeta**-powers[k]`` truncated at the smallest term."""
    terms = coefs[:, None] * zeta[None, :] ** -powers[:, None]
    mags = np.abs(terms)
    growing = np.zeros(mags.shape, bool)
    growing[1:] = mags[1:] > mags[:-1]
    stop = np.cumsum(growing, axis=0) > 0
    return np.sum(np.where(stop, 0.0, terms), axis=0)


def airy_ai(z) -> np.ndarray:
    """Airy function ``Ai`` on real arguments.

    Power series for ``|z| <= 6``, optimally truncated asymptotic expansions
    beyond.
    """
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    out = np.empty_like(flat)
    small = np.abs(flat) <= _SERIES_RADIUS
    out[small] = _airy_maclaurin(flat[small])
    kk = np.arange(len(_U))
    pos = flat > _SERIES_RADIUS
    if np.any(pos):
        zp = flat[pos]
        zeta = 2.0 / 3.0 * zp ** 1.5
        series = _optimal_series(zeta, (-1.0) ** kk * _U, kk)
        out[pos] = np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * zp ** 0.25) * series
    neg = flat < -_SERIES_RADIUS
    if np.any(neg):
        zn = -flat[neg]
        zeta = 2.0 / 3.0 * zn ** 1.5
        ev, od = kk[0::2], kk[1::2]
        p_part = _optimal_series(zeta, (-1.0) ** (ev // 2) * _U[ev], ev)
        q_part = _optimal_series(zeta, (-1.0) ** (od // 2) * _U[od], od)
        arg = zeta + np.pi / 4.0
        out[neg] = (np.sin(arg) * p_part - np.cos(arg) * q_part) / (np.sqrt(np.pi) * zn ** 0.25)
    return out.reshape(z.shape)


# Airy and squeezed profiles -----------------------------------------------

def _gaussian_amplitude(sigma: float) -> float:
    """Coefficient scale of a normalized circle state with ``c_n ~ exp(-sigma n^2/2)``."""
    return (TWO_PI) ** -0.5 * (sigma / np.pi) ** 0.25


def airy_profile(x, s: int, c: float, hbar: float, regime: str = "origin", d: float = 0.0,
                 scale_exponent: float = 1.0 / 3.0, origin_window: float = 10.0) -> np.ndarray:
    """Leading-order profile of the normalized Gaussian state after ``s`` revival
    periods of ``h = xi**2 + c xi**3 + d xi**4``.

    ``regime="origin"`` is the Airy caustic on the scale ``hbar**(1/3)`` around
    ``x = 0``; ``regime="bulk"`` sums the oscillatory tails of all periodic
    images for ``0 < x <= 2 pi``.
    """
    if c == 0:
        raise ValueError("the Airy profile needs a nonzero cubic term")
    x = np.asarray(x, dtype=float)
    beta = TWO_PI * s * c * hbar
    amp = _gaussian_amplitude(hbar)
    cube = np.cbrt(3.0 * beta)
    if regime == "origin":
        scale = np.cbrt(3.0 * TWO_PI * s * c) * hbar ** scale_exponent
        if np.any(np.abs(x) > origin_window * abs(scale)):
            raise RegimeMismatch("origin regime only holds within a few hbar^(1/3) of x=0")
        return amp * TWO_PI / abs(cube) * airy_ai(-x / np.copysign(abs(scale), beta)) + 0j
    if regime == "bulk":
        if np.any((x <= 0) | (x > TWO_PI)):
            raise RegimeMismatch("bulk regime requires 0 < x <= 2 pi")
        total = np.zeros(x.shape, dtype=complex)
        decay = 1.0 / (6.0 * TWO_PI * abs(s * c))
        kmax = int(np.ceil(40.0 / (decay * TWO_PI))) + 1
        for k in range(kmax + 1):
            X = x + TWO_PI * k if c > 0 else x - TWO_PI * (k + 1)
            zz = X / cube
            osc = np.sin(2.0 / 3.0 * zz ** 1.5 + np.pi / 4.0) / (np.sqrt(np.pi) * zz ** 0.25)
            quartic = np.exp(-1j * d * X * X / (9.0 * TWO_PI * s * c * c))
            total += amp * TWO_PI / abs(cube) * osc * np.exp(-decay * np.abs(X)) * quartic
        return total
    raise ValueError(f"unknown regime {regime!r}")


def cubic_revival_exact(x, s: int, c: float, hbar: float, sigma: Optional[float] = None) -> np.ndarray:
    """Closed form of the Gaussian state with ``c_n ~ exp(-sigma n^2/2)`` after
    ``s`` revival periods of ``h = xi**2 + c xi**3``.

    Poisson summation turns each periodic image into a shifted, damped Airy
    function; the result is exact up to the truncation of the image sum.
    """
    x = np.asarray(x, dtype=float)
    sigma = hbar if sigma is None else sigma
    beta = TWO_PI * s * c * hbar
    kappa = sigma / (2.0 * beta)
    cube = np.cbrt(3.0 * beta)
    amp = _gaussian_amplitude(sigma) * TWO_PI / abs(cube) * np.exp(2.0 * beta * kappa ** 3 / 27.0)
    kspan = int(np.ceil(120.0 / (abs(kappa) * TWO_PI))) + 2
    total = np.zeros(x.shape)
    for k in range(-2, kspan + 1):
        X = x + np.sign(c) * TWO_PI * k
        arg = -(X - beta * kappa ** 2 / 3.0) / cube
        total += np.exp(-kappa * X / 3.0) * airy_ai(arg)
    return amp * total + 0j


def squeezed_profile(x, s: int, c: float, eps: float, hbar: float) -> np.ndarray:
    """Literal envelope ``hbar**(-eps/2) (s c / 4)**(-1/4) exp(-x / (s c hbar**eps))``."""
    x = np.asarray(x, dtype=float)
    return hbar ** (-eps / 2.0) * (s * c / 4.0) ** -0.25 * np.exp(-x / (s * c * hbar ** eps))


def squeezed_decay_rate(s: int, c: float, eps: float, hbar: float) -> float:
    """Envelope decay rate implied by the exact cubic-revival closed form."""
    return 1.0 / (6.0 * TWO_PI * s * c * hbar ** eps)


# Hermite functions and product modes ----------------------------------------

HERMITE_MAX = 200


def hermite_functions(jmax: int, eta) -> np.ndarray:
    """Rows ``0..jmax`` of normalized Hermite functions via the stable three-term recurrence."""
    if jmax > HERMITE_MAX:
        raise OverflowGuard(f"degree {jmax} exceeds {HERMITE_MAX}")
    eta = np.asarray(eta, dtype=float)
    out = np.empty((jmax + 1,) + eta.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * eta * eta)
    if jmax >= 1:
        out[1] = np.sqrt(2.0) * eta * out[0]
    for k in range(1, jmax):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * eta * out[k] - np.sqrt(k / (k + 1.0)) * out[k - 1]
    return out


def hermite_function(j: int, eta) -> np.ndarray:
    return hermite_functions(j, eta)[j]


def product_mode_propagate(coeffs: np.ndarray, t: float, hamiltonian: Callable, hbar: float,
                           n_values: Optional[np.ndarray] = None) -> np.ndarray:
    """Evolve coefficients ``c[n, j]`` of ``exp(i n x) h_j(eta)`` under a
    symbol ``H(tau, h1)`` evaluated at ``tau = n hbar``, ``h1 = (j + 1/2) hbar``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    nmodes, jlevels = coeffs.shape
    if n_values is None:
        n_values = np.arange(-(nmodes // 2), nmodes - nmodes // 2)
    peak = np.max(np.abs(coeffs))
    edge = max(np.max(np.abs(coeffs[:, -1])), np.max(np.abs(coeffs[0])), np.max(np.abs(coeffs[-1])))
    if peak > 0 and edge > 1e-8 * peak:
        warnings.warn("coefficients reach the truncation boundary", TruncationWarning, stacklevel=2)
    tau = np.asarray(n_values, dtype=float)[:, None] * hbar
    h1 = (np.arange(jlevels) + 0.5)[None, :] * hbar
    raw = t * hamiltonian(tau, h1) / hbar
    if EPS * np.max(np.abs(raw)) > 1e-6:
        raise PhasePrecisionLoss("product-mode phase too large for double precision")
    return coeffs * np.exp(-1j * raw)


def level_profiles(coeffs: np.ndarray, x, n_values: Optional[np.ndarray] = None) -> np.ndarray:
    """``sum_n c[n, j] exp(i n x)`` for every level ``j``; shape ``(levels, len(x))``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    nmodes = coeffs.shape[0]
    if n_values is None:
        n_values = np.arange(-(nmodes // 2), nmodes - nmodes // 2)
    x = np.asarray(x, dtype=float)
    return (np.exp(1j * np.outer(x, n_values)) @ coeffs).T
