"""Independent reference computations used by the tests.

Nothing here imports the package: each oracle is either a closed form or a
different numerical route (QUADPACK, scipy special functions, brute-force
sums).
"""
from __future__ import annotations

import numpy as np
from scipy import integrate, special


def airy_ai(z):
    return special.airy(z)[0]


def airy_ai0_by_quadrature() -> float:
    """``Ai(0) = (1/pi) int_0^inf cos(u^3/3) du``; substituting ``v = u^3/3`` gives
    a Fourier integral ``int_0^inf cos(v) (3v)^(-2/3) dv`` handled by QAWF."""
    head = integrate.quad(lambda v: np.cos(v) * 3.0 ** (-2.0 / 3.0), 0, 1, weight="alg", wvar=(-2.0 / 3.0, 0))[0]
    tail = integrate.quad(lambda v: (3.0 * v) ** (-2.0 / 3.0), 1, np.inf, weight="cos", wvar=1.0)[0]
    return (head + tail) / np.pi


def gaussian_overlap_modulus(dq: float, hbar: float) -> float:
    """``|<psi_(0,0), psi_(dq,0)>|`` for Gaussian coherent states, by quadrature."""
    def integrand(x):
        g0 = (np.pi * hbar) ** -0.25 * np.exp(-x * x / (2 * hbar))
        g1 = (np.pi * hbar) ** -0.25 * np.exp(-(x - dq) ** 2 / (2 * hbar))
        return g0 * g1

    w = 12 * np.sqrt(hbar)
    return integrate.quad(integrand, -w, dq + w, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def free_gaussian(y, t):
    """Standard Gaussian symbol after free flow ``xi^2/2`` for time ``t`` (unit Planck constant)."""
    return np.pi ** -0.25 / np.sqrt(1 + 1j * t) * np.exp(-y * y / (2 * (1 + 1j * t)))


def gaussian_dilated(y, lam):
    """``lam^(-1/2) g(y / lam)`` for the standard Gaussian ``g``."""
    return lam ** -0.5 * np.pi ** -0.25 * np.exp(-0.5 * (y / lam) ** 2)


def harmonic_orbit(z0, t):
    """Exact flow of ``(xi^2 + x^2)/2``."""
    x0, p0 = z0
    return x0 * np.cos(t) + p0 * np.sin(t), -x0 * np.sin(t) + p0 * np.cos(t)


def gauss_sum_weights(p: int, q: int) -> np.ndarray:
    """Brute force ``w_j = (1/q) sum_k exp(-2 pi i p k^2 / q) exp(2 pi i j k / q)``."""
    out = []
    for j in range(q):
        out.append(sum(np.exp(-2j * np.pi * p * k * k / q + 2j * np.pi * j * k / q) for k in range(q)) / q)
    return np.array(out)


def fourier_series_values(coeffs: dict, x):
    """Direct summation ``sum_n c_n exp(i n x)``."""
    x = np.asarray(x, float)
    return sum(c * np.exp(1j * n * x) for n, c in coeffs.items())


# t0 from closed-form separatrices ------------------------------------------------
#
# Each saddle chart uses unit-symplectic outgoing/incoming coordinates; the
# product X(-r) Xi(r) exp(2r) is evaluated far out on the analytic orbit,
# where its deviation from the limit is O(exp(-2r)).

def t0_double_well(r: float = 14.0) -> float:
    # h = xi^2 + x^2 (x^2 - 1): x = sech(2t), xi = -sech(2t) tanh(2t); hyperbolic time tau = 2t
    def z(tau):
        t = tau / 2
        x = 1 / np.cosh(2 * t)
        return x, -x * np.tanh(2 * t)

    x, xi = z(-r)
    X = (x + xi) / np.sqrt(2)
    x, xi = z(r)
    Xi = (xi - x) / np.sqrt(2)
    return float(np.log(abs(X * Xi) * np.exp(2 * r)))


def t0_pendulum(r: float = 14.0) -> float:
    # h = p^2/2 + cos q - 1: q = 4 arctan(e^t), p = 2 sech t, from q = 0 to q = 2 pi
    def z(t):
        return 4 * np.arctan(np.exp(t)), 2 / np.cosh(t)

    q, p = z(-r)
    X = (q + p) / np.sqrt(2)
    q, p = z(r)
    Xi = (p - (q - 2 * np.pi)) / np.sqrt(2)
    return float(np.log(abs(X * Xi) * np.exp(2 * r)))


def t0_harper(r: float = 14.0) -> float:
    # h = cos xi - cos x: x = 2 arctan(e^t), xi = -x, from (0, 0) to (pi, -pi)
    def z(t):
        x = 2 * np.arctan(np.exp(t))
        return x, -x

    x, xi = z(-r)
    X = (x - xi) / np.sqrt(2)
    x, xi = z(r)
    Xi = ((x - np.pi) + (xi + np.pi)) / np.sqrt(2) - np.sqrt(2) * (x - np.pi)
    return float(np.log(abs(X * Xi) * np.exp(2 * r)))


def double_well_lobe_action() -> float:
    """``oint xi dx`` over one lobe of ``xi^2 = x^2 (1 - x^2)``: ``2 int_0^1 x sqrt(1-x^2) dx``."""
    return 2 * integrate.quad(lambda x: x * np.sqrt(1 - x * x), 0, 1)[0]


def pendulum_arc_action() -> float:
    """``int_0^{2 pi} 2 sin(q/2) dq``."""
    return integrate.quad(lambda q: 2 * np.sin(q / 2), 0, 2 * np.pi)[0]


def half_line_transform(a, hbar, gamma, arg_sign, exp_sign, eta, cutoff):
    """Plain adaptive quadrature (no oscillatory weight) of the half-line kernel."""
    top = 2.0 * hbar ** -gamma

    def f(mu, e, part):
        v = a(arg_sign / mu) / mu * cutoff(mu * hbar ** gamma) * np.exp(exp_sign * 1j * e * mu)
        return v.real if part == 0 else v.imag

    out = []
    for e in eta:
        re = integrate.quad(f, 1e-12, top, args=(e, 0), limit=2000, epsabs=1e-12)[0]
        im = integrate.quad(f, 1e-12, top, args=(e, 1), limit=2000, epsabs=1e-12)[0]
        out.append((re + 1j * im) / np.sqrt(2 * np.pi))
    return np.array(out)
