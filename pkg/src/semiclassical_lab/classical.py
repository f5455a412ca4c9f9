"""Classical Hamiltonian flows in one degree of freedom.

Coordinates are ``z = (x, xi)`` with ``dx/dt = dh/dxi`` and
``dxi/dt = -dh/dx``. Separable symbols ``h = T(xi) + V(x)`` use a fourth
order symplectic splitting; everything else uses the two-stage
Gauss-Legendre collocation method (implicit, symmetric and symplectic).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import cos, sin, sqrt
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import EnergyDriftExceeded, NoConvergence, NotHyperbolic

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class Separable:
    """Pieces of ``T(xi) + V(x)`` with first and second derivatives."""

    T: Callable[[float], float]
    dT: Callable[[float], float]
    d2T: Callable[[float], float]
    V: Callable[[float], float]
    dV: Callable[[float], float]
    d2V: Callable[[float], float]


@dataclass(frozen=True)
class HamiltonianSystem:
    name: str
    h: Callable[[float, float], float]
    grad: Callable[[float, float], tuple]
    hess: Callable[[float, float], tuple]
    separable: Optional[Separable] = None
    saddle: Optional[tuple] = None
    domain: tuple = (-2.5, 2.5)

    def vector_field(self, x, xi):
        hx, hxi = self.grad(x, xi)
        return hxi, -hx

    def hessian_matrix(self, x, xi) -> np.ndarray:
        hxx, hxxi, hxixi = self.hess(x, xi)
        return np.array([[hxx, hxxi], [hxxi, hxixi]])


def separable_system(name, T, dT, d2T, V, dV, d2V, **kw) -> HamiltonianSystem:
    return HamiltonianSystem(
        name=name,
        h=lambda x, xi: T(xi) + V(x),
        grad=lambda x, xi: (dV(x), dT(xi)),
        hess=lambda x, xi: (d2V(x), 0.0, d2T(xi)),
        separable=Separable(T, dT, d2T, V, dV, d2V),
        **kw,
    )


def free_particle() -> HamiltonianSystem:
    """``h = xi**2 / 2``."""
    return separable_system("free", lambda p: 0.5 * p * p, lambda p: p, lambda p: 1.0,
                            lambda x: 0.0 * x, lambda x: 0.0 * x, lambda x: 0.0)


def harmonic(omega: float = 1.0) -> HamiltonianSystem:
    """``h = (xi**2 + omega**2 x**2) / 2``."""
    w2 = omega * omega
    return separable_system("harmonic", lambda p: 0.5 * p * p, lambda p: p, lambda p: 1.0,
                            lambda x: 0.5 * w2 * x * x, lambda x: w2 * x, lambda x: w2)


def quartic_oscillator() -> HamiltonianSystem:
    """Stable anharmonic well ``h = xi**2/2 + x**2/2 + x**4/4``."""
    return separable_system("quartic", lambda p: 0.5 * p * p, lambda p: p, lambda p: 1.0,
                            lambda x: 0.5 * x * x + 0.25 * x ** 4, lambda x: x + x ** 3,
                            lambda x: 1.0 + 3.0 * x * x)


def double_well() -> HamiltonianSystem:
    """``h = xi**2 + x**2 (x**2 - 1)``; hyperbolic point at the origin with rate 2."""
    return separable_system("double-well", lambda p: p * p, lambda p: 2.0 * p, lambda p: 2.0,
                            lambda x: x * x * (x * x - 1.0), lambda x: 4.0 * x ** 3 - 2.0 * x,
                            lambda x: 12.0 * x * x - 2.0, saddle=(0.0, 0.0), domain=(-2.5, 2.5))


def pendulum() -> HamiltonianSystem:
    """``h = xi**2/2 + cos x - 1``; saddles at ``x = 2 pi m``."""
    return separable_system("pendulum", lambda p: 0.5 * p * p, lambda p: p, lambda p: 1.0,
                            lambda x: np.cos(x) - 1.0, lambda x: -np.sin(x), lambda x: -np.cos(x),
                            saddle=(0.0, 0.0), domain=(-3 * np.pi, 3 * np.pi))


def harper() -> HamiltonianSystem:
    """``h = cos xi - cos x``; saddles at ``(m pi, n pi)`` with ``m + n`` even."""
    return separable_system("harper", lambda p: np.cos(p), lambda p: -np.sin(p), lambda p: -np.cos(p),
                            lambda x: -np.cos(x), lambda x: np.sin(x), lambda x: np.cos(x),
                            saddle=(0.0, 0.0), domain=(-np.pi, np.pi))


def dilation() -> HamiltonianSystem:
    """``h = x xi``: the linear hyperbolic model with rate 1."""
    return HamiltonianSystem("dilation", h=lambda x, xi: x * xi, grad=lambda x, xi: (xi, x),
                             hess=lambda x, xi: (0.0, 1.0, 0.0), saddle=(0.0, 0.0))


def rotated(system: HamiltonianSystem, theta: float) -> HamiltonianSystem:
    """``h_R(z) = h(R z)`` with ``R`` the rotation by ``theta`` (a symplectic change of chart)."""
    c, s = cos(theta), sin(theta)
    R = np.array([[c, -s], [s, c]])

    def to(x, xi):
        return c * x - s * xi, s * x + c * xi

    def grad(x, xi):
        gx, gxi = system.grad(*to(x, xi))
        return c * gx + s * gxi, -s * gx + c * gxi

    def hess(x, xi):
        H = R.T @ system.hessian_matrix(*to(x, xi)) @ R
        return H[0, 0], H[0, 1], H[1, 1]

    saddle = None
    if system.saddle is not None:
        saddle = tuple(R.T @ np.asarray(system.saddle, float))
    return HamiltonianSystem(f"{system.name}-rotated", h=lambda x, xi: system.h(*to(x, xi)),
                             grad=grad, hess=hess, saddle=saddle, domain=system.domain)


BUILTIN_SYSTEMS = {
    "free": free_particle,
    "harmonic": harmonic,
    "quartic": quartic_oscillator,
    "double-well": double_well,
    "pendulum": pendulum,
    "harper": harper,
    "dilation": dilation,
}


def check_derivatives(system: HamiltonianSystem, points, step: float = 1e-5) -> float:
    """Largest relative mismatch between analytic and central-difference derivatives."""
    worst = 0.0
    for x, xi in points:
        gx, gxi = system.grad(x, xi)
        fx = (system.h(x + step, xi) - system.h(x - step, xi)) / (2 * step)
        fxi = (system.h(x, xi + step) - system.h(x, xi - step)) / (2 * step)
        H = system.hessian_matrix(x, xi)
        Hx = (np.array(system.grad(x + step, xi)) - np.array(system.grad(x - step, xi))) / (2 * step)
        Hxi = (np.array(system.grad(x, xi + step)) - np.array(system.grad(x, xi - step))) / (2 * step)
        pairs = [(gx, fx), (gxi, fxi), (H[0, 0], Hx[0]), (H[0, 1], Hx[1]), (H[1, 1], Hxi[1])]
        for exact, approx in pairs:
            worst = max(worst, abs(exact - approx) / max(1.0, abs(exact)))
    return worst


# Integrators -----------------------------------------------------------------

_CBRT2 = 2.0 ** (1.0 / 3.0)
_W1 = 1.0 / (2.0 - _CBRT2)
_W0 = -_CBRT2 * _W1
YOSHIDA = (_W1, _W0, _W1)

_R3 = sqrt(3.0)
GL_A = np.array([[0.25, 0.25 - _R3 / 6.0], [0.25 + _R3 / 6.0, 0.25]])
GL_B = np.array([0.5, 0.5])


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    action: np.ndarray
    energy: np.ndarray
    tangent: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def end(self) -> tuple:
        return float(self.x[-1]), float(self.xi[-1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "xi", "action", "energy"])
            for row in zip(self.t, self.x, self.xi, self.action, self.energy):
                w.writerow([repr(float(v)) for v in row])


def _splitting_step(sep: Separable, x, xi, act, M, dt):
    for w in YOSHIDA:
        tau = w * dt
        half = 0.5 * tau
        # half kick
        act -= sep.V(x) * half
        if M is not None:
            M = np.array([[1.0, 0.0], [-half * sep.d2V(x), 1.0]]) @ M
        xi = xi - half * sep.dV(x)
        # drift
        act += (xi * sep.dT(xi) - sep.T(xi)) * tau
        if M is not None:
            M = np.array([[1.0, tau * sep.d2T(xi)], [0.0, 1.0]]) @ M
        x = x + tau * sep.dT(xi)
        # half kick
        act -= sep.V(x) * half
        if M is not None:
            M = np.array([[1.0, 0.0], [-half * sep.d2V(x), 1.0]]) @ M
        xi = xi - half * sep.dV(x)
    return x, xi, act, M


def _gl_step(system: HamiltonianSystem, x, xi, act, M, dt, tol=1e-15, maxiter=200):
    z = np.array([x, xi])

    def f(v):
        hx, hxi = system.grad(v[0], v[1])
        return np.array([hxi, -hx])

    K = np.array([f(z), f(z)])
    prev = np.inf
    for _ in range(maxiter):
        Z = z + dt * GL_A @ K
        Knew = np.array([f(Z[0]), f(Z[1])])
        diff = np.max(np.abs(Knew - K))
        K = Knew
        scale = max(1.0, np.max(np.abs(K)))
        # stop once the iteration has reached roundoff level
        if diff <= tol * scale or (diff >= prev and diff < 1e-12 * scale):
            break
        prev = diff
    else:
        raise NoConvergence("Gauss-Legendre stage iteration did not converge")
    Z = z + dt * GL_A @ K
    lag = 0.0
    for i in range(2):
        hx, hxi = system.grad(*Z[i])
        lag += GL_B[i] * (Z[i][1] * hxi - system.h(*Z[i]))
    znew = z + dt * GL_B @ K
    if M is not None:
        D = [J @ system.hessian_matrix(*Z[i]) for i in range(2)]
        big = np.eye(4)
        for i in range(2):
            for j in range(2):
                big[2 * i:2 * i + 2, 2 * j:2 * j + 2] -= dt * GL_A[i, j] * D[i]
        rhs = np.vstack([D[0], D[1]])
        dK = np.linalg.solve(big, rhs)
        M = (np.eye(2) + dt * (GL_B[0] * dK[0:2] + GL_B[1] * dK[2:4])) @ M
    return znew[0], znew[1], act + dt * lag, M


def integrate_flow(system: HamiltonianSystem, z0, T: float, dt: float, *, method: str = "auto",
                   tangent: bool = False, energy_tol: Optional[float] = 1e-8,
                   stop: Optional[Callable[[float, float, float], bool]] = None) -> Trajectory:
    """Integrate Hamilton's equations from ``z0`` for time ``T`` (negative runs backward).

    The action ``l(t) = int (xi dx - h dt)`` is accumulated alongside. With
    ``tangent=True`` the linearized flow is carried by the same scheme.
    ``stop(t, x, xi)`` may end the run early.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T != 0 and dt > abs(T) / 100.0:
        raise ValueError("dt must not exceed |T|/100")
    if method == "auto":
        method = "splitting" if system.separable is not None else "gauss-legendre"
    if method == "splitting" and system.separable is None:
        raise ValueError("splitting needs a separable system")
    nsteps = int(np.ceil(abs(T) / dt - 1e-9)) if T != 0 else 0
    h = T / nsteps if nsteps else 0.0
    x, xi = float(z0[0]), float(z0[1])
    act = 0.0
    M = np.eye(2) if tangent else None
    ts, xs, xis, acts = [0.0], [x], [xi], [0.0]
    Ms = [M] if tangent else None
    for k in range(nsteps):
        if method == "splitting":
            x, xi, act, M = _splitting_step(system.separable, x, xi, act, M, h)
        else:
            x, xi, act, M = _gl_step(system, x, xi, act, M, h)
        ts.append((k + 1) * h)
        xs.append(x)
        xis.append(xi)
        acts.append(act)
        if tangent:
            Ms.append(M)
        if stop is not None and stop(ts[-1], x, xi):
            break
    xs = np.array(xs)
    xis = np.array(xis)
    energy = np.array([system.h(a, b) for a, b in zip(xs, xis)], dtype=float)
    if energy_tol is not None:
        drift = float(np.max(np.abs(energy - energy[0])))
        if drift > energy_tol:
            raise EnergyDriftExceeded(f"energy drift {drift:.3g} exceeds {energy_tol:.3g}")
    return Trajectory(np.array(ts), xs, xis, np.array(acts), energy,
                      np.array(Ms) if tangent else None)


def richardson_error(system: HamiltonianSystem, z0, T: float, dt: float, order: int = 4) -> float:
    """Step-doubling estimate of the global endpoint error at step ``dt``."""
    a = np.array(integrate_flow(system, z0, T, dt, energy_tol=None).end)
    b = np.array(integrate_flow(system, z0, T, dt / 2, energy_tol=None).end)
    return float(np.linalg.norm(a - b) * 2 ** order / (2 ** order - 1))


@dataclass
class TangentFlow:
    t: np.ndarray
    matrices: np.ndarray
    trajectory: Trajectory

    @property
    def final(self) -> np.ndarray:
        return self.matrices[-1]


def tangent_flow(system: HamiltonianSystem, z0, T: float, dt: float, **kw) -> TangentFlow:
    traj = integrate_flow(system, z0, T, dt, tangent=True, **kw)
    return TangentFlow(traj.t, traj.tangent, traj)


def estimate_mu(system: HamiltonianSystem, z0, T: float, dt: float, stable_bound: float = 10.0) -> float:
    """Finite-time Lyapunov rate ``sup_t log||dPhi^t|| / t``; zero for stable motion."""
    flow = tangent_flow(system, z0, T, dt)
    norms = np.linalg.norm(flow.matrices, ord=2, axis=(1, 2))
    if norms[-1] <= stable_bound and np.max(norms) <= stable_bound:
        return 0.0
    t = np.abs(flow.t[1:])
    return float(np.max(np.log(norms[1:]) / t))


# Hyperbolic fixed points and separatrices -------------------------------------------

@dataclass(frozen=True)
class NormalFormChart:
    """Linear symplectic chart at a hyperbolic fixed point.

    Columns of ``P`` are the unstable and stable directions, scaled so that
    ``omega(v_u, v_s) = 1``; in the chart coordinates ``(X, Xi)`` the
    quadratic part of ``h`` is ``rate * X * Xi``.
    """

    center: tuple
    P: np.ndarray
    rate: float

    def to_chart(self, x, xi):
        d = np.vstack([np.asarray(x, float) - self.center[0], np.asarray(xi, float) - self.center[1]])
        X = np.linalg.solve(self.P, d)
        return X[0], X[1]

    def from_chart(self, X, Xi):
        v = self.P @ np.vstack([np.asarray(X, float), np.asarray(Xi, float)])
        return v[0] + self.center[0], v[1] + self.center[1]


def locate_fixed_point(system: HamiltonianSystem, z, tol: float = 1e-13, maxiter: int = 50) -> tuple:
    z = np.array(z, dtype=float)
    for _ in range(maxiter):
        g = np.array(system.grad(*z))
        if np.max(np.abs(g)) < tol:
            break
        z = z - np.linalg.solve(system.hessian_matrix(*z), g)
    else:
        raise NoConvergence("Newton iteration for the fixed point did not converge")
    return float(z[0]), float(z[1])


def normal_form_chart(system: HamiltonianSystem, center=None) -> NormalFormChart:
    center = system.saddle if center is None else center
    if center is None:
        raise NotHyperbolic(f"{system.name} has no designated saddle")
    center = locate_fixed_point(system, center)
    A = J @ system.hessian_matrix(*center)
    vals, vecs = np.linalg.eig(A)
    if np.max(np.abs(vals.imag)) > 1e-12 or np.min(np.abs(vals.real)) < 1e-12:
        raise NotHyperbolic(f"eigenvalues {vals} at {center} are not real and nonzero")
    order = np.argsort(-vals.real)
    lam = float(vals.real[order[0]])
    vu = vecs[:, order[0]].real
    vs = vecs[:, order[1]].real
    if vu[0] < 0 or (vu[0] == 0 and vu[1] < 0):
        vu = -vu
    w = vu[0] * vs[1] - vu[1] * vs[0]
    vs = vs / w
    return NormalFormChart(center, np.column_stack([vu, vs]), lam)


@dataclass
class SeparatrixCurve:
    """Orbit leaving one saddle along its unstable branch.

    ``s`` is hyperbolic time (physical time times the rate), zero at the seed.
    """

    s: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    start: NormalFormChart
    end: NormalFormChart
    seed_offset: float
    branch: int

    @property
    def outgoing_parameter(self) -> np.ndarray:
        """Shifted parameter ``sigma`` with ``X(sigma) ~ exp(sigma)`` as ``sigma -> -inf``."""
        return self.s + self.seed_offset

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "x", "xi"])
            for row in zip(self.s, self.x, self.xi):
                w.writerow([repr(float(v)) for v in row])


def separatrix(system: HamiltonianSystem, branch: int = 1, delta: float = 1e-7, ds: float = 2e-3,
               max_s: float = 80.0) -> SeparatrixCurve:
    """Trace the unstable branch ``branch = +1/-1`` of the designated saddle until
    it settles onto a hyperbolic fixed point."""
    chart = normal_form_chart(system)
    lam = chart.rate
    seed = chart.from_chart(branch * delta, 0.0)
    z0 = (float(seed[0][0]), float(seed[1][0]))
    state = {"far": False, "prev": np.inf}

    def stop(t, x, xi):
        # halt at the closest approach to the next fixed point
        gx, gxi = system.grad(x, xi)
        speed = sqrt(gx * gx + gxi * gxi)
        prev, state["prev"] = state["prev"], speed
        if not state["far"]:
            state["far"] = speed > 1e-2 * lam
            return False
        return speed < lam * delta or (speed < 1e-3 * lam and speed > prev)

    traj = integrate_flow(system, z0, max_s / lam, ds / lam, stop=stop, energy_tol=1e-9)
    if not state["far"] or traj.t[-1] >= max_s / lam * (1 - 1e-12):
        raise NoConvergence("separatrix did not reach a fixed point")
    end_center = locate_fixed_point(system, (traj.x[-1], traj.xi[-1]))
    end = normal_form_chart(system, end_center)
    return SeparatrixCurve(traj.t * lam, traj.x, traj.xi, chart, end, np.log(delta), branch)


def compute_t0(curve: SeparatrixCurve, rungs=range(3, 10), tol: float = 1e-4) -> float:
    """Asymptotic phase ``t0`` with ``e^{t0} = lim X(-r) Xi(r) e^{2r}``.

    ``X`` is the outgoing coordinate at the start saddle and ``Xi`` the
    incoming coordinate at the end saddle; the limit is extrapolated over
    the ladder of ``r`` values (corrections in powers of ``e^{-r}``).
    """
    s = curve.s
    Xs, _ = curve.start.to_chart(curve.x, curve.xi)
    _, Xie = curve.end.to_chart(curve.x, curve.xi)
    Xspl = CubicSpline(s, np.abs(Xs))
    Xispl = CubicSpline(s, np.abs(Xie))
    dist = np.hypot(curve.x - curve.start.center[0], curve.xi - curve.start.center[1])
    dist_end = np.hypot(curve.x - curve.end.center[0], curve.xi - curve.end.center[1])
    anchor = float(s[np.argmax(np.minimum(dist, dist_end))])
    rungs = list(rungs)
    if anchor - rungs[-1] < s[0] or anchor + rungs[-1] > s[-1]:
        raise NoConvergence("curve too short for the requested ladder")
    f = np.array([Xspl(anchor - r) * Xispl(anchor + r) * np.exp(2.0 * r) for r in rungs])
    table = f.copy()
    for power in (1, 2):
        q = np.exp(-power)
        table = (table[1:] - q * table[:-1]) / (1.0 - q)
    if table.size >= 2 and abs(table[-1] - table[-2]) > tol * abs(table[-1]):
        raise NoConvergence(f"t0 ladder not converged: {table[-2]:.8g} vs {table[-1]:.8g}")
    return float(np.log(table[-1]))
