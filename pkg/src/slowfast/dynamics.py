"""Time stepping of the slow-fast system.

The full system in Darboux-Weinstein coordinates is::

    x' = H_y,  y' = -H_x,  u' = eps H_v,  v' = -eps H_u

with ``'`` the derivative in the fast time tau; the slow time is ``eps*tau``.
It is integrated with the implicit midpoint rule, which is symplectic for
the constant form ``dx^dy + eps^-1 du^dv`` whatever the (non-separable) H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NewtonDivergence, PreconditionError
from .hamiltonian import HamiltonianModel
from .io import csv_text, json_text

NEWTON_TOL = 1e-13
NEWTON_MAXITER = 50


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float
    u: float
    v: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.u, self.v)):
            raise PreconditionError(f"non-finite phase point {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.u, self.v], dtype=float)

    @classmethod
    def from_array(cls, z) -> "PhasePoint":
        return cls(*(float(c) for c in z))

    def __iter__(self):
        return iter((self.x, self.y, self.u, self.v))


def _as_array(p) -> np.ndarray:
    if isinstance(p, PhasePoint):
        return p.as_array()
    z = np.asarray(p, dtype=float)
    if z.shape != (4,):
        raise PreconditionError("phase point must have 4 coordinates (x, y, u, v)")
    return z


@dataclass
class Trajectory:
    """Sampled solution of the full (or layer) system.

    ``times`` is the fast time tau.  ``error`` is set when the run stopped
    early (Newton failure or escape); the arrays then hold the partial run.
    """

    times: np.ndarray
    states: np.ndarray
    epsilon: float
    energy: np.ndarray
    h: float = float("nan")
    error: str | None = None
    meta: dict = field(default_factory=dict)

    @property
    def slow_times(self) -> np.ndarray:
        return self.epsilon * self.times

    def __len__(self):
        return len(self.times)

    def point(self, i) -> PhasePoint:
        return PhasePoint.from_array(self.states[i])

    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def to_csv(self, comment=None) -> str:
        rows = np.column_stack([self.times, self.states, self.energy])
        return csv_text(["t", "x", "y", "u", "v", "H"], rows, comment)

    def metadata(self) -> dict:
        out = {"epsilon": self.epsilon, "h": self.h, "n_samples": len(self),
               "error": self.error, "energy_drift": self.energy_drift() if len(self) else None}
        out.update(self.meta)
        return out

    def to_json(self) -> str:
        return json_text(self.metadata())


def _structure(epsilon):
    return np.array([[0.0, 1.0, 0.0, 0.0],
                     [-1.0, 0.0, 0.0, 0.0],
                     [0.0, 0.0, 0.0, epsilon],
                     [0.0, 0.0, -epsilon, 0.0]])


def _check_eps(epsilon):
    if not epsilon >= 0:
        raise PreconditionError(f"epsilon must be nonnegative, got {epsilon}")


def vector_field_full(model: HamiltonianModel, p, epsilon: float) -> np.ndarray:
    """``(H_y, -H_x, eps H_v, -eps H_u)`` at ``p``."""
    _check_eps(epsilon)
    g = model.gradient(_as_array(p))
    return np.array([g[1], -g[0], epsilon * g[3], -epsilon * g[2]])


def step_implicit_midpoint(model: HamiltonianModel, p, epsilon: float, h: float,
                           tol: float = NEWTON_TOL, maxiter: int = NEWTON_MAXITER) -> np.ndarray:
    """One implicit midpoint step; returns the new state as an array.

    Solves ``z1 = z0 + h F((z0 + z1)/2)`` by damped Newton.
    """
    _check_eps(epsilon)
    if h == 0:
        raise PreconditionError("step size must be nonzero")
    z0 = _as_array(p)
    P = _structure(epsilon)
    eye = np.eye(4)

    def resid(z1):
        g, hes = model.grad_hess(0.5 * (z0 + z1))
        return z1 - z0 - h * (P @ g), eye - 0.5 * h * (P @ hes)

    g0 = model.gradient(z0)
    z = z0 + h * (P @ g0)
    r, jac = resid(z)
    norm = np.max(np.abs(r))
    for _ in range(maxiter):
        if norm < tol:
            return z
        dz = np.linalg.solve(jac, r)
        lam = 1.0
        for _ in range(6):
            trial = z - lam * dz
            r_new, jac_new = resid(trial)
            norm_new = np.max(np.abs(r_new))
            if np.isfinite(norm_new) and norm_new < norm:
                break
            lam *= 0.5
        else:
            if np.max(np.abs(dz)) <= 4e-16 * max(1.0, np.max(np.abs(z))):
                return z  # at the roundoff floor
            raise NewtonDivergence(f"midpoint residual stuck at {norm:.3e}")
        z, r, jac, norm = trial, r_new, jac_new, norm_new
    if norm < 1e3 * tol:
        return z
    raise NewtonDivergence(f"midpoint Newton did not converge (residual {norm:.3e})")


def integrate(model: HamiltonianModel, p0, epsilon: float, t_span, h: float,
              stop=None, escape_radius: float | None = None) -> Trajectory:
    """Fixed-step implicit midpoint trajectory from ``t_span[0]`` to ``t_span[1]``.

    ``t_span`` may run backwards, in which case steps of ``-h`` are taken and
    ``times`` decreases.  ``stop(state) -> bool`` ends the run after the
    first state for which it returns True.  On Newton failure or escape
    beyond ``escape_radius`` the partial trajectory is returned with
    ``error`` set.
    """
    _check_eps(epsilon)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise PreconditionError("t_span must be finite")
    if not h > 0:
        raise PreconditionError("h must be positive")
    z = _as_array(p0).copy()
    length = abs(t1 - t0)
    direction = 1.0 if t1 >= t0 else -1.0
    n = int(math.ceil(length / h - 1e-9)) if length > 0 else 0
    times = [t0]
    states = [z]
    error = None
    for k in range(1, n + 1):
        t_next = t0 + direction * min(k * h, length)
        dt = t_next - times[-1]
        try:
            z = step_implicit_midpoint(model, z, epsilon, dt)
        except NewtonDivergence as exc:
            error = f"NewtonDivergence: {exc}"
            break
        if not np.all(np.isfinite(z)) or (escape_radius is not None
                                          and np.max(np.abs(z)) > escape_radius):
            error = "escape"
            if np.all(np.isfinite(z)):
                times.append(t_next)
                states.append(z)
            break
        times.append(t_next)
        states.append(z)
        if stop is not None and stop(z):
            break
    states = np.array(states)
    energy = np.array([model(*s) for s in states])
    return Trajectory(np.array(times), states, float(epsilon), energy, h=float(h),
                      error=error, meta={"model": model.to_source(),
                                         "params": dict(model.params)})


def integrate_fast_layer(model: HamiltonianModel, frozen, xy0, tau_span, h: float,
                         escape_radius: float | None = 1e6) -> Trajectory:
    """Layer system: the fast pair moves under H with ``(u, v)`` frozen."""
    u0, v0 = frozen
    x0, y0 = xy0
    return integrate(model, (x0, y0, u0, v0), 0.0, tau_span, h, escape_radius=escape_radius)
