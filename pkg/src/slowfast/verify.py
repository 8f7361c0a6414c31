"""Executable checks of the Painlevé limits and of the form nondegeneracy.

* :func:`blowup_rescale` maps a full trajectory into the blow-up chart of a
  fold (``r = eps^(1/5)``) or a cusp (``r = eps^(1/3)``).
* :func:`convergence_study` starts the full system from data that rescales
  to a prescribed point at the left edge of a Z-window, integrates the limit
  system from the same point and reports the sup deviation of X.
* :func:`form_determinants` evaluates ``eps dx^dy + du^dv`` on lifts of the
  slow coordinate fields to SM.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import _as_array, integrate
from .errors import (ChartInvalid, ClassificationMismatch, MismatchedEpsilon, NotOnSM,
                     PoleInWindow, PreconditionError, SlowFastError)
from .hamiltonian import HamiltonianModel
from .io import csv_text, json_text
from .painleve import LimitTrajectory, integrate_painleve_i, integrate_painleve_ii
from .reduction import (ORIGIN, Branch, cusp_coefficients, fold_coefficients,
                        isoenergetic_reduce, shift_function, singular_trace_on_level)
from .slow_manifold import (SM_TOL, Classification, classify_singular_point, delta,
                            fast_residual, solve_critical_point)

X, Y, U, V = range(4)
CONVERGENCE_MIN_ORDER = 0.5


class StudyKind(enum.Enum):
    Fold = "Fold"
    Cusp = "Cusp"

    @property
    def exponent(self) -> int:
        """``r = eps^(1/exponent)``."""
        return 5 if self is StudyKind.Fold else 3

    @property
    def weights(self) -> tuple:
        """Powers of r scaling (x, y, time variable, pivot variable)."""
        return (2, 3, 4, 0) if self is StudyKind.Fold else (1, 2, 2, 3)

    @property
    def branch(self) -> Branch:
        return Branch.SolveForV if self is StudyKind.Fold else Branch.SolveForU


@dataclass
class RescaleParams:
    """Blow-up chart centred at ``point`` (the trace or the cusp).

    ``shift(x, t)`` is the y-offset of SM on the level; ``None`` means no
    shift, so ``Y`` is just the scaled ``y - y_c``.
    """

    kind: StudyKind
    r: float
    point: np.ndarray
    c: float
    epsilon: float
    shift: object = None

    def __post_init__(self):
        self.kind = StudyKind(self.kind) if isinstance(self.kind, str) else self.kind
        self.point = _as_array(self.point)

    @classmethod
    def for_epsilon(cls, kind, epsilon: float, point, c: float = 0.0, shift=None):
        kind = StudyKind(kind) if isinstance(kind, str) else kind
        if not epsilon > 0:
            raise PreconditionError("epsilon must be positive")
        return cls(kind, float(epsilon ** (1.0 / kind.exponent)), point, c, float(epsilon), shift)

    def _y_base(self, x, t):
        if self.shift is None:
            return self.point[Y]
        return self.shift(x, t)


def rescale_states(states, params: RescaleParams) -> np.ndarray:
    """``(N, 4)`` phase points to ``(X, Y, Z, W)``.

    Fold: ``W = v`` (kept unscaled).  Cusp: ``W = C = (u - u_c)/r^3``.
    """
    s = np.atleast_2d(np.asarray(states, dtype=float))
    p, r = params.point, params.r
    wx, wy, wt, wp = params.kind.weights
    ti, pi = params.kind.branch.time, params.kind.branch.pivot
    out = np.empty_like(s)
    out[:, 0] = (s[:, X] - p[X]) / r ** wx
    ybase = np.array([params._y_base(x, t) for x, t in zip(s[:, X], s[:, ti])])
    out[:, 1] = (s[:, Y] - ybase) / r ** wy
    out[:, 2] = (s[:, ti] - p[ti]) / r ** wt
    out[:, 3] = s[:, pi] if wp == 0 else (s[:, pi] - p[pi]) / r ** wp
    return out


def unscale_states(scaled, params: RescaleParams) -> np.ndarray:
    """Inverse of :func:`rescale_states`."""
    s = np.atleast_2d(np.asarray(scaled, dtype=float))
    p, r = params.point, params.r
    wx, wy, wt, wp = params.kind.weights
    ti, pi = params.kind.branch.time, params.kind.branch.pivot
    out = np.empty_like(s)
    out[:, X] = p[X] + r ** wx * s[:, 0]
    out[:, ti] = p[ti] + r ** wt * s[:, 2]
    ybase = np.array([params._y_base(x, t) for x, t in zip(out[:, X], out[:, ti])])
    out[:, Y] = ybase + r ** wy * s[:, 1]
    out[:, pi] = s[:, 3] if wp == 0 else p[pi] + r ** wp * s[:, 3]
    return out


def blowup_rescale(traj, params: RescaleParams) -> LimitTrajectory:
    """Rescaled copy of a full trajectory, ordered by increasing Z.

    The fourth scaled coordinate (``v`` for a fold, the level offset ``C``
    for a cusp) is kept in ``meta['W']``.
    """
    if abs(traj.epsilon - params.epsilon) > 1e-12 * params.epsilon or \
            abs(params.r ** params.kind.exponent - traj.epsilon) > 1e-12 * traj.epsilon:
        raise MismatchedEpsilon(f"trajectory eps={traj.epsilon} vs r^{params.kind.exponent}"
                                f"={params.r ** params.kind.exponent}")
    sc = rescale_states(traj.states, params)
    order = np.argsort(sc[:, 2], kind="stable")
    sc = sc[order]
    return LimitTrajectory(sc[:, 2].copy(), sc[:, :2].copy(),
                           meta={"W": sc[:, 3].copy(), "kind": params.kind.value,
                                 "r": params.r, "epsilon": params.epsilon})


# -- convergence study --------------------------------------------------------------

@dataclass
class StudyResult:
    rows: list
    manifest: dict
    cells: list = field(default_factory=list, repr=False)

    @property
    def deviations(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def strictly_decreasing(self) -> bool:
        d = self.deviations
        return bool(np.all(np.diff(d) < 0))

    def to_csv(self, comment=None) -> str:
        return csv_text(["epsilon", "r", "sup_dev", "q_fit"], self.rows, comment)

    def to_json(self) -> str:
        return json_text(self.manifest)


def _q_fit(rs, devs):
    q = [float("nan")]
    for i in range(1, len(rs)):
        q.append(math.log(devs[i] / devs[i - 1]) / math.log(rs[i] / rs[i - 1])
                 if devs[i] > 0 and devs[i - 1] > 0 else float("nan"))
    return q


def _decreasing(seq):
    return bool(np.all(np.diff(np.asarray(seq)) < 0))


def _sup_dev(limit: LimitTrajectory, scaled: LimitTrajectory):
    if limit.pole is not None:
        raise PoleInWindow(f"limit solution has a pole near Z={limit.pole.get('z_est')}")
    return float(np.max(np.abs(limit.X - scaled.X)))


def matched_initial_point(model: HamiltonianModel, params: RescaleParams, init) -> np.ndarray:
    """Phase point on ``H = c`` whose blow-up coordinates are ``init = (X0, Y0, Z0)``."""
    x0, y0, z0 = init
    p, r = params.point, params.r
    wx, wy, wt, _ = params.kind.weights
    ti = params.kind.branch.time
    x = p[X] + r ** wx * x0
    t = p[ti] + r ** wt * z0
    y = params._y_base(x, t) + r ** wy * y0
    red = isoenergetic_reduce(model, params.c, params.kind.branch, p)
    return red.solve(x, y, t)


def convergence_study(model: HamiltonianModel, c: float | None, epsilons, z_window=(-1.0, 1.0),
                      matched_init=(0.0, 0.0), kind="Fold", seed=ORIGIN, h_factor: float = 1.0,
                      tol: float = 1e-12, xdot_constant: str = "rho",
                      beta_variant: str = "a2v", level_offset: float = 0.0) -> StudyResult:
    """Sup deviation between rescaled full trajectories and the limit solution.

    ``c`` is the absolute level (``None``: the level through ``seed``).  For a
    fold the singular curve is traced to that level; for a cusp ``seed`` is
    the cusp point and the level for each eps is ``c + H_u(s) level_offset
    eps``, so ``level_offset`` sets the leading part of the scaled offset C.
    The full system runs with the fixed step ``h_factor * sqrt(eps)`` in the
    direction in which Z increases.  For cusps both beta variants
    (``a2v``: the quadratic coefficient's v-derivative, ``literal``: the
    mixed fourth derivative) and both X'-constants are evaluated on the same
    trajectories and recorded in the manifest.
    """
    kind = StudyKind(kind) if isinstance(kind, str) else kind
    eps = np.asarray(epsilons, dtype=float)
    if eps.ndim != 1 or len(eps) < 1 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise PreconditionError("epsilons must be positive and strictly decreasing")
    z0, z1 = (float(v) for v in z_window)
    if not z1 > z0:
        raise PreconditionError("z_window must be increasing")
    if beta_variant not in ("a2v", "literal"):
        raise PreconditionError("beta_variant must be 'a2v' or 'literal'")
    seed = _as_array(seed)
    c_s = float(model(*seed)) if c is None else float(c)
    if kind is StudyKind.Fold:
        trace = singular_trace_on_level(model, c_s, seed)
        rec = classify_singular_point(model, trace.point)
        if rec.classification is not Classification.Fold:
            raise ClassificationMismatch(f"fold study but trace is {rec.classification.value}")
        sys0 = fold_coefficients(model, c_s, trace.point)
        point = trace.point
    else:
        rec = classify_singular_point(model, seed)
        if rec.classification is not Classification.Cusp:
            raise ClassificationMismatch(f"cusp study but seed is {rec.classification.value}")
        sys0 = cusp_coefficients(model, None, seed)
        point = seed
    grad = model.gradient(point)
    # dt/dtau = eps * (+H_v) for a fold (t = u), eps * (-H_u) for a cusp (t = v)
    t_rate = grad[V] if kind is StudyKind.Fold else -grad[U]
    direction = 1.0 if t_rate > 0 else -1.0
    rows, cells = [], []
    variants = {}
    for e in eps:
        level = c_s if kind is StudyKind.Fold else c_s + grad[U] * level_offset * e
        red = isoenergetic_reduce(model, level, kind.branch, point)
        params = RescaleParams.for_epsilon(kind, e, point, level)
        params.shift = lambda x, t, red=red: shift_function(red, x, t, guess=point[Y])
        z_start = matched_initial_point(model, params, (matched_init[0], matched_init[1], z0))
        r = params.r
        wt = kind.weights[2]
        zt = point[kind.branch.time]
        tau_len = 1.5 * (z1 - z0) * r ** wt / (e * abs(t_rate))
        h = h_factor * math.sqrt(e)

        def stop(state, zt=zt, r=r, wt=wt):
            return (state[kind.branch.time] - zt) / r ** wt >= z1

        traj = integrate(model, z_start, e, (0.0, direction * tau_len), h, stop=stop)
        if traj.error:
            raise PreconditionError(f"full integration failed at eps={e}: {traj.error}")
        scaled = blowup_rescale(traj, params)
        keep = scaled.z <= z1
        scaled = LimitTrajectory(scaled.z[keep], scaled.states[keep],
                                 meta={k: (v[keep] if isinstance(v, np.ndarray) else v)
                                       for k, v in scaled.meta.items()})
        if scaled.z[-1] < z1 - 0.05 * (z1 - z0):
            raise PreconditionError(f"full trajectory did not reach the window end at eps={e}")
        init = (scaled.X[0], scaled.Y[0], scaled.z[0])
        zs = scaled.z[1:]
        cell = {"epsilon": float(e), "r": r, "h": h, "n_steps": len(traj) - 1,
                "energy_drift": traj.energy_drift(), "start": z_start.tolist()}
        if kind is StudyKind.Fold:
            lim = integrate_painleve_i(sys0, init, zs[-1], tol, z_eval=zs)
            dev = _sup_dev(lim, _tail(scaled))
        else:
            C_entry = float(scaled.meta["W"][0])
            sys_e = sys0.with_offset(C_entry)
            cell.update({"C_entry": C_entry, "A": sys_e.A})
            devs = {}
            for bname, bval in (("a2v", sys_e.beta), ("literal", sys_e.beta_literal)):
                for kname in ("rho", "sigma"):
                    lim = integrate_painleve_ii(sys_e.with_beta(bval), init, zs[-1], tol,
                                                xdot_constant=kname, z_eval=zs)
                    try:
                        devs[f"{bname}/{kname}"] = _sup_dev(lim, _tail(scaled))
                    except PoleInWindow:
                        devs[f"{bname}/{kname}"] = float("inf")
            for k, v in devs.items():
                variants.setdefault(k, []).append(v)
            dev = devs[f"{beta_variant}/{xdot_constant}"]
            if not math.isfinite(dev):
                raise PoleInWindow("limit solution has a pole inside the window")
        cell["sup_dev"] = dev
        cells.append(cell)
        rows.append([float(e), r, dev])
    qs = _q_fit([r[1] for r in rows], [r[2] for r in rows])
    for row, q in zip(rows, qs):
        row.append(q)
    manifest = {"model": model.to_source(), "model_hash": model.digest(),
                "params": dict(model.params), "kind": kind.value, "c": c_s,
                "window": [z0, z1], "init": list(matched_init), "h_factor": h_factor,
                "tol": tol, "constants": sys0.to_dict(), "cells": cells,
                "deviations_decreasing": _decreasing([r[2] for r in rows])}
    if kind is StudyKind.Cusp:
        manifest.update({"beta_variant": beta_variant, "xdot_constant": xdot_constant,
                         "level_offset": level_offset,
                         "variants": {k: _variant_summary([r[1] for r in rows], v)
                                      for k, v in variants.items()}})
    return StudyResult(rows, manifest, cells)


def _variant_summary(rs, devs, min_order=CONVERGENCE_MIN_ORDER):
    """Deviation sequence of one constant choice and whether it converges.

    Decreasing alone is not enough: a wrong constant leaves a deviation that
    decreases towards a positive plateau, so the last fitted order must also
    reach ``min_order``.
    """
    q = _q_fit(rs, devs)
    last = q[-1] if len(q) > 1 else float("nan")
    return {"sup_dev": list(devs), "q_fit": q, "decreasing": _decreasing(devs),
            "converges": bool(_decreasing(devs) and math.isfinite(last) and last >= min_order)}


def _tail(scaled: LimitTrajectory) -> LimitTrajectory:
    return LimitTrajectory(scaled.z[1:], scaled.states[1:])


# -- form determinants -----------------------------------------------------------------

@dataclass
class FormDeterminantReport:
    epsilon: float
    det_C: float
    det_D: float
    coefficients: np.ndarray  # f0, f1, f2
    pfaffian_slope: float
    eps0: float

    @property
    def f0(self) -> float:
        return float(self.coefficients[0])

    def to_dict(self):
        return {"epsilon": self.epsilon, "det_C": self.det_C, "det_D": self.det_D,
                "f": list(self.coefficients), "eps0": self.eps0}


def _form_matrix(epsilon):
    j = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((4, 4))
    out[:2, :2] = epsilon * j
    out[2:, 2:] = j
    return out


def sm_tangent_lifts(model: HamiltonianModel, point) -> np.ndarray:
    """Tangent vectors of SM projecting to ``d/du`` and ``d/dv`` (rows)."""
    z = _as_array(point)
    _, hes = model.grad_hess(z)
    dF = hes[:2]  # rows of (H_x, H_y) derivatives
    proj = np.array([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    m = np.vstack([dF, proj])
    if abs(np.linalg.det(m)) < 1e-12 * max(1.0, np.max(np.abs(m))) ** 2:
        raise ChartInvalid("projection of SM to the slow plane is singular at this point")
    rhs = np.array([[0, 0, 1, 0], [0, 0, 0, 1]], dtype=float).T
    return np.linalg.solve(m, rhs).T


def restricted_form(model: HamiltonianModel, point, epsilon: float) -> np.ndarray:
    """2x2 matrix of ``eps dx^dy + du^dv`` on the lifted basis."""
    w = sm_tangent_lifts(model, point)
    return w @ _form_matrix(epsilon) @ w.T


def form_determinants(model: HamiltonianModel, sm_point, epsilon: float,
                      eps_max: float = 1.0) -> FormDeterminantReport:
    """Determinants of the full and restricted forms and the eps-polynomial of the latter.

    ``det_D`` is sampled at ``eps * (1, 2, 3)`` and fitted exactly by a
    quadratic ``f0 + f1 eps + f2 eps^2``.  ``eps0`` is the first positive
    eps in ``(0, eps_max]`` where the restricted form degenerates (found by
    bisection on its Pfaffian), or ``inf``.
    """
    z = _as_array(sm_point)
    if not epsilon >= 0:
        raise PreconditionError("epsilon must be nonnegative")
    if np.max(np.abs(fast_residual(model, z))) > SM_TOL:
        raise NotOnSM(f"point {z} is not on SM")
    w = sm_tangent_lifts(model, z)
    det_c = float(np.linalg.det(_form_matrix(epsilon)))

    def pf(e):
        return float((w @ _form_matrix(e) @ w.T)[0, 1])

    det_d = pf(epsilon) ** 2
    base = epsilon if epsilon > 0 else 1.0
    t = np.array([1.0, 2.0, 3.0])
    vals = np.array([pf(base * ti) ** 2 for ti in t])
    coef = np.linalg.solve(np.vander(t, 3, increasing=True), vals)
    coef = coef / base ** np.arange(3)
    slope = pf(1.0) - pf(0.0)
    eps0 = _first_root(pf, eps_max)
    return FormDeterminantReport(float(epsilon), det_c, det_d, coef, slope, eps0)


def _first_root(fun, eps_max, n_grid=64):
    grid = np.linspace(0.0, eps_max, n_grid + 1)
    vals = [fun(e) for e in grid]
    for i in range(n_grid):
        if vals[i] == 0:
            return float(grid[i])
        if vals[i] * vals[i + 1] < 0:
            a, b, fa = grid[i], grid[i + 1], vals[i]
            for _ in range(200):
                m = 0.5 * (a + b)
                fm = fun(m)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
                if b - a < 1e-15 * max(1.0, b):
                    break
            return float(0.5 * (a + b))
    return float("inf")


def random_sm_points(model, n, rng, center=(0.0, 0.0, 0.0, 0.0), radius=0.5,
                     max_tries=1000):
    """``n`` regular SM points with ``(u, v)`` drawn around ``center``.

    Regular points are graphs over the slow plane, so each sample solves
    the layer equilibrium from the centre's ``(x, y)``.
    """
    center = np.asarray(center, dtype=float)
    pts = []
    for _ in range(max_tries):
        if len(pts) == n:
            break
        u, v = center[2:] + rng.uniform(-radius, radius, 2)
        try:
            x, y = solve_critical_point(model, u, v, guess=center[:2])
        except SlowFastError:
            continue
        z = np.array([x, y, u, v])
        if abs(delta(model, z)) < 1e-3:
            continue
        pts.append(z)
    if len(pts) < n:
        raise PreconditionError(f"found only {len(pts)} regular SM points")
    return np.array(pts)
