"""Isoenergetic reduction near a fold or cusp and the limit-system constants.

On a level ``H = c`` one slow coordinate (the pivot) is solved for,
``pivot = S(x, y, t)``, and the other slow coordinate ``t`` becomes the new
time.  Both choices are supported:

* ``SolveForV`` (fold): ``v = S(x, y, u)``, time ``u``,
  ``eps dx/du = -S_y``, ``eps dy/du = S_x``;
* ``SolveForU`` (cusp): ``u = S(x, y, v)``, time ``v``,
  ``eps dx/dv = S_y``, ``eps dy/dv = -S_x``.

In both cases ``(-S_y, S_x) = (H_y, -H_x) / H_pivot``.  Every derivative of
S is taken from jets of the Newton solution.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._newton import newton
from .dynamics import _as_array
from .errors import (BranchInvalid, DegenerateCoefficients, JetError, NewtonDivergence,
                     NotACusp, NotAFold, PreconditionError, SingularJacobian,
                     TransversalityFailure)
from .hamiltonian import HamiltonianModel
from .jets import Jet, extract_partial, implicit_jets, jet_variable
from .slow_manifold import (Classification, _order_scale, _singular_system,
                            classify_singular_point, transversality)

X, Y, U, V = range(4)
PIVOT_MIN = 1e-10
ORIGIN = (0.0, 0.0, 0.0, 0.0)


class Branch(enum.Enum):
    SolveForV = "SolveForV"
    SolveForU = "SolveForU"

    @property
    def pivot(self) -> int:
        return V if self is Branch.SolveForV else U

    @property
    def time(self) -> int:
        return U if self is Branch.SolveForV else V

    @property
    def orientation(self) -> float:
        """Sign turning ``(-S_y, S_x)`` into ``eps d(x, y)/dt``."""
        return 1.0 if self is Branch.SolveForV else -1.0


@dataclass
class ReducedSystem:
    """``S(x, y, t)`` on the level ``H = c`` for the chosen branch."""

    model: HamiltonianModel
    c: float
    branch: Branch
    guess: float = 0.0

    def _point(self, x, y, t, p):
        z = np.zeros(4)
        z[X], z[Y] = x, y
        z[self.branch.time] = t
        z[self.branch.pivot] = p
        return z

    def solve(self, x: float, y: float, t: float, guess: float | None = None) -> np.ndarray:
        """Full phase point on the level with the pivot coordinate solved."""
        piv = self.branch.pivot
        p = self.guess if guess is None else guess
        scale = max(1.0, abs(self.c))
        for _ in range(60):
            z = self._point(x, y, t, p)
            r = self.model(*z) - self.c
            d = self.model.gradient(z)[piv]
            if abs(d) < PIVOT_MIN:
                raise BranchInvalid(f"|H_{'uv'[piv - 2]}| = {abs(d):.3e} below {PIVOT_MIN}")
            step = r / d
            p -= step
            if abs(r) < 1e-13 * scale or abs(step) <= 1e-16 * max(1.0, abs(p)):
                z = self._point(x, y, t, p)
                if abs(self.model(*z) - self.c) > 1e-12 * scale:
                    continue
                return z
        raise NewtonDivergence(f"level solve did not converge at ({x}, {y}, {t})")

    def S(self, x: float, y: float, t: float, guess: float | None = None) -> float:
        return float(self.solve(x, y, t, guess)[self.branch.pivot])

    def __call__(self, x, y, t):
        return self.S(x, y, t)

    def jet(self, x: float, y: float, t: float, degree: int = 4, guess=None) -> Jet:
        """Jet of S in the offsets ``(dx, dy, dt)``."""
        z = self.solve(x, y, t, guess)
        taylor = self.model.jet(z, degree=degree)
        piv = self.branch.pivot
        try:
            (off,) = implicit_jets([taylor - self.c], [piv], [X, Y, self.branch.time], degree)
        except JetError:
            raise BranchInvalid("pivot derivative vanishes") from None
        return off + z[piv]

    def hamiltonian_field(self, x, y, t) -> np.ndarray:
        """``(-S_y, S_x)``."""
        j = self.jet(x, y, t, degree=1)
        return np.array([-j.coeffs[2], j.coeffs[1]])

    def field(self, x, y, t) -> np.ndarray:
        """``eps d(x, y)/dt`` in the branch time."""
        return self.branch.orientation * self.hamiltonian_field(x, y, t)


def isoenergetic_reduce(model: HamiltonianModel, c: float, branch: Branch | str,
                        point=None) -> ReducedSystem:
    """Reduced system on ``H = c``; ``point`` (if given) seeds and checks the pivot."""
    branch = Branch(branch) if isinstance(branch, str) else branch
    model.require_bound()
    guess = 0.0
    if point is not None:
        z = _as_array(point)
        piv = branch.pivot
        d = model.gradient(z)[piv]
        if abs(d) < PIVOT_MIN:
            raise BranchInvalid(f"pivot derivative {abs(d):.3e} below {PIVOT_MIN} at {z}")
        guess = float(z[piv])
    return ReducedSystem(model, float(c), branch, guess)


# -- singular trace ---------------------------------------------------------------

@dataclass
class SingularTrace:
    c: float
    point: np.ndarray
    margin: float

    def to_dict(self):
        return {"c": self.c, "point": list(self.point), "transversality": self.margin}


def _trace_system(model, c, z):
    f, jac = _singular_system(model, z)
    g = model.gradient(z)
    return np.append(f, model(*z) - c), np.vstack([jac, g])


def singular_trace_on_level(model: HamiltonianModel, c: float, seed=ORIGIN) -> SingularTrace:
    """Point where the singular curve crosses ``H = c`` (absolute level).

    Newton on ``{H_x, H_y, Delta, H - c}``.  A seed that already solves the
    system is returned as is, which covers a cusp on its own level where the
    4x4 Jacobian is singular.
    """
    z0 = _as_array(seed)
    f0, _ = _trace_system(model, c, z0)
    if np.max(np.abs(f0)) < 1e-13 * max(1.0, abs(c)):
        return SingularTrace(float(c), z0.copy(), transversality(model, z0))
    if abs(transversality(model, z0)) < 1e-12:
        raise TransversalityFailure("transversality margin vanishes at the seed")
    try:
        z, _, _ = newton(lambda w: _trace_system(model, c, w), z0, tol=1e-12,
                         singular_tol=1e-14)
    except SingularJacobian:
        raise TransversalityFailure("Jacobian of the trace system is singular") from None
    return SingularTrace(float(c), z, transversality(model, z))


def trace_slope(model: HamiltonianModel, trace: SingularTrace) -> np.ndarray:
    """``d(point)/dc`` from the implicit function theorem."""
    _, jac = _trace_system(model, trace.c, trace.point)
    return np.linalg.solve(jac, np.array([0.0, 0.0, 0.0, 1.0]))


# -- restricted function sigma(xi, mu) = S(xi, f(xi, mu), mu) ----------------------

def _restricted(red: ReducedSystem, point, degree=4):
    """Jets of S (3 vars) and of the restriction to ``S_y = 0`` (2 vars)."""
    t_idx = red.branch.time
    sj = red.jet(point[X], point[Y], point[t_idx], degree=degree + 1, guess=point[red.branch.pivot])
    sy = sj.derivative(1)
    try:
        (fy,) = implicit_jets([sy], [1], [0, 2], degree)
    except JetError:
        raise DegenerateCoefficients("S_yy vanishes at the trace") from None
    subs = [jet_variable(0, 0.0, 2, degree), fy, jet_variable(1, 0.0, 2, degree)]
    return sj, fy, sj.compose(subs)


def shift_function(red: ReducedSystem, x: float, t: float, guess: float = 0.0) -> float:
    """``f(x, t)``: the y solving ``S_y = 0`` (equivalently ``H_y = 0``) on the level."""
    y = guess
    piv = red.branch.pivot
    p = None
    for _ in range(50):
        z = red.solve(x, y, t, p)
        p = z[piv]
        g, hes = red.model.grad_hess(z)
        # total y-derivative of H_y with the pivot following the level
        d = hes[Y, Y] - hes[Y, piv] * g[Y] / g[piv]
        if d == 0:
            raise DegenerateCoefficients("S_yy vanishes")
        step = g[Y] / d
        y -= step
        if abs(step) < 1e-15 * max(1.0, abs(y)):
            break
    return float(y)


@dataclass
class FoldLimitSystem:
    """Constants of ``X' = -2 s1 Y, Y' = alpha_c Z + 3 gamma_c X^2``."""

    alpha_c: float
    gamma_c: float
    s1: float
    c: float = 0.0
    trace: np.ndarray | None = None
    margins: dict = field(default_factory=dict)

    @property
    def a0(self) -> float:
        """``alpha_0`` in ``X'' + 2 alpha_0 Z + 6 gamma_0 X^2 = 0``."""
        return self.s1 * self.alpha_c

    @property
    def g0(self) -> float:
        return self.s1 * self.gamma_c

    def rhs(self, z, state):
        xx, yy = state
        return np.array([-2.0 * self.s1 * yy, self.alpha_c * z + 3.0 * self.gamma_c * xx * xx])

    def to_dict(self):
        return {"c": self.c, "trace": None if self.trace is None else list(self.trace),
                "alpha_c": self.alpha_c, "gamma_c": self.gamma_c, "s1": self.s1,
                "margins": self.margins}


def fold_coefficients(model: HamiltonianModel, c: float, seed=ORIGIN,
                      tol: float = 1e-7) -> FoldLimitSystem:
    """PI constants at the trace of the singular curve on ``H = c``."""
    trace = singular_trace_on_level(model, c, seed)
    rec = classify_singular_point(model, trace.point)
    if rec.classification is not Classification.Fold:
        raise NotAFold(f"trace classified {rec.classification.value} ({rec.reason})")
    red = isoenergetic_reduce(model, c, Branch.SolveForV, trace.point)
    sj, _, sig = _restricted(red, trace.point)
    alpha = extract_partial(sig, (1, 0))
    beta = extract_partial(sig, (2, 0)) / 2
    alpha_u = extract_partial(sig, (1, 1))
    gamma = extract_partial(sig, (3, 0)) / 6
    s1 = extract_partial(sj, (0, 2, 0)) / 2
    scale = _order_scale(model.jet(trace.point, degree=4), 3)
    margins = {"alpha": alpha, "beta": beta, "transversality": trace.margin}
    if abs(alpha) > tol * scale or abs(beta) > tol * scale:
        raise NotAFold(f"alpha={alpha:.3e}, beta={beta:.3e} not both zero at the trace")
    if min(abs(alpha_u), abs(gamma), abs(s1)) <= tol:
        raise NotAFold("vanishing limit-system coefficient")
    return FoldLimitSystem(alpha_u, gamma, s1, float(c), trace.point, margins)


@dataclass
class CuspLimitSystem:
    """Constants of ``X' = -k Y, Y' = A + beta Z X + alpha X^3`` with ``k`` rho or sigma."""

    rho: float
    sigma: float
    beta: float
    alpha: float
    A: float = 0.0
    beta_literal: float = float("nan")
    h_xu: float = 1.0
    point: np.ndarray | None = None
    c: float = 0.0
    margins: dict = field(default_factory=dict)

    def xdot(self, constant: str = "rho") -> float:
        if constant not in ("rho", "sigma"):
            raise PreconditionError(f"xdot_constant must be 'rho' or 'sigma', got {constant!r}")
        return self.rho if constant == "rho" else self.sigma

    def with_offset(self, C: float) -> "CuspLimitSystem":
        """Copy with ``A = C sigma H_xu`` for the scaled level offset ``C``."""
        return replace(self, A=C * self.sigma * self.h_xu)

    def offset_for(self, A: float) -> float:
        return A / (self.sigma * self.h_xu)

    def with_beta(self, beta: float) -> "CuspLimitSystem":
        return replace(self, beta=beta)

    def rhs_factory(self, xdot_constant="rho"):
        k = self.xdot(xdot_constant)
        A, b, a = self.A, self.beta, self.alpha

        def rhs(z, state):
            xx, yy = state
            return np.array([-k * yy, A + b * z * xx + a * xx ** 3])

        return rhs

    def to_dict(self):
        return {"c": self.c, "trace": None if self.point is None else list(self.point),
                "rho": self.rho, "sigma": self.sigma, "beta": self.beta, "alpha": self.alpha,
                "A": self.A, "beta_literal": self.beta_literal, "margins": self.margins}


def cusp_coefficients(model: HamiltonianModel, c: float | None = None, seed=ORIGIN,
                      epsilon: float | None = None, tol: float = 1e-7) -> CuspLimitSystem:
    """PII constants at a cusp point ``s`` (``seed``, which must lie on SM).

    ``c`` is an absolute level; the scaled offset
    ``C = (c - H(s)) / (H_u(s) eps^(1/3)^3)`` gives ``A = C sigma H_xu``.
    Without ``epsilon`` the level must be ``H(s)`` and ``A = 0``.
    """
    s = _as_array(seed)
    rec = classify_singular_point(model, s)
    if rec.classification is not Classification.Cusp:
        raise NotACusp(f"point classified {rec.classification.value} ({rec.reason})")
    h_s = float(model(*s))
    grad = model.gradient(s)
    taylor = model.jet(s, degree=4)
    h_u = float(grad[U])
    if abs(h_u) < PIVOT_MIN:
        raise NotACusp("H_u vanishes at the cusp")
    sigma = 1.0 / h_u
    red = isoenergetic_reduce(model, h_s, Branch.SolveForU, s)
    sj, _, sig = _restricted(red, s)
    rho = -extract_partial(sj, (0, 2, 0))
    beta = -extract_partial(sig, (2, 1))
    alpha = -extract_partial(sig, (4, 0)) / 6
    h_xu = extract_partial(taylor, (1, 0, 1, 0))
    beta_literal = extract_partial(taylor, (2, 0, 1, 1)) * sigma
    margins = {"sigma_x": extract_partial(sig, (1, 0)), "sigma_xx": extract_partial(sig, (2, 0)),
               "sigma_xv": extract_partial(sig, (1, 1)), "sigma_xxx": extract_partial(sig, (3, 0)),
               "transversality": transversality(model, s)}
    if abs(alpha) <= tol:
        raise DegenerateCoefficients("cubic coefficient alpha vanishes")
    if abs(beta) <= tol:
        margins["genericity"] = "beta vanishes: the (a1, a2) parameter map is degenerate"
    if c is None:
        c = h_s
    C = 0.0
    if c != h_s:
        if epsilon is None or not epsilon > 0:
            raise PreconditionError("a level off the cusp needs epsilon > 0 to scale A")
        C = (c - h_s) / (h_u * epsilon)
    out = CuspLimitSystem(rho, sigma, beta, alpha, 0.0, beta_literal, h_xu, s, float(c), margins)
    return out.with_offset(C)


# -- normal shift -----------------------------------------------------------------

def normal_shift(model: HamiltonianModel, x: float, u: float, v: float,
                 guess: float = 0.0) -> tuple[float, float, float]:
    """Shift ``y = Y + f(x, u, v)`` with ``H_y(x, f, u, v) = 0``.

    Returns ``(f, dH/dY at Y = 0, H_1)`` where ``H_1 = H_YY / 2`` at ``Y = 0``;
    the middle value is the numerical witness that the shifted H has no
    linear Y term.
    """
    y = guess
    for _ in range(50):
        j = model.jet((x, y, u, v), active=("y",), degree=2)
        hy, hyy = j.coeffs[1], 2 * j.coeffs[2]
        if hyy == 0:
            raise DegenerateCoefficients("H_yy vanishes; no normal shift")
        step = hy / hyy
        y -= step
        if abs(step) < 1e-15 * max(1.0, abs(y)):
            break
    j = model.jet((x, y, u, v), active=("y",), degree=2)
    if not math.isfinite(y):
        raise NewtonDivergence("normal shift diverged")
    return y, float(j.coeffs[1]), float(j.coeffs[2])
