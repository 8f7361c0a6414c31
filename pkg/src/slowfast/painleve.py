"""Painlevé-I / Painlevé-II limit systems: adaptive integration, poles, scalings.

The limit systems are first-order in ``(X, Y)`` with ``Z`` as the
independent variable:

* fold:  ``X' = -2 s1 Y``,  ``Y' = alpha_c Z + 3 gamma_c X^2``;
* cusp:  ``X' = -k Y``,     ``Y' = A + beta Z X + alpha X^3``, ``k`` in {rho, sigma}.

Both are integrated with a Dormand-Prince 5(4) pair under PI step control.
Solutions of Painlevé equations have movable poles; running into one is a
result (recorded in :attr:`LimitTrajectory.pole`), not an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCoefficients, PreconditionError
from .io import csv_text, json_text
from .reduction import CuspLimitSystem, FoldLimitSystem

POLE_MAGNITUDE = 1e6
MIN_STEP = 1e-12
SAFETY = 0.9
MAX_GROWTH = 5.0
MIN_SHRINK = 0.2
MAX_STEPS = 2_000_000

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                    187 / 2100, 1 / 40])
# continuous extension (Hairer, Norsett & Wanner, DOPRI5)
_D = np.array([-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])


@dataclass
class LimitTrajectory:
    """Solution of a limit system sampled at increasing ``z``."""

    z: np.ndarray
    states: np.ndarray
    pole: dict | None = None
    n_steps: int = 0
    n_rejected: int = 0
    tol: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def X(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def Y(self) -> np.ndarray:
        return self.states[:, 1]

    def __len__(self):
        return len(self.z)

    def to_csv(self, comment=None) -> str:
        return csv_text(["z", "X", "Y"], np.column_stack([self.z, self.states]), comment)

    def pole_report(self) -> dict:
        return {"pole": self.pole, "z_last": float(self.z[-1]) if len(self.z) else None,
                "n_steps": self.n_steps, "n_rejected": self.n_rejected, "tol": self.tol}

    def to_json(self) -> str:
        return json_text(self.pole_report())


def _fit_pole(zs, xs, order):
    """Root of the linear fit of ``|X|^(-1/order)`` against z, plus rms residual."""
    zs = np.asarray(zs)
    w = np.abs(np.asarray(xs)) ** (-1.0 / order)
    coef, res, *_ = np.polyfit(zs, w, 1, full=True)
    b, a = coef
    if b == 0:
        return float("nan"), float("inf")
    resid = float(np.sqrt(res[0] / len(zs))) if len(res) else 0.0
    return float(-a / b), float(resid / abs(b))


def integrate_limit(rhs, init, z_end: float, tol: float = 1e-10, z_eval=None,
                    pole_order: int = 2, h0: float | None = None) -> LimitTrajectory:
    """Adaptive DP5(4) integration of ``d(X, Y)/dz = rhs(z, (X, Y))``.

    ``init`` is ``(X0, Y0, Z0)`` and ``z_end > Z0``.  The local error estimate
    is held below ``tol * (1 + |state|)`` componentwise.  With ``z_eval`` the
    output is interpolated at those points (they must lie in ``[Z0, z_end]``);
    otherwise every accepted step is returned.  A pole is declared when
    ``|X| > 1e6`` or when the step falls below ``1e-12``; its location is
    extrapolated from the last ten steps assuming ``X ~ (z_p - z)^-pole_order``.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise PreconditionError(f"tol must lie in [1e-12, 1e-4], got {tol}")
    x0, y0, z0 = (float(v) for v in init)
    z_end = float(z_end)
    if not z_end > z0:
        raise PreconditionError("z_end must exceed the initial Z")
    if z_eval is not None:
        z_eval = np.asarray(z_eval, dtype=float)
        if np.any(np.diff(z_eval) <= 0):
            raise PreconditionError("z_eval must be strictly increasing")
        if z_eval[0] < z0 - 1e-12 or z_eval[-1] > z_end + 1e-12:
            raise PreconditionError("z_eval must lie inside [Z0, z_end]")
    span = z_end - z0
    h = min(h0 or 1e-2, span)
    z, s = z0, np.array([x0, y0])
    k1 = np.asarray(rhs(z, s), dtype=float)
    out_z, out_s = [z0], [s.copy()]
    if z_eval is not None:
        out_z, out_s = [], []
        ie = 0
        while ie < len(z_eval) and z_eval[ie] <= z0 + 1e-15 * max(1.0, abs(z0)):
            out_z.append(z_eval[ie])
            out_s.append(s.copy())
            ie += 1
    hist_z, hist_x = [z0], [x0]
    err_prev = 1.0
    n_acc = n_rej = 0
    pole = None
    just_rejected = False
    while z < z_end:
        if n_acc + n_rej > MAX_STEPS:
            raise PreconditionError("step budget exhausted")
        h = min(h, z_end - z)
        if h < MIN_STEP and z_end - z > MIN_STEP:
            pole = {"reason": "step_collapse"}
            break
        k = [k1]
        for i in range(1, 7):
            si = s + h * sum(a * kj for a, kj in zip(_A[i], k))
            k.append(np.asarray(rhs(z + _C[i] * h, si), dtype=float))
        s_new = s + h * sum(b * kj for b, kj in zip(_B[:6], k[:6]))
        err_vec = h * sum(e * kj for e, kj in zip(_E, k))
        scale = tol * (1.0 + np.maximum(np.abs(s), np.abs(s_new)))
        err = float(np.max(np.abs(err_vec) / scale)) if np.all(np.isfinite(s_new)) else np.inf
        if err <= 1.0:
            z_new = z + h if h < z_end - z else z_end
            if z_eval is not None:
                ydiff = s_new - s
                bspl = h * k[0] - ydiff
                r4 = ydiff - h * k[6] - bspl
                r5 = h * sum(d * kj for d, kj in zip(_D, k))
                while ie < len(z_eval) and z_eval[ie] <= z_new + 1e-15 * max(1.0, abs(z_new)):
                    th = (z_eval[ie] - z) / h
                    th1 = 1.0 - th
                    out_z.append(z_eval[ie])
                    out_s.append(s + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5))))
                    ie += 1
            z, s, k1 = z_new, s_new, k[6]
            n_acc += 1
            hist_z.append(z)
            hist_x.append(s[0])
            if z_eval is None:
                out_z.append(z)
                out_s.append(s.copy())
            fac = SAFETY * max(err, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            fac = min(MAX_GROWTH, max(MIN_SHRINK, fac))
            if just_rejected:
                fac = min(fac, 1.0)
            h *= fac
            err_prev = max(err, 1e-4)
            just_rejected = False
            if abs(s[0]) > POLE_MAGNITUDE:
                pole = {"reason": "magnitude"}
                break
        else:
            n_rej += 1
            fac = SAFETY * err ** (-1 / 5) if math.isfinite(err) else MIN_SHRINK
            h *= max(MIN_SHRINK, min(1.0, fac))
            just_rejected = True
    if pole is not None:
        m = min(10, len(hist_z))
        z_est, resid = _fit_pole(hist_z[-m:], hist_x[-m:], pole_order)
        pole.update({"z_est": z_est, "fit_residual": resid, "z_last": float(hist_z[-1]),
                     "X_last": float(hist_x[-1])})
    states = np.array(out_s) if out_s else np.zeros((0, 2))
    return LimitTrajectory(np.array(out_z), states, pole, n_acc, n_rej, tol)


def integrate_painleve_i(sys: FoldLimitSystem, init, z_end: float, tol: float = 1e-10,
                         z_eval=None) -> LimitTrajectory:
    """Fold limit ``X' = -2 s1 Y, Y' = alpha_c Z + 3 gamma_c X^2``."""
    traj = integrate_limit(sys.rhs, init, z_end, tol, z_eval, pole_order=2)
    traj.meta.update({"kind": "PI", "alpha_c": sys.alpha_c, "gamma_c": sys.gamma_c, "s1": sys.s1})
    return traj


def integrate_painleve_ii(sys: CuspLimitSystem, init, z_end: float, tol: float = 1e-10,
                          xdot_constant: str = "rho", z_eval=None) -> LimitTrajectory:
    """Cusp limit ``X' = -k Y, Y' = A + beta Z X + alpha X^3`` with ``k`` rho or sigma."""
    traj = integrate_limit(sys.rhs_factory(xdot_constant), init, z_end, tol, z_eval,
                           pole_order=1)
    traj.meta.update({"kind": "PII", "xdot_constant": xdot_constant, "A": sys.A,
                      "beta": sys.beta, "alpha": sys.alpha})
    return traj


# -- standard forms ---------------------------------------------------------------

def _real_root(x, n):
    return math.copysign(abs(x) ** (1.0 / n), x)


@dataclass
class StandardForm:
    """``X = lam_x W``, ``Z = lam_z zeta`` maps the limit system to a standard one.

    PI target: ``W'' = 6 W^2 + zeta``.  PII target:
    ``W'' = 2 cubic_sign W^3 + zeta W + a``.
    """

    kind: str
    lam_x: float
    lam_z: float
    parameter: float = 0.0
    cubic_sign: float = 1.0
    source: object = None
    xdot_constant: str = "rho"

    def to_dict(self):
        return {"kind": self.kind, "lam_x": self.lam_x, "lam_z": self.lam_z,
                "parameter": self.parameter, "cubic_sign": self.cubic_sign,
                "convention": ("W'' = 6 W^2 + zeta" if self.kind == "PI"
                               else "W'' = 2 cubic_sign W^3 + zeta W + a")}

    def standard_system(self):
        """The target equation written as a limit system of the same kind."""
        if self.kind == "PI":
            return FoldLimitSystem(alpha_c=1.0, gamma_c=2.0, s1=-0.5)
        return CuspLimitSystem(rho=1.0, sigma=1.0, beta=-1.0, alpha=-2.0 * self.cubic_sign,
                               A=-self.parameter)

    def standard_rhs(self, reflect: bool):
        """Right side of the target in ``zeta`` (or in ``-zeta`` when reflected)."""
        sgn = -1.0 if reflect else 1.0
        if self.kind == "PI":
            def rhs(s, st):
                zeta = sgn * s
                return sgn * np.array([st[1], 6.0 * st[0] ** 2 + zeta])
        else:
            a, cs = self.parameter, self.cubic_sign

            def rhs(s, st):
                zeta = sgn * s
                return sgn * np.array([st[1], 2.0 * cs * st[0] ** 3 + zeta * st[0] + a])
        return rhs

    def verify(self, init, z_end: float, n_samples: int = 20, tol: float = 1e-12) -> float:
        """Max discrepancy of ``X`` and ``lam_x W`` at ``n_samples`` points.

        Both systems are integrated independently; ``W`` starts from the
        scaled initial data.
        """
        x0, y0, z0 = init
        if self.kind == "PI":
            sys = self.source
            xp0 = -2.0 * sys.s1 * y0
            ref = integrate_painleve_i
            kwargs = {}
        else:
            sys = self.source
            xp0 = -sys.xdot(self.xdot_constant) * y0
            ref = integrate_painleve_ii
            kwargs = {"xdot_constant": self.xdot_constant}
        zs = np.linspace(z0, z_end, n_samples + 1)[1:]
        orig = ref(sys, init, z_end, tol, z_eval=zs, **kwargs)
        if orig.pole is not None:
            raise PreconditionError("original system has a pole before z_end; shorten the window")
        w0 = x0 / self.lam_x
        wp0 = xp0 * self.lam_z / self.lam_x
        zeta0, zetas = z0 / self.lam_z, zs / self.lam_z
        reflect = self.lam_z < 0
        sgn = -1.0 if reflect else 1.0
        s_eval = sgn * zetas
        std = integrate_limit(self.standard_rhs(reflect), (w0, wp0, sgn * zeta0),
                              s_eval[-1], tol, z_eval=s_eval, pole_order=2)
        if std.pole is not None:
            raise PreconditionError("standard system has a pole before the end point")
        mapped = self.lam_x * std.X
        return float(np.max(np.abs(mapped - orig.X) / np.maximum(1.0, np.abs(orig.X))))


def to_standard_form(sys, xdot_constant: str = "rho") -> StandardForm:
    """Scalings taking a fold or cusp limit system to its standard Painlevé form."""
    if isinstance(sys, FoldLimitSystem):
        a0, g0 = sys.a0, sys.g0
        if g0 == 0 or a0 == 0:
            raise DegenerateCoefficients("PI scaling needs alpha_0 != 0 and gamma_0 != 0")
        lam_z = _real_root(1.0 / (2.0 * a0 * g0), 5)
        lam_x = -2.0 * a0 * lam_z ** 3
        return StandardForm("PI", lam_x, lam_z, source=sys)
    if isinstance(sys, CuspLimitSystem):
        k = sys.xdot(xdot_constant)
        if k * sys.beta == 0 or sys.alpha == 0:
            raise DegenerateCoefficients("PII scaling needs rho/sigma, beta and alpha nonzero")
        lam_z = _real_root(-1.0 / (k * sys.beta), 3)
        q = -2.0 / (k * sys.alpha * lam_z ** 2)
        cubic_sign = 1.0 if q > 0 else -1.0
        lam_x = math.sqrt(abs(q))
        a = -k * lam_z ** 2 * sys.A / lam_x
        return StandardForm("PII", lam_x, lam_z, a, cubic_sign, sys, xdot_constant)
    raise PreconditionError(f"unsupported system type {type(sys).__name__}")
