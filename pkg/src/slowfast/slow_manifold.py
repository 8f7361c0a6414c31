"""Slow manifold SM = {H_x = H_y = 0}, its charts and its singular points.

Near a point of SM one pair (fast, slow) of coordinates is solved for in
terms of the other pair.  In the default chart the unknowns are ``(y, u)``
and SM is the graph ``y = f(x, v), u = g(x, v)``; the projection of SM onto
the slow plane is then ``(x, v) -> (g(x, v), v)`` and its singularities are
read from the partials of ``g``.  Those partials come from jets of H pushed
through the implicit function theorem, never from finite differences.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from ._newton import newton
from .dynamics import PhasePoint, _as_array
from .errors import (ChartInvalid, ContinuationStall, JetError, NewtonDivergence,
                     NotOnSM, PreconditionError, SingularJacobian)
from .hamiltonian import VARIABLES, HamiltonianModel
from .jets import Jet, extract_partial, implicit_jets, jet_variable

X, Y, U, V = range(4)
ZERO_TOL = 1e-7
SM_TOL = 1e-8
CHART_MIN_CONDITIONING = 1e-10

# (unknown fast, unknown slow, param fast, param slow); the first is the
# layout used throughout the fold/cusp criteria.
CHARTS = (("y", "u", "x", "v"),
          ("y", "v", "x", "u"),
          ("x", "u", "y", "v"),
          ("x", "v", "y", "u"))


class Classification(enum.Enum):
    Regular = "Regular"
    Fold = "Fold"
    Cusp = "Cusp"
    Degenerate = "Degenerate"


def _idx(name):
    return VARIABLES.index(name)


def _mi(*names):
    e = [0, 0, 0, 0]
    for n in names:
        e[_idx(n)] += 1
    return tuple(e)


def second_derivatives(model: HamiltonianModel, point) -> dict:
    """All second partials of H at ``point`` keyed like ``'xy'``."""
    j = model.jet(point, degree=2)
    out = {}
    for a, b in itertools.combinations_with_replacement(VARIABLES, 2):
        out[a + b] = out[b + a] = extract_partial(j, _mi(a, b))
    return out


def fast_residual(model: HamiltonianModel, point) -> np.ndarray:
    g = model.gradient(point)
    return np.array([g[X], g[Y]])


def delta(model: HamiltonianModel, p) -> float:
    """Fast Hessian discriminant ``H_xy^2 - H_yy H_xx``."""
    d = second_derivatives(model, _as_array(p))
    return float(d["xy"] ** 2 - d["yy"] * d["xx"])


def rank_matrix(model: HamiltonianModel, point) -> np.ndarray:
    """Rows ``(H_x*, H_y*)`` derivatives; columns x, y, u, v."""
    d = second_derivatives(model, point)
    return np.array([[d["xy"], d["yy"], d["uy"], d["vy"]],
                     [d["xx"], d["yx"], d["ux"], d["vx"]]])


def minor(mat, a, b) -> float:
    i, j = _idx(a), _idx(b)
    return float(mat[0, i] * mat[1, j] - mat[0, j] * mat[1, i])


def solve_critical_point(model: HamiltonianModel, u: float, v: float, guess=(0.0, 0.0),
                         tol: float = 1e-12) -> tuple[float, float]:
    """Equilibrium ``(x, y)`` of the layer system on the leaf ``(u, v)``."""

    def fun(z):
        j = model.jet((z[0], z[1], u, v), active=("x", "y"), degree=2)
        c = j.coeffs  # 1, x, y, x2, xy, y2
        f = np.array([c[1], c[2]])
        jac = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
        return f, jac

    z, _, _ = newton(fun, guess, tol=tol, singular_tol=1e-12)
    _, jac = fun(z)
    if abs(np.linalg.det(jac)) < 1e-12 * max(1.0, np.max(np.abs(jac))) ** 2:
        raise SingularJacobian(f"fast Hessian degenerate at {z}; use a chart instead")
    return float(z[0]), float(z[1])


# -- charts ----------------------------------------------------------------------

@dataclass
class SmChart:
    """Local graph of SM: unknown pair as functions of the parameter pair.

    With the default chart, ``f`` is y and ``g`` is u over the base point
    ``(x, v)``.  ``g_*`` are partials in the (fast param, slow param) pair.
    """

    chart: tuple
    base: tuple
    point: np.ndarray
    f: float
    g: float
    g_x: float
    g_xx: float
    g_xxx: float
    g_xv: float
    g_v: float
    g_vv: float
    conditioning: float
    f_jet: Jet = field(repr=False)
    g_jet: Jet = field(repr=False)

    def lift(self, dp_fast: float, dp_slow: float) -> np.ndarray:
        """Point of SM (from the Taylor jets) at a small parameter offset."""
        z = self.point.copy()
        mono = self.f_jet._lay.exps
        pw = dp_fast ** mono[:, 0] * dp_slow ** mono[:, 1]
        z[_idx(self.chart[0])] += float(self.f_jet.coeffs @ pw)
        z[_idx(self.chart[1])] += float(self.g_jet.coeffs @ pw)
        z[_idx(self.chart[2])] += dp_fast
        z[_idx(self.chart[3])] += dp_slow
        return z


def _chart_jets(model, point, chart, degree=3):
    """Jets of the two unknowns of ``chart`` over the parameter offsets."""
    fu, su, fp, sp = chart
    taylor = model.jet(point, degree=degree + 1)
    res = [taylor.derivative(Y), taylor.derivative(X)]
    try:
        f_jet, g_jet = implicit_jets(res, [_idx(fu), _idx(su)], [_idx(fp), _idx(sp)], degree)
    except JetError:
        raise ChartInvalid(f"chart {chart} singular at {point}") from None
    return taylor, f_jet, g_jet


def chart_at_point(model: HamiltonianModel, point, chart=CHARTS[0], degree: int = 3) -> SmChart:
    """Chart of SM through a point already known to lie on SM."""
    z = _as_array(point)
    mat = rank_matrix(model, z)
    cond = abs(minor(mat, chart[0], chart[1]))
    if cond < CHART_MIN_CONDITIONING:
        raise ChartInvalid(f"chart {chart[:2]} conditioning {cond:.3e} too small")
    _, f_jet, g_jet = _chart_jets(model, z, chart, degree)
    gc = g_jet

    def gp(i, j):
        if i + j > degree:
            return float("nan")
        return extract_partial(gc, (i, j))

    return SmChart(chart=tuple(chart), base=(z[_idx(chart[2])], z[_idx(chart[3])]), point=z,
                   f=z[_idx(chart[0])], g=z[_idx(chart[1])],
                   g_x=gp(1, 0), g_xx=gp(2, 0), g_xxx=gp(3, 0), g_xv=gp(1, 1),
                   g_v=gp(0, 1), g_vv=gp(0, 2), conditioning=cond, f_jet=f_jet, g_jet=g_jet)


def sm_chart(model: HamiltonianModel, x: float, v: float, guess=(0.0, 0.0),
             chart=CHARTS[0], degree: int = 3) -> SmChart:
    """Solve ``H_y = H_x = 0`` for the chart unknowns at the given parameters.

    With the default chart ``x, v`` are the parameters and ``guess`` is
    ``(y0, u0)``.
    """
    fu, su, fp, sp = chart
    iu, ju, ip, jp = (_idx(n) for n in chart)

    def fun(w):
        z = np.zeros(4)
        z[ip], z[jp], z[iu], z[ju] = x, v, w[0], w[1]
        j = model.jet(z, degree=2)
        grad = j.coeffs[1:5]
        hes = np.zeros((4, 4))
        for a in range(4):
            for b in range(4):
                e = [0, 0, 0, 0]
                e[a] += 1
                e[b] += 1
                hes[a, b] = extract_partial(j, e)
        f = np.array([grad[Y], grad[X]])
        jac = np.array([[hes[Y, iu], hes[Y, ju]], [hes[X, iu], hes[X, ju]]])
        return f, jac

    try:
        w, _, _ = newton(fun, guess, tol=1e-13, singular_tol=1e-14)
    except SingularJacobian:
        raise ChartInvalid(f"chart {chart[:2]} singular near base ({x}, {v})") from None
    z = np.zeros(4)
    z[ip], z[jp], z[iu], z[ju] = x, v, w[0], w[1]
    return chart_at_point(model, z, chart, degree)


# -- classification --------------------------------------------------------------

@dataclass
class SingularPointRecord:
    location: PhasePoint
    delta: float
    classification: Classification
    margins: dict
    zero_tolerance: float
    chart: tuple | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {"location": list(self.location), "delta": self.delta,
                "classification": self.classification.value, "margins": self.margins,
                "zero_tolerance": self.zero_tolerance,
                "chart": list(self.chart) if self.chart else None, "reason": self.reason}


def _order_scale(taylor: Jet, order: int) -> float:
    """Largest absolute H-derivative of the given order (floored at 1)."""
    lay = taylor._lay
    sel = lay.total == order
    if not np.any(sel):
        return 1.0
    vals = np.abs(taylor.coeffs[sel] * lay.factorial[sel])
    return max(1.0, float(vals.max()))


def transversality(model: HamiltonianModel, point) -> float:
    """``H_xy[H_u H_yv - H_v H_yu] - H_yy[H_u H_xv - H_v H_xu]``."""
    z = _as_array(point)
    g = model.gradient(z)
    d = second_derivatives(model, z)
    hu, hv = g[U], g[V]
    return float(d["xy"] * (hu * d["yv"] - hv * d["yu"])
                 - d["yy"] * (hu * d["xv"] - hv * d["xu"]))


def delta_along_chart(model, chart: SmChart) -> Jet:
    """Delta restricted to SM, as a jet over the chart parameters."""
    taylor = model.jet(chart.point, degree=chart.g_jet.degree + 1)
    hx, hy = taylor.derivative(X), taylor.derivative(Y)
    hxx, hxy, hyy = hx.derivative(X), hx.derivative(Y), hy.derivative(Y)
    dj = hxy * hxy - hyy * hxx
    m = 2
    deg = chart.g_jet.degree
    subs = [None] * 4
    subs[_idx(chart.chart[0])] = chart.f_jet
    subs[_idx(chart.chart[1])] = chart.g_jet
    subs[_idx(chart.chart[2])] = jet_variable(0, 0.0, m, deg)
    subs[_idx(chart.chart[3])] = jet_variable(1, 0.0, m, deg)
    return dj.compose(subs)


def classify_singular_point(model: HamiltonianModel, p, tol: float = ZERO_TOL,
                            chart=None) -> SingularPointRecord:
    """Regular / Fold / Cusp / Degenerate classification of a point of SM.

    A point is singular when Delta vanishes.  With the chart unknowns
    anchored on the largest mixed minor of the rank matrix, a singular point
    is a fold when ``g_x = 0, g_xx != 0`` (cross-checked against the
    derivative of Delta along SM) and a cusp when ``g_x = g_xx = 0`` with
    ``g_xv, g_xxx != 0``.  All tested quantities are kept in ``margins``.
    """
    z = _as_array(p)
    res = fast_residual(model, z)
    if np.max(np.abs(res)) > SM_TOL:
        raise NotOnSM(f"|(H_x, H_y)| = {np.max(np.abs(res)):.3e} at {z}")
    taylor = model.jet(z, degree=4)
    s2, s3, s4 = (_order_scale(taylor, k) for k in (2, 3, 4))
    mat = rank_matrix(model, z)
    sv = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(sv > tol * s2))
    minors = {a + b: minor(mat, a, b) for a, b in itertools.combinations(VARIABLES, 2)}
    dlt = delta(model, z)
    margins = {"delta": dlt, "rank": rank, "rank_indicator": float(sv[-1] / max(sv[0], 1e-300)),
               "transversality": transversality(model, z)}
    margins.update({f"minor_{k}": v for k, v in minors.items()})
    loc = PhasePoint.from_array(z)

    def record(cls, chart_used=None, reason=""):
        return SingularPointRecord(loc, dlt, cls, margins, tol, chart_used, reason)

    if rank < 2:
        return record(Classification.Degenerate, reason="rank of (H_x, H_y) Jacobian below 2")
    if chart is None:
        mixed = [(abs(minors.get(c[0] + c[1], minors.get(c[1] + c[0]))), c) for c in CHARTS]
        best, chart = max(mixed, key=lambda t: t[0])
        if best < tol * s2 * s2:
            return record(Classification.Degenerate,
                          reason="only the (u, v) minor is nonzero")
    try:
        ch = chart_at_point(model, z, chart)
    except ChartInvalid:
        if abs(dlt) > tol * s2 * s2:
            return record(Classification.Regular)
        raise
    dj = delta_along_chart(model, ch)
    delta_x = dj.coefficient((1, 0))
    margins.update({"g_x": ch.g_x, "g_xx": ch.g_xx, "g_xxx": ch.g_xxx, "g_xv": ch.g_xv,
                    "g_v": ch.g_v, "delta_x": delta_x, "conditioning": ch.conditioning})
    if abs(dlt) > tol * s2 * s2:
        return record(Classification.Regular, ch.chart)
    small_gx = abs(ch.g_x) < tol * s2
    fold_g = small_gx and abs(ch.g_xx) > tol * s3
    fold_d = abs(delta_x) > tol * s2 * s3
    if fold_g != fold_d:
        return record(Classification.Degenerate, ch.chart,
                      reason="g_xx and Delta_x fold criteria disagree")
    if fold_g:
        return record(Classification.Fold, ch.chart)
    if (small_gx and abs(ch.g_xx) < tol * s3 and abs(ch.g_xv) > tol * s3
            and abs(ch.g_xxx) > tol * s4):
        return record(Classification.Cusp, ch.chart)
    return record(Classification.Degenerate, ch.chart,
                  reason="neither fold nor cusp conditions hold")


# -- singular curve continuation ----------------------------------------------------

def _singular_system(model, z):
    """``(H_x, H_y, Delta)`` and its 3x4 Jacobian."""
    t = model.jet(z, degree=3)
    hx, hy = t.derivative(X), t.derivative(Y)
    hxx, hxy, hyy = hx.derivative(X), hx.derivative(Y), hy.derivative(Y)
    f = np.array([hx.value, hy.value, hxy.value ** 2 - hyy.value * hxx.value])
    jac = np.vstack([hx.gradient(), hy.gradient(),
                     2 * hxy.value * hxy.gradient() - hyy.value * hxx.gradient()
                     - hxx.value * hyy.gradient()])
    return f, jac


def _tangent(jac, prev=None, direction=1.0):
    _, _, vt = np.linalg.svd(jac)
    t = vt[-1]
    if prev is not None:
        return t if t @ prev >= 0 else -t
    k = int(np.argmax(np.abs(t)))
    return t * np.sign(t[k]) * direction


def trace_singular_curve(model: HamiltonianModel, seed, steps: int = 50, ds: float = 1e-2,
                         direction: float = 1.0, tol: float = 1e-10) -> np.ndarray:
    """Pseudo-arclength continuation of ``{H_x = H_y = Delta = 0}``.

    Returns ``steps + 1`` samples starting at ``seed``.
    """
    z = _as_array(seed).copy()
    f, jac = _singular_system(model, z)
    if np.max(np.abs(f)) > 1e-8:
        raise PreconditionError(f"seed is not a singular point of SM (residual {np.max(np.abs(f)):.3e})")
    if np.max(np.abs(f)) > tol:
        z = _correct(model, z, _tangent(jac, direction=direction), z, tol)
        f, jac = _singular_system(model, z)
    t = _tangent(jac, direction=direction)
    out = [z.copy()]
    for _ in range(steps):
        h = ds
        for _attempt in range(4):
            pred = z + h * t
            try:
                znew = _correct(model, pred, t, pred, tol)
                break
            except (NewtonDivergence, SingularJacobian, np.linalg.LinAlgError):
                h *= 0.5
        else:
            raise ContinuationStall(f"corrector failed near {z} after 3 step halvings")
        _, jac = _singular_system(model, znew)
        t = _tangent(jac, prev=t)
        z = znew
        out.append(z.copy())
    return np.array(out)


def _correct(model, z0, t, pred, tol):
    def fun(z):
        f, jac = _singular_system(model, z)
        return np.append(f, t @ (z - pred)), np.vstack([jac, t])

    z, _, _ = newton(fun, z0, tol=tol, maxiter=15, max_halvings=4)
    return z


# -- slow flow --------------------------------------------------------------------------

def _slow_jets(model, u, v, guess, degree=2):
    x, y = solve_critical_point(model, u, v, guess)
    point = np.array([x, y, u, v])
    taylor = model.jet(point, degree=degree + 1)
    res = [taylor.derivative(X), taylor.derivative(Y)]
    dx, dy = implicit_jets(res, [X, Y], [U, V], degree)
    subs = [dx, dy, jet_variable(0, 0.0, 2, degree), jet_variable(1, 0.0, 2, degree)]
    return point, taylor.compose(subs)


def slow_hamiltonian(model: HamiltonianModel, u: float, v: float, guess=(0.0, 0.0)) -> float:
    """``h(u, v) = H`` at the layer equilibrium on the leaf ``(u, v)``."""
    x, y = solve_critical_point(model, u, v, guess)
    return float(model(x, y, u, v))


def slow_vector_field(model: HamiltonianModel, u: float, v: float, guess=(0.0, 0.0)):
    """``(h, (h_v, -h_u), critical point)`` with ``h_u, h_v`` from jets."""
    point, hj = _slow_jets(model, u, v, guess)
    h_u, h_v = hj.coeffs[1], hj.coeffs[2]
    return hj.value, np.array([h_v, -h_u]), point
