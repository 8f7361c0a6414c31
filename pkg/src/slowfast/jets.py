"""Dense truncated multivariate Taylor series ("jets").

A :class:`Jet` in ``n`` variables truncated at total degree ``d`` stores the
Taylor coefficients of a function about some base point, one per monomial
of total degree ``<= d``, in graded-lexicographic order.  For two variables
and degree two the order is ``1, x, y, x^2, xy, y^2``.

Arithmetic is exact truncated polynomial arithmetic: products never alias
terms of degree above ``d`` back into the array, they are dropped.  Elementary
functions are composed through their Taylor series about the constant term,
which terminates because the non-constant part is nilpotent.

Everything here is a value type; jets are never mutated after construction.
"""

from __future__ import annotations

import functools
import math
from itertools import combinations_with_replacement
from typing import NamedTuple, Sequence

import numpy as np

from .errors import JetError

MAX_VARS = 4
DIVISION_THRESHOLD = 1e-300


class _Layout(NamedTuple):
    num_vars: int
    degree: int
    exps: np.ndarray  # (size, num_vars) exponent table
    index: dict
    total: np.ndarray  # total degree of each slot
    factorial: np.ndarray  # prod(alpha_i!) for each slot
    mul_i: np.ndarray
    mul_j: np.ndarray
    mul_k: np.ndarray

    @property
    def size(self):
        return len(self.exps)


def monomials(num_vars: int, degree: int) -> list[tuple[int, ...]]:
    """Multi-indices of total degree ``<= degree`` in graded-lex order."""
    out = []
    for d in range(degree + 1):
        block = []
        for combo in combinations_with_replacement(range(num_vars), d):
            e = [0] * num_vars
            for v in combo:
                e[v] += 1
            block.append(tuple(e))
        # combinations come out with the first variable varying slowest;
        # graded-lex wants x^d first, i.e. descending exponent tuples
        block.sort(reverse=True)
        out.extend(block)
    return out


@functools.lru_cache(maxsize=None)
def _layout(num_vars: int, degree: int) -> _Layout:
    exps = monomials(num_vars, degree)
    index = {e: i for i, e in enumerate(exps)}
    arr = np.array(exps, dtype=int).reshape(len(exps), num_vars)
    total = arr.sum(axis=1)
    fact = np.array([math.prod(math.factorial(k) for k in e) for e in exps], dtype=float)
    mi, mj, mk = [], [], []
    for i, a in enumerate(exps):
        for j, b in enumerate(exps):
            if total[i] + total[j] > degree:
                continue
            mi.append(i)
            mj.append(j)
            mk.append(index[tuple(p + q for p, q in zip(a, b))])
    return _Layout(num_vars, degree, arr, index, total, fact,
                   np.array(mi), np.array(mj), np.array(mk))


class Jet:
    """Truncated Taylor polynomial in ``num_vars`` variables.

    Supports ``+ - * /`` with other jets of the same shape and with plain
    numbers, unary minus and integer powers.
    """

    __slots__ = ("coeffs", "_lay")

    def __init__(self, coeffs, num_vars: int, degree: int = 4):
        if not 1 <= num_vars <= MAX_VARS:
            raise JetError(f"num_vars must be in 1..{MAX_VARS}, got {num_vars}")
        if degree < 0:
            raise JetError(f"degree must be >= 0, got {degree}")
        lay = _layout(num_vars, degree)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (lay.size,):
            raise JetError(f"expected {lay.size} coefficients, got shape {coeffs.shape}")
        self.coeffs = coeffs
        self._lay = lay

    @classmethod
    def _wrap(cls, coeffs, lay):
        obj = cls.__new__(cls)
        obj.coeffs = coeffs
        obj._lay = lay
        return obj

    @property
    def num_vars(self) -> int:
        return self._lay.num_vars

    @property
    def degree(self) -> int:
        return self._lay.degree

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def __len__(self):
        return self._lay.size

    def __repr__(self):
        terms = []
        for c, e in zip(self.coeffs, self._lay.exps):
            if c != 0.0:
                terms.append(f"{c:.6g}*{tuple(int(k) for k in e)}")
        return f"Jet({' + '.join(terms) or '0'}; n={self.num_vars}, d={self.degree})"

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "Jet"):
        if other._lay is not self._lay:
            raise JetError(
                f"jet shape mismatch: (n={self.num_vars}, d={self.degree}) vs "
                f"(n={other.num_vars}, d={other.degree})")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet._wrap(self.coeffs + other.coeffs, self._lay)
        c = self.coeffs.copy()
        c[0] += other
        return Jet._wrap(c, self._lay)

    __radd__ = __add__

    def __neg__(self):
        return Jet._wrap(-self.coeffs, self._lay)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet._wrap(self.coeffs - other.coeffs, self._lay)
        c = self.coeffs.copy()
        c[0] -= other
        return Jet._wrap(c, self._lay)

    def __rsub__(self, other):
        c = -self.coeffs
        c[0] += other
        return Jet._wrap(c, self._lay)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            lay = self._lay
            w = self.coeffs[lay.mul_i] * other.coeffs[lay.mul_j]
            return Jet._wrap(np.bincount(lay.mul_k, weights=w, minlength=lay.size), lay)
        return Jet._wrap(self.coeffs * other, self._lay)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        b0 = self.coeffs[0]
        if not abs(b0) > DIVISION_THRESHOLD:
            raise JetError("division by a jet with zero constant term")
        # 1/(b0 + t) = sum_k (-1)^k t^k / b0^(k+1), t nilpotent
        coef = [(-1.0) ** k / b0 ** (k + 1) for k in range(self.degree + 1)]
        return _series(self, coef)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            out = self * other.reciprocal()
            # keep the value bit-identical to scalar division
            out.coeffs[0] = self.coeffs[0] / other.coeffs[0]
            return out
        if other == 0:
            raise JetError("division by zero")
        return Jet._wrap(self.coeffs / other, self._lay)

    def __rtruediv__(self, other):
        out = self.reciprocal() * other
        out.coeffs[0] = other / self.coeffs[0]
        return out

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise JetError("only integer powers of jets are supported")
        return pow_int(self, int(n))

    # -- access -------------------------------------------------------------

    def coefficient(self, multi_index: Sequence[int]) -> float:
        mi = tuple(int(k) for k in multi_index)
        if len(mi) != self.num_vars:
            raise JetError(f"multi-index {mi} does not match num_vars={self.num_vars}")
        if sum(mi) > self.degree:
            raise JetError(f"order {sum(mi)} exceeds jet degree {self.degree}")
        return float(self.coeffs[self._lay.index[mi]])

    def partial(self, multi_index: Sequence[int]) -> float:
        return extract_partial(self, multi_index)

    def gradient(self) -> np.ndarray:
        n = self.num_vars
        return self.coeffs[1:n + 1].copy()

    def hessian(self) -> np.ndarray:
        n = self.num_vars
        if self.degree < 2:
            raise JetError("hessian needs degree >= 2")
        hes = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                hes[i, j] = extract_partial(self, e)
        return hes

    def derivative(self, var: int) -> "Jet":
        """Jet of the partial derivative in ``var``.

        Same shape as ``self``; the top-degree block is zero since it is not
        determined by the input.
        """
        lay = self._lay
        if not 0 <= var < lay.num_vars:
            raise JetError(f"variable index {var} out of range")
        out = np.zeros(lay.size)
        for i, e in enumerate(lay.exps):
            k = e[var]
            if k == 0:
                continue
            e2 = list(e)
            e2[var] -= 1
            out[lay.index[tuple(e2)]] += k * self.coeffs[i]
        return Jet._wrap(out, lay)

    def compose(self, subs: Sequence["Jet"]) -> "Jet":
        """Substitute jets for the variables (offsets from the base point).

        ``self`` is read as the polynomial ``sum c_a * d^a`` in the offsets
        ``d``; the result lives in the variables of ``subs``.
        """
        lay = self._lay
        if len(subs) != lay.num_vars:
            raise JetError("need one substitution per variable")
        s0 = subs[0]
        for s in subs[1:]:
            s0._check(s)
        one = jet_constant(1.0, s0.num_vars, s0.degree)
        powers = []
        for s in subs:
            p = [one]
            for _ in range(lay.degree):
                p.append(p[-1] * s)
            powers.append(p)
        acc = np.zeros(len(s0))
        for c, e in zip(self.coeffs, lay.exps):
            if c == 0.0:
                continue
            term = None
            for v, k in enumerate(e):
                if k:
                    term = powers[v][k] if term is None else term * powers[v][k]
            acc += c * (one.coeffs if term is None else term.coeffs)
        return Jet._wrap(acc, s0._lay)


# -- constructors ------------------------------------------------------------

def jet_constant(value: float, num_vars: int, degree: int = 4) -> Jet:
    lay = _layout(num_vars, degree) if 1 <= num_vars <= MAX_VARS else None
    if lay is None:
        raise JetError(f"num_vars must be in 1..{MAX_VARS}, got {num_vars}")
    c = np.zeros(lay.size)
    c[0] = value
    return Jet._wrap(c, lay)


def jet_variable(index: int, value: float, num_vars: int, degree: int = 4) -> Jet:
    """Jet of the coordinate function ``x_index`` expanded at ``value``."""
    if not 1 <= num_vars <= MAX_VARS:
        raise JetError(f"num_vars must be in 1..{MAX_VARS}, got {num_vars}")
    if not 0 <= index < num_vars:
        raise JetError(f"variable index {index} out of range for {num_vars} variables")
    j = jet_constant(value, num_vars, degree)
    if degree >= 1:
        j.coeffs[1 + index] = 1.0
    return j


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise JetError(f"unknown arithmetic op {op!r}")


def extract_partial(a: Jet, multi_index: Sequence[int]) -> float:
    """Partial derivative ``d^alpha`` at the base point (coefficient * alpha!)."""
    mi = tuple(int(k) for k in multi_index)
    c = a.coefficient(mi)
    return float(c * math.prod(math.factorial(k) for k in mi))


# -- elementary functions ------------------------------------------------------

def _series(a: Jet, coef: Sequence[float]) -> Jet:
    """Evaluate ``sum coef[k] * t^k`` with ``t = a - a(0)`` by Horner."""
    t = Jet._wrap(a.coeffs.copy(), a._lay)
    t.coeffs[0] = 0.0
    acc = jet_constant(coef[-1], a.num_vars, a.degree)
    for c in reversed(coef[:-1]):
        acc = acc * t + c
    return acc


def _exp(a: Jet) -> Jet:
    e0 = math.exp(a.coeffs[0])
    return _series(a, [e0 / math.factorial(k) for k in range(a.degree + 1)])


def _sin(a: Jet) -> Jet:
    s, c = math.sin(a.coeffs[0]), math.cos(a.coeffs[0])
    cyc = (s, c, -s, -c)
    return _series(a, [cyc[k % 4] / math.factorial(k) for k in range(a.degree + 1)])


def _cos(a: Jet) -> Jet:
    s, c = math.sin(a.coeffs[0]), math.cos(a.coeffs[0])
    cyc = (c, -s, -c, s)
    return _series(a, [cyc[k % 4] / math.factorial(k) for k in range(a.degree + 1)])


def _sqrt(a: Jet) -> Jet:
    a0 = a.coeffs[0]
    if not a0 > 0:
        raise JetError(f"sqrt of jet with nonpositive constant term {a0}")
    coef = []
    binom = 1.0
    for k in range(a.degree + 1):
        coef.append(binom * a0 ** (0.5 - k))
        binom *= (0.5 - k) / (k + 1)
    coef[0] = math.sqrt(a0)
    return _series(a, coef)


def pow_int(a: Jet, n: int) -> Jet:
    out = _pow_int(a, n)
    out.coeffs[0] = a.coeffs[0] ** n
    return out


def _pow_int(a: Jet, n: int) -> Jet:
    if n < 0:
        return _pow_int(a, -n).reciprocal()
    result = jet_constant(1.0, a.num_vars, a.degree)
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


_ELEMENTARY = {"exp": _exp, "sin": _sin, "cos": _cos, "sqrt": _sqrt}


def jet_elementary(a: Jet, fn: str, n: int | None = None) -> Jet:
    if fn == "pow_int":
        if n is None:
            raise JetError("pow_int needs an integer exponent")
        return pow_int(a, n)
    try:
        return _ELEMENTARY[fn](a)
    except KeyError:
        raise JetError(f"unknown elementary function {fn!r}") from None


# Polymorphic over jets, Python floats and numpy arrays.

def exp(a):
    if isinstance(a, Jet):
        return _exp(a)
    return np.exp(a) if isinstance(a, np.ndarray) else math.exp(a)


def sin(a):
    if isinstance(a, Jet):
        return _sin(a)
    return np.sin(a) if isinstance(a, np.ndarray) else math.sin(a)


def cos(a):
    if isinstance(a, Jet):
        return _cos(a)
    return np.cos(a) if isinstance(a, np.ndarray) else math.cos(a)


def sqrt(a):
    if isinstance(a, Jet):
        return _sqrt(a)
    if np.any(np.asarray(a) < 0):
        raise JetError(f"sqrt of negative number {a}")
    return np.sqrt(a) if isinstance(a, np.ndarray) else math.sqrt(a)


# -- implicit functions ----------------------------------------------------------

def implicit_jets(residuals: Sequence[Jet], unknowns: Sequence[int],
                  params: Sequence[int], degree: int | None = None) -> list[Jet]:
    """Taylor expansion of an implicitly defined function.

    ``residuals`` are jets (all in the same ``n`` variables) of ``F`` about a
    base point where ``F = 0``.  Solves ``F = 0`` for the variables listed in
    ``unknowns`` as functions of those in ``params``; every variable must be
    in exactly one list.  Returns the offsets of the unknowns as jets in
    ``len(params)`` variables.

    Uses Newton with the Jacobian frozen at the base point: each sweep fixes
    one more order, so ``degree + 1`` sweeps are exact.
    """
    res = list(residuals)
    if not res:
        raise JetError("no residuals given")
    n = res[0].num_vars
    if sorted(list(unknowns) + list(params)) != list(range(n)):
        raise JetError("unknowns and params must partition the variables")
    if len(unknowns) != len(res):
        raise JetError("need as many residuals as unknowns")
    if degree is None:
        degree = res[0].degree
    m = len(params)
    jac = np.array([[r.coeffs[1 + u] for u in unknowns] for r in res])
    try:
        jinv = np.linalg.inv(jac)
    except np.linalg.LinAlgError:
        raise JetError("implicit-function Jacobian is singular") from None
    pvars = [jet_variable(k, 0.0, m, degree) for k in range(m)]
    z = [jet_constant(0.0, m, degree) for _ in unknowns]
    for _ in range(degree + 1):
        subs = [None] * n
        for k, p in enumerate(params):
            subs[p] = pvars[k]
        for k, u in enumerate(unknowns):
            subs[u] = z[k]
        r = np.array([f.compose(subs).coeffs for f in res])
        step = jinv @ r
        z = [Jet._wrap(zk.coeffs - step[k], zk._lay) for k, zk in enumerate(z)]
    return z
