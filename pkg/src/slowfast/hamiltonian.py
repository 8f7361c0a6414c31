"""Hamiltonians H(x, y, u, v) written as plain-text expressions.

Grammar (whitespace insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' int)*            # int: optionally signed integer literal
    atom   := number | name | func '(' expr ')' | '(' expr ')'
    func   := exp | sin | cos | sqrt

``x, y`` are the fast pair, ``u, v`` the slow pair.  Any other name is a
parameter and must be bound before evaluation.  ``**`` is accepted as an
alias of ``^``.

A model file is a header of ``param name = value`` lines followed by the
expression (which may span several lines); ``#`` starts a comment.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import jets
from .errors import ParseError, PreconditionError, UnboundParameter
from .jets import Jet, jet_variable

VARIABLES = ("x", "y", "u", "v")
FUNCTIONS = ("exp", "sin", "cos", "sqrt")


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


def symbols(node) -> set[str]:
    if isinstance(node, Sym):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg, Call)):
        return symbols(node.arg)
    if isinstance(node, Pow):
        return symbols(node.base)
    return symbols(node.left) | symbols(node.right)


# -- tokenizer / parser --------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^()])
""", re.VERBOSE)


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            out.append(("op", "^", pos) if tok == "**" else (kind, tok, pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, tok, what=None):
        if tok[0] == "end":
            raise ParseError("unexpected end of input", tok[2])
        raise ParseError(what or f"unexpected {tok[1]!r}", tok[2])

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(tok)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            arg = self.unary()
            return Neg(arg) if tok[1] == "-" else arg
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            node = Pow(node, self.int_exponent())
        return node

    def int_exponent(self):
        tok = self.take()
        sign = 1
        paren = False
        if tok[0] == "op" and tok[1] == "(":
            paren = True
            tok = self.take()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            sign = -1 if tok[1] == "-" else 1
            tok = self.take()
        if tok[0] != "num" or not tok[1].isdigit():
            self.fail(tok, "exponent must be an integer literal")
        if paren:
            close = self.take()
            if close[1] != ")":
                self.fail(close, "expected ')'")
        return sign * int(tok[1])

    def atom(self):
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos)
                self.take()
                arg = self.expr()
                close = self.take()
                if close[1] != ")":
                    self.fail(close, "expected ')'")
                return Call(text, arg)
            if text in FUNCTIONS:
                raise ParseError(f"function {text!r} needs an argument", pos)
            return Sym(text)
        if kind == "op" and text == "(":
            node = self.expr()
            close = self.take()
            if close[1] != ")":
                self.fail(close, "expected ')'")
            return node
        self.fail(tok)


def parse_expression(text: str):
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


# -- printing ----------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node):
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Num) and (node.value < 0 or math.copysign(1, node.value) < 0):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def to_source(node) -> str:
    """Render an AST back to text that re-parses to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        return f"-({inner})" if _prec(node.arg) < 3 else f"-{inner}"
    if isinstance(node, Pow):
        base = to_source(node.base)
        if _prec(node.base) < 4:
            base = f"({base})"
        return f"{base}^{node.exponent}" if node.exponent >= 0 else f"{base}^({node.exponent})"
    p = _PREC[node.op]
    left = to_source(node.left)
    right = to_source(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# -- code generation -----------------------------------------------------------------

def _pow(base, n):
    if isinstance(base, Jet):
        return jets.pow_int(base, n)
    return base ** n


_RUNTIME = {"_pow": _pow, "exp": jets.exp, "sin": jets.sin, "cos": jets.cos, "sqrt": jets.sqrt}


def _emit(node, params):
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Sym):
        if node.name in VARIABLES:
            return node.name
        return repr(float(params[node.name]))
    if isinstance(node, Neg):
        return f"(-{_emit(node.arg, params)})"
    if isinstance(node, Pow):
        return f"_pow({_emit(node.base, params)}, {node.exponent})"
    if isinstance(node, Call):
        return f"{node.fn}({_emit(node.arg, params)})"
    return f"({_emit(node.left, params)} {node.op} {_emit(node.right, params)})"


# -- the model -----------------------------------------------------------------------

class ModelFamily(enum.Enum):
    FoldCanonical = "FoldCanonical"
    CuspCanonical = "CuspCanonical"
    Custom = "Custom"


@dataclass(frozen=True)
class HamiltonianModel:
    """A parsed Hamiltonian plus parameter bindings.

    Immutable; :meth:`bind` returns a new model.  Evaluation works on floats
    and on :class:`~slowfast.jets.Jet` values alike.
    """

    source: str
    ast: object = field(repr=False)
    params: Mapping[str, float] = field(default_factory=dict)
    family: ModelFamily = ModelFamily.Custom

    @property
    def parameter_names(self) -> set[str]:
        return symbols(self.ast) - set(VARIABLES)

    @property
    def unbound(self) -> set[str]:
        return self.parameter_names - set(self.params)

    def bind(self, **values) -> "HamiltonianModel":
        new = dict(self.params)
        new.update({k: float(v) for k, v in values.items()})
        return HamiltonianModel(self.source, self.ast, new, self.family)

    @functools.cached_property
    def _fn(self):
        missing = self.unbound
        if missing:
            raise UnboundParameter(missing)
        code = f"lambda x, y, u, v: {_emit(self.ast, self.params)}"
        return eval(code, dict(_RUNTIME))  # noqa: S307 -- generated from our own AST

    def __call__(self, x, y, u, v):
        return self._fn(x, y, u, v)

    evaluate = __call__

    def require_bound(self):
        self._fn  # noqa: B018 -- raises UnboundParameter

    def to_source(self) -> str:
        return to_source(self.ast)

    def digest(self) -> str:
        """Stable hash of source text and parameter values."""
        h = hashlib.sha256(self.to_source().encode())
        for k in sorted(self.params):
            h.update(f"{k}={self.params[k]!r};".encode())
        return h.hexdigest()[:16]

    # -- derivatives -----------------------------------------------------------

    def jet(self, point: Sequence[float], active: Sequence = VARIABLES, degree: int = 4) -> Jet:
        return eval_jet(self, point, active, degree)

    def grad_hess(self, point: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        """Gradient (4,) and Hessian (4, 4) in the order x, y, u, v."""
        j = eval_jet(self, point, VARIABLES, 2)
        c = j.coeffs
        grad = c[1:5].copy()
        hes = np.empty((4, 4))
        # degree-2 block, graded-lex: x2 xy xu xv y2 yu yv u2 uv v2
        q = c[5:15]
        hes[0, 0] = 2 * q[0]
        hes[1, 1] = 2 * q[4]
        hes[2, 2] = 2 * q[7]
        hes[3, 3] = 2 * q[9]
        hes[0, 1] = hes[1, 0] = q[1]
        hes[0, 2] = hes[2, 0] = q[2]
        hes[0, 3] = hes[3, 0] = q[3]
        hes[1, 2] = hes[2, 1] = q[5]
        hes[1, 3] = hes[3, 1] = q[6]
        hes[2, 3] = hes[3, 2] = q[8]
        return grad, hes

    def gradient(self, point: Sequence[float]) -> np.ndarray:
        return eval_jet(self, point, VARIABLES, 1).coeffs[1:5].copy()


def _var_index(v):
    if isinstance(v, str):
        try:
            return VARIABLES.index(v)
        except ValueError:
            raise PreconditionError(f"unknown variable {v!r}") from None
    if not 0 <= int(v) < 4:
        raise PreconditionError(f"variable index {v} out of range")
    return int(v)


def eval_jet(model: HamiltonianModel, point: Sequence[float], active: Sequence = VARIABLES,
             degree: int = 4) -> Jet:
    """Jet of H in the ``active`` variables at ``point``; others are frozen."""
    if len(point) != 4:
        raise PreconditionError("point must be (x, y, u, v)")
    idx = [_var_index(a) for a in active]
    if not idx:
        raise PreconditionError("active_vars must be nonempty")
    if len(set(idx)) != len(idx):
        raise PreconditionError("duplicate active variable")
    args = [float(p) for p in point]
    n = len(idx)
    for k, i in enumerate(idx):
        args[i] = jet_variable(k, args[i], n, degree)
    fn = model._fn
    out = fn(*args)
    if not isinstance(out, Jet):
        out = jets.jet_constant(float(out), n, degree)
    return out


def parse_hamiltonian(text: str, params: Mapping[str, float] | None = None,
                      family: ModelFamily = ModelFamily.Custom) -> HamiltonianModel:
    ast = parse_expression(text)
    return HamiltonianModel(text, ast, dict(params or {}), family)


# -- model files ---------------------------------------------------------------------

_PARAM_LINE = re.compile(r"^\s*param\s+([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(\S+)\s*$")


def parse_model_file(text: str) -> HamiltonianModel:
    params = {}
    expr_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if line.lstrip().startswith("param"):
            m = _PARAM_LINE.match(line)
            if m is None or expr_lines:
                raise ParseError(f"bad param line {lineno}", 0)
            try:
                params[m.group(1)] = float(m.group(2))
            except ValueError:
                raise ParseError(f"bad value on param line {lineno}", 0) from None
            continue
        expr_lines.append(line.strip())
    return parse_hamiltonian(" ".join(expr_lines), params)


def load_model(path) -> HamiltonianModel:
    return parse_model_file(Path(path).read_text())


def format_model_file(model: HamiltonianModel) -> str:
    lines = [f"param {k} = {model.params[k]!r}" for k in sorted(model.params)]
    lines.append(model.to_source())
    return "\n".join(lines) + "\n"


# -- canonical families --------------------------------------------------------------

FOLD_SOURCE = "v + u*x + b*x^2 + c*x^3 + q*x^4 + H1*y^2"
FOLD_DEFAULTS = {"b": 0.0, "c": 1.0, "q": 0.0, "H1": 0.5}

CUSP_SOURCE = "h0*u + u*x + v*x^2/2 + a4*x^4/4 + H1*y^2"
CUSP_DEFAULTS = {"h0": 1.0, "a4": 1.0, "H1": 0.5}


def fold_canonical(**overrides) -> HamiltonianModel:
    """``v + u x + b x^2 + c x^3 + q x^4 + H1 y^2``; a fold at the origin by default."""
    params = dict(FOLD_DEFAULTS, **overrides)
    return parse_hamiltonian(FOLD_SOURCE, params, ModelFamily.FoldCanonical)


def cusp_canonical(**overrides) -> HamiltonianModel:
    """``h0 u + u x + v x^2/2 + a4 x^4/4 + H1 y^2``; a cusp at the origin by default."""
    params = dict(CUSP_DEFAULTS, **overrides)
    return parse_hamiltonian(CUSP_SOURCE, params, ModelFamily.CuspCanonical)
