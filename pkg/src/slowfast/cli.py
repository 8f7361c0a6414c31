"""Config-driven command line front end.

A run file is an ini file::

    [run]
    command = analyze          ; analyze | integrate | trace-singular | reduce |
                               ; painleve | verify-fold | verify-cusp | form-check
    model = fold               ; fold, cusp, or a path to a model file
    ; expression = v + u*x + x^3 + y^2/2   (inline model instead of `model`)
    output = out

    [params]
    q = 0.5                    ; bind or override model parameters

    [options]
    point = 0, 0, 0, 0         ; command-specific keys, see README

Exit status: 0 success, 1 internal error, 2 precondition or classification
mismatch, 3 configuration error.  Output files are first written with a
``.partial`` suffix and renamed once the command has finished.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import errors as E
from .dynamics import integrate
from .hamiltonian import cusp_canonical, fold_canonical, load_model, parse_hamiltonian
from .io import csv_text, json_text
from .painleve import integrate_painleve_i, integrate_painleve_ii, to_standard_form
from .reduction import CuspLimitSystem, FoldLimitSystem, cusp_coefficients, fold_coefficients
from .slow_manifold import classify_singular_point, delta, trace_singular_curve
from .verify import convergence_study, form_determinants, random_sm_points

COMMANDS = ("analyze", "integrate", "trace-singular", "reduce", "painleve", "verify-fold",
            "verify-cusp", "form-check")

EXIT_OK, EXIT_INTERNAL, EXIT_PRECONDITION, EXIT_CONFIG = 0, 1, 2, 3

PRECONDITION_ERRORS = (E.PreconditionError, E.NotOnSM, E.ClassificationMismatch, E.NotAFold,
                       E.NotACusp, E.BranchInvalid, E.TransversalityFailure, E.ChartInvalid,
                       E.DegenerateCoefficients, E.PoleInWindow, E.MismatchedEpsilon,
                       E.UnboundParameter)


class ConfigError(Exception):
    def __init__(self, message, line=None, column=None):
        loc = "" if line is None else f" (line {line}, column {column or 1})"
        super().__init__(message + loc)
        self.line, self.column = line, column


class ExpectationFailed(Exception):
    """A result contradicts an ``expect`` option."""


class RunConfig:
    """Parsed run file."""

    def __init__(self, text: str, base_dir: Path, origin: str = "<config>"):
        self.text = text
        self.base_dir = base_dir
        self.origin = origin
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.optionxform = str
        try:
            cp.read_string(text, source=origin)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc.message.splitlines()[0]}",
                              getattr(exc, "lineno", None)) from None
        self.cp = cp
        for sec in cp.sections():
            if sec not in ("run", "params", "options"):
                raise ConfigError(f"unknown section [{sec}]", self._line(sec))
        if not cp.has_section("run"):
            raise ConfigError("missing [run] section")
        self.command = cp.get("run", "command", fallback=None)
        if self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {', '.join(COMMANDS)}; got {self.command!r}",
                              self._line("command"))
        self.output = base_dir / cp.get("run", "output", fallback="out")
        self.params = {}
        if cp.has_section("params"):
            for k, v in cp.items("params"):
                self.params[k] = self._to_float(v, k)
        self.options = dict(cp.items("options")) if cp.has_section("options") else {}
        self.model = self._load_model()

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls(text, path.parent, str(path))

    def _line(self, needle):
        for i, raw in enumerate(self.text.splitlines(), 1):
            s = raw.strip()
            if s.startswith(f"[{needle}]") or s.split("=", 1)[0].strip() == needle:
                return i
        return None

    def _to_float(self, value, key):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}", self._line(key)) from None

    def _load_model(self):
        run = self.cp["run"]
        source, expr = run.get("model"), run.get("expression")
        if (source is None) == (expr is None):
            raise ConfigError("exactly one of run.model and run.expression is required",
                              self._line("model") or self._line("expression"))
        try:
            if expr is not None:
                model = parse_hamiltonian(expr)
            elif source in ("fold", "FoldCanonical"):
                model = fold_canonical()
            elif source in ("cusp", "CuspCanonical"):
                model = cusp_canonical()
            else:
                path = self.base_dir / source
                if not path.is_file():
                    raise ConfigError(f"model file not found: {path}", self._line("model"))
                model = load_model(path)
        except E.ParseError as exc:
            raise ConfigError(f"model: {exc}", self._line("model") or self._line("expression"))
        model = model.bind(**self.params)
        if model.unbound:
            raise ConfigError(f"unbound model parameter(s): {', '.join(sorted(model.unbound))}",
                              self._line("model") or self._line("expression"))
        return model

    # typed option access
    def get(self, key, default=None):
        return self.options.get(key, default)

    def number(self, key, default=None):
        if key not in self.options:
            if default is None:
                raise ConfigError(f"missing option {key}")
            return default
        return self._to_float(self.options[key], key)

    def integer(self, key, default):
        val = self.number(key, float(default))
        if val != int(val):
            raise ConfigError(f"{key}: expected an integer", self._line(key))
        return int(val)

    def vector(self, key, length=None, default=None):
        if key not in self.options:
            if default is None:
                raise ConfigError(f"missing option {key}")
            return list(default)
        toks = [t for t in self.options[key].replace(",", " ").split()]
        vals = [self._to_float(t, key) for t in toks]
        if length is not None and len(vals) != length:
            raise ConfigError(f"{key}: expected {length} numbers, got {len(vals)}", self._line(key))
        return vals

    def digest(self) -> str:
        h = hashlib.sha256(self.text.encode())
        h.update(self.model.digest().encode())
        return h.hexdigest()[:16]


class Outputs:
    """Writes files as ``name.partial`` and renames them on :meth:`commit`."""

    def __init__(self, directory: Path, config_hash: str):
        self.dir = directory
        self.hash = config_hash
        self.pending = []

    def _write(self, name, text):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / (name + ".partial")
        path.write_text(text)
        self.pending.append(path)
        return path

    def csv(self, name, header, rows):
        return self._write(name, csv_text(header, rows, f"config_hash={self.hash}"))

    def csv_text(self, name, text):
        return self._write(name, f"# config_hash={self.hash}\n" + text)

    def json(self, name, payload):
        data = {"_config_hash": self.hash}
        data.update(payload)
        return self._write(name, json_text(data))

    def commit(self):
        done = []
        for p in self.pending:
            final = p.with_name(p.name[: -len(".partial")])
            p.replace(final)
            done.append(final)
        self.pending = []
        return done


# -- commands ---------------------------------------------------------------------

def _expect(cfg, got):
    want = cfg.get("expect")
    if want is not None and want != got:
        raise ExpectationFailed(f"expected {want}, got {got}")


def cmd_analyze(cfg, out, rng):
    point = cfg.vector("point", 4, (0, 0, 0, 0))
    rec = classify_singular_point(cfg.model, point, tol=cfg.number("tol", 1e-7))
    out.json("report.json", {"command": "analyze", "model": cfg.model.to_source(),
                             "params": dict(cfg.model.params), **rec.to_dict()})
    _expect(cfg, rec.classification.value)


def cmd_integrate(cfg, out, rng):
    p0 = cfg.vector("point", 4)
    eps = cfg.number("epsilon")
    t0, t1 = cfg.vector("t_span", 2, (0.0, cfg.number("t_end", 1.0)))
    h = cfg.number("h", eps / 5 if eps > 0 else 1e-2)
    traj = integrate(cfg.model, p0, eps, (t0, t1), h,
                     escape_radius=cfg.number("escape_radius", 1e6))
    rows = np.column_stack([traj.times, traj.states, traj.energy])
    out.csv("trajectory.csv", ["t", "x", "y", "u", "v", "H"], rows)
    out.json("report.json", {"command": "integrate", **traj.metadata()})
    if traj.error:
        raise E.NewtonDivergence(traj.error) if "Newton" in traj.error else \
            E.PreconditionError(f"trajectory stopped early: {traj.error}")


def cmd_trace_singular(cfg, out, rng):
    seed = cfg.vector("point", 4, (0, 0, 0, 0))
    curve = trace_singular_curve(cfg.model, seed, steps=cfg.integer("steps", 50),
                                 ds=cfg.number("ds", 1e-2),
                                 direction=cfg.number("direction", 1.0))
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(curve, axis=0), axis=1))])
    rows = []
    for si, z in zip(s, curve):
        try:
            cls = classify_singular_point(cfg.model, z).classification.value
        except E.SlowFastError as exc:
            cls = type(exc).__name__
        rows.append([si, *z, delta(cfg.model, z), cls])
    out.csv("singular_curve.csv", ["s", "x", "y", "u", "v", "delta", "class"], rows)


def _seed_and_level(cfg):
    seed = np.array(cfg.vector("point", 4, (0, 0, 0, 0)))
    h_s = float(cfg.model(*seed))
    rel = cfg.number("c", 0.0)
    return seed, h_s, rel, h_s + rel


def cmd_reduce(cfg, out, rng):
    seed, h_s, rel, c = _seed_and_level(cfg)
    kind = cfg.get("kind", "auto").lower()
    if kind == "auto":
        kind = classify_singular_point(cfg.model, seed).classification.value.lower()
    if kind == "fold":
        sys_ = fold_coefficients(cfg.model, c, seed)
        payload = sys_.to_dict()
    elif kind == "cusp":
        eps = cfg.number("epsilon", 0.0)
        sys_ = cusp_coefficients(cfg.model, c, seed, epsilon=eps if eps > 0 else None)
        payload = sys_.to_dict()
    else:
        raise E.ClassificationMismatch(f"reduce needs a fold or cusp point, found {kind}")
    payload.update({"command": "reduce", "kind": kind, "level_offset": rel, "H_seed": h_s})
    out.json("coefficients.json", payload)


def _limit_system(cfg, kind):
    keys = ("alpha_c", "gamma_c", "s1") if kind == "PI" else ("rho", "sigma", "beta", "alpha")
    if all(k in cfg.options for k in keys):
        vals = [cfg.number(k) for k in keys]
        if kind == "PI":
            return FoldLimitSystem(*vals)
        return CuspLimitSystem(*vals, A=cfg.number("A", 0.0))
    seed, _, _, c = _seed_and_level(cfg)
    if kind == "PI":
        return fold_coefficients(cfg.model, c, seed)
    sys_ = cusp_coefficients(cfg.model, None, seed)
    return sys_.with_offset(sys_.offset_for(cfg.number("A", 0.0)))


def cmd_painleve(cfg, out, rng):
    kind = cfg.get("kind", "PI").upper()
    if kind not in ("PI", "PII"):
        raise ConfigError("kind must be PI or PII", cfg._line("kind"))
    sys_ = _limit_system(cfg, kind)
    init = cfg.vector("init", 3, (0.0, 0.0, -5.0))
    z_end = cfg.number("z_end", 5.0)
    tol = cfg.number("tol", 1e-10)
    n = cfg.integer("samples", 0)
    z_eval = np.linspace(init[2], z_end, n) if n > 1 else None
    xdot = cfg.get("xdot_constant", "rho")
    if kind == "PI":
        traj = integrate_painleve_i(sys_, init, z_end, tol, z_eval=z_eval)
    else:
        traj = integrate_painleve_ii(sys_, init, z_end, tol, xdot_constant=xdot, z_eval=z_eval)
    out.csv("trajectory.csv", ["z", "X", "Y"], np.column_stack([traj.z, traj.states]))
    try:
        std = to_standard_form(sys_, xdot).to_dict() if kind == "PII" else \
            to_standard_form(sys_).to_dict()
    except E.DegenerateCoefficients as exc:
        std = {"error": str(exc)}
    out.json("report.json", {"command": "painleve", "kind": kind, "system": sys_.to_dict(),
                             "standard_form": std, **traj.pole_report()})


def _verify(cfg, out, rng, kind):
    seed, h_s, rel, c = _seed_and_level(cfg)
    eps = cfg.vector("epsilons", None, (1e-2, 1e-3, 1e-4))
    window = cfg.vector("z_window", 2, (-1.0, 1.0))
    default_init = (math.sqrt(1 / 3), 0.0) if kind == "Fold" else (1.0, 0.0)
    init = cfg.vector("init", 2, default_init)
    res = convergence_study(cfg.model, c, eps, window, init, kind=kind, seed=seed,
                            h_factor=cfg.number("h_factor", 1.0), tol=cfg.number("tol", 1e-12),
                            xdot_constant=cfg.get("xdot_constant", "rho"),
                            beta_variant=cfg.get("beta_variant", "a2v"),
                            level_offset=cfg.number("level_offset", 0.0))
    out.csv("study.csv", ["epsilon", "r", "sup_dev", "q_fit"], res.rows)
    out.json("report.json", {"command": f"verify-{kind.lower()}", "level_offset_c": rel,
                             "H_seed": h_s, **res.manifest})


def cmd_verify_fold(cfg, out, rng):
    _verify(cfg, out, rng, "Fold")


def cmd_verify_cusp(cfg, out, rng):
    _verify(cfg, out, rng, "Cusp")


def cmd_form_check(cfg, out, rng):
    eps_list = cfg.vector("epsilons", None, (1e-2, 1e-3, 1e-4))
    if "point" in cfg.options:
        pts = np.array([cfg.vector("point", 4)])
    else:
        pts = random_sm_points(cfg.model, cfg.integer("n_points", 20), rng,
                               center=cfg.vector("center", 4, (0.0, 0.0, 0.0, 0.0)),
                               radius=cfg.number("radius", 0.5))
    reports = []
    for p in pts:
        for e in eps_list:
            rep = form_determinants(cfg.model, p, e)
            reports.append({"point": list(p), **rep.to_dict()})
    f0_err = max(abs(r["f"][0] - 1.0) for r in reports)
    out.json("report.json", {"command": "form-check", "reports": reports,
                             "max_f0_error": f0_err,
                             "all_det_D_nonzero": all(r["det_D"] != 0 for r in reports)})


HANDLERS = {"analyze": cmd_analyze, "integrate": cmd_integrate,
            "trace-singular": cmd_trace_singular, "reduce": cmd_reduce,
            "painleve": cmd_painleve, "verify-fold": cmd_verify_fold,
            "verify-cusp": cmd_verify_cusp, "form-check": cmd_form_check}


def run(config: RunConfig, seed: int = 0, output: Path | None = None) -> int:
    """Execute a parsed config; returns the exit status."""
    out = Outputs(Path(output) if output else config.output, config.digest())
    rng = np.random.default_rng(seed)
    try:
        HANDLERS[config.command](config, out, rng)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExpectationFailed, *PRECONDITION_ERRORS) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    out.commit()
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="slowfast",
                                 description="Slow-fast Hamiltonian analyses from a run file.")
    ap.add_argument("config", help="ini run file")
    ap.add_argument("--seed", type=int, default=0, help="RNG seed for randomized checks")
    ap.add_argument("--output", help="output directory (overrides run.output)")
    args = ap.parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.seed, args.output)


__all__ = ["RunConfig", "run", "main", "ConfigError", "COMMANDS"]
