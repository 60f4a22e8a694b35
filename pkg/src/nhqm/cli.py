"""
Command-line interface: ``nhqm spectrum | verify | sweep | evolve``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification pattern mismatch (report still written).
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import re
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .canonical import (
    EXPECTED_PATTERN,
    canonical_form_residual,
    canonical_pair,
    commutator_residual,
    hermiticity_table,
    similarity_transform,
    template_matrix,
)
from .errors import InvalidArgument, NHQMError, ParseError, UnsupportedInBasis
from .evolution import spectral_propagate, two_mode_state
from .expr import evaluate, is_constant
from .hilbert import (
    InnerProduct,
    TransformMap,
    diagonal_map,
    gram_matrix,
    metric_from_spectrum,
    orthonormality_defect,
    pseudo_hermiticity_residual,
    unitarizing_map,
)
from .models import ModelSpec, custom_model, model_by_name
from .numerics import BasisSpec, GridSpec, Spectrum, eig_dense, make_grid
from .operators import MatrixRep, assemble, lowest_resolved, position_momentum_matrices, resolved_modes
from .parser import parse_scalar

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4

SWEEP_HEADER = "nu,index,re,im,real_flag"
EVOLVE_HEADER = "t,l2_norm,h_norm"

# expansion coefficients below this fraction of the largest (or below the
# rounding level implied by the eigenbasis condition) are treated as noise
COEFFICIENT_FLOOR = 1e-10

# every option: dest -> (default, converter); config keys use the same names
OPTIONS = {
    "model": (None, str),
    "expr": (None, str),
    "omega": (1.0, float),
    "nu": (None, str),
    "grid": (None, str),
    "basis": (None, int),
    "quad": (None, int),
    "basis_omega": (1.0, float),
    "count": (10, int),
    "transform": (None, str),
    "assembly": ("algebraic", str),
    "modes": (8, int),
    "tmax": (10.0, float),
    "steps": (200, int),
    "metric": ("auto", str),
    "format": (None, str),
    "output": (None, str),
    "precision": (12, int),
    "jobs": (1, int),
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# formatting

def _round(v: float, digits: int):
    v = float(v)
    if not math.isfinite(v):
        return None
    if v == 0:
        return 0.0
    return float(f"{v:.{digits}g}")


def _fmt(v: float, digits: int) -> str:
    r = _round(v, digits)
    return "nan" if r is None else f"{r:.{digits}g}"


def _flag(b) -> str:
    return "true" if b else "false"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# configuration

def _parse_pair(text: str, what: str) -> tuple[float, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{what} must look like L:N, got {text!r}")
    try:
        L, N = float(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad {what} {text!r}") from exc
    return L, N


def parse_range(text: str) -> list[float]:
    """Inclusive range ``a:b:step`` with a <= b and step > 0."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must look like start:stop:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}") from exc
    if not all(math.isfinite(v) for v in (a, b, step)):
        raise ConfigError(f"bad range {text!r}")
    if b < a:
        raise ConfigError(f"range {text!r} runs backwards")
    if a == b:
        return [a]
    if not step > 0:
        raise ConfigError(f"range step must be positive in {text!r}")
    n = int(math.floor((b - a) / step + 1e-9))
    return [round(a + k * step, 12) for k in range(n + 1)]


def _read_config(path: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            dest = key.replace("-", "_")
            if dest not in OPTIONS:
                raise ConfigError(f"unknown config key {key!r} in section [{section}]")
            out[dest] = value
    return out


def resolve_options(args: argparse.Namespace) -> dict:
    """Flags win over config values, which win over defaults."""
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    opts = {}
    for dest, (default, conv) in OPTIONS.items():
        flag = getattr(args, dest, None)
        if flag is not None:
            opts[dest] = flag
        elif dest in cfg:
            try:
                opts[dest] = conv(cfg[dest])
            except ValueError as exc:
                raise ConfigError(f"bad value for {dest}: {cfg[dest]!r}") from exc
        else:
            opts[dest] = default
    if opts["model"] and opts["expr"]:
        raise ConfigError("give either a model name or an expression, not both")
    if not opts["model"] and not opts["expr"]:
        raise ConfigError("a model name (--model) or an expression (--expr) is required")
    if opts["grid"] and opts["basis"]:
        raise ConfigError("give either --grid or --basis, not both")
    if opts["precision"] < 1 or opts["precision"] > 17:
        raise ConfigError("precision must lie in 1..17")
    for key in ("count", "modes", "steps", "jobs"):
        if opts[key] < 1:
            raise ConfigError(f"{key} must be positive")
    if opts["assembly"] not in ("algebraic", "stencil"):
        raise ConfigError("assembly must be 'algebraic' or 'stencil'")
    return opts


def _single_nu(opts) -> float:
    if opts["nu"] is None:
        return 0.0
    try:
        return float(opts["nu"])
    except ValueError as exc:
        raise ConfigError(f"--nu must be a number here, got {opts['nu']!r}") from exc


def build_model(opts, nu: float | None = None) -> ModelSpec:
    if opts["expr"]:
        return custom_model(opts["expr"])
    return model_by_name(opts["model"], opts["omega"], _single_nu(opts) if nu is None else nu)


def build_rep(opts, model: ModelSpec):
    if opts["grid"]:
        L, N = _parse_pair(opts["grid"], "--grid")
        return make_grid(L, N)
    if opts["basis"]:
        if opts["basis"] < 1:
            raise ConfigError("basis size must be positive")
        if opts["basis_omega"] <= 0:
            raise ConfigError("basis frequency must be positive")
        return BasisSpec(opts["basis"], opts["basis_omega"], opts["quad"])
    rep = model.recommended_rep
    if isinstance(rep, BasisSpec) and opts["quad"]:
        rep = BasisSpec(rep.size, rep.frequency, opts["quad"])
    return rep


def _rep_json(rep, digits):
    if isinstance(rep, GridSpec):
        return {
            "kind": "grid",
            "half_width": _round(rep.half_width, digits),
            "half_points": rep.half_points,
            "spacing": _round(rep.spacing, digits),
            "size": rep.size,
        }
    return {"kind": "basis", "size": rep.size, "frequency": _round(rep.frequency, digits),
            "quadrature_points": rep.quad}


def _model_json(model: ModelSpec, digits):
    return {
        "name": model.name,
        "expression": model.text,
        "parameters": {k: _round(v, digits) for k, v in sorted(model.parameters.items())},
    }


def _header(command, model, rep, digits):
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "model": _model_json(model, digits),
        "representation": _rep_json(rep, digits),
    }


def _eigen_rows(s: Spectrum, digits):
    return [
        {
            "index": i,
            "re": _round(E.real, digits),
            "im": _round(E.imag, digits),
            "real_flag": bool(flag),
            "residual": _round(r, digits),
        }
        for i, (E, flag, r) in enumerate(zip(s.eigenvalues, s.real_mask, s.residuals))
    ]


def _solve(model: ModelSpec, rep) -> tuple[MatrixRep, Spectrum]:
    H = assemble(model.expr, rep)
    return H, eig_dense(H.matrix)


# ---------------------------------------------------------------------------
# commands

def cmd_spectrum(opts) -> tuple[int, str, str | None]:
    model = build_model(opts)
    rep = build_rep(opts, model)
    d = opts["precision"]
    _, s = _solve(model, rep)
    low = lowest_resolved(s, rep, opts["count"])
    n_real = int(np.count_nonzero(low.real_mask))
    if (opts["format"] or "json") == "csv":
        lines = ["index,re,im,real_flag,residual"]
        for row in _eigen_rows(low, d):
            lines.append(",".join([str(row["index"]), _fmt(row["re"], d), _fmt(row["im"], d),
                                   _flag(row["real_flag"]), _fmt(row["residual"], d)]))
        return EXIT_OK, "\n".join(lines) + "\n", None
    out = _header("spectrum", model, rep, d)
    out.update({
        "eigenvalues": _eigen_rows(low, d),
        "basis_condition": _round(s.basis_condition, d),
        "ill_conditioned": s.ill_conditioned,
        "unresolved_discarded": int(len(s) - len(resolved_modes(s, rep))),
        "realness_summary": {"count_real": n_real, "count_complex": len(low) - n_real},
    })
    return EXIT_OK, _dump(out), None


def _transform_for(opts, model: ModelSpec, rep, H: MatrixRep) -> TransformMap:
    text = opts["transform"] or model.transform
    if text is None:
        raise ConfigError("this model declares no transform; pass --transform EXPR or --transform metric")
    if text.strip() == "metric":
        return unitarizing_map(metric_from_spectrum(eig_dense(H.matrix)))
    node = parse_scalar(text)
    if isinstance(rep, GridSpec):
        return diagonal_map(node, rep)
    if not is_constant(node):
        raise ConfigError("non-constant diagonal transforms need a grid representation")
    c = complex(evaluate(node, 0.0))
    if c == 0:
        raise ConfigError("transform is identically zero")
    eye = np.eye(rep.size, dtype=complex)
    return TransformMap(c * eye, eye / c, 1.0, text)


def _is_l2_unitary(T: TransformMap) -> bool:
    """True if T^H T is a multiple of the identity (T unitary up to scale)."""
    TT = T.matrix.conj().T @ T.matrix
    c = np.trace(TT).real / TT.shape[0]
    return bool(np.max(np.abs(TT - c * np.eye(TT.shape[0]))) <= 1e-12 * abs(c))


def cmd_verify(opts) -> tuple[int, str, str | None]:
    model = build_model(opts)
    rep = build_rep(opts, model)
    d = opts["precision"]
    route = opts["assembly"]
    H_direct = assemble(model.expr, rep)
    T = _transform_for(opts, model, rep, H_direct)
    x, p = position_momentum_matrices(rep)
    pair = canonical_pair(T, rep, route="algebraic" if route == "algebraic" else "grid")
    base = canonical_pair(TransformMap.identity(rep.size), rep)
    if route == "algebraic" and model.template is not None:
        Hhat = x.with_matrix(template_matrix(model.template, base), "template(x, p)")
        H = similarity_transform(Hhat, T)
    else:
        H = H_direct
        if model.template is not None:
            Hhat = assemble(model.template, rep)
        else:
            Hhat = H.with_matrix(T.matrix @ H.matrix @ T.inverse, "T H T^-1")
    G_flat = gram_matrix(InnerProduct.flat(), rep)
    ip_flat = InnerProduct.flat()
    ip_h = InnerProduct.from_metric(T.metric(G_flat), "T^H G T")
    tol_route = "algebraic" if route == "algebraic" else "grid"
    table = hermiticity_table(H, pair.xc, pair.pc, Hhat, x, p, ip_flat, ip_h, route=tol_route)
    unitary = _is_l2_unitary(T)
    expected = {k: (True, True) for k in EXPECTED_PATTERN} if unitary else EXPECTED_PATTERN
    mismatches = table.mismatches(expected)

    modes = min(opts["modes"], rep.size // 2)
    s_direct = eig_dense(H_direct.matrix)
    low = lowest_resolved(s_direct, rep, modes)
    k = min(modes, len(low))
    out = _header("verify", model, rep, d)
    out.update({
        "assembly": route,
        "transform": {"label": T.label, "condition": _round(T.condition, d), "l2_unitary": unitary},
        "tolerance": table.tolerance,
        "table1": [
            {
                "operator": r.label,
                "residual_L2": _round(r.residual_l2, d),
                "residual_H": _round(r.residual_h, d),
                "verdict_L2": "hermitian" if r.hermitian_l2 else "non-hermitian",
                "verdict_H": "hermitian" if r.hermitian_h else "non-hermitian",
                "expected": [None if e is None else ("hermitian" if e else "non-hermitian")
                             for e in expected[r.label]],
            }
            for r in table.rows
        ],
        "commutator_residual": _round(commutator_residual(pair, modes), d),
        "canonical_form_residual": (
            _round(canonical_form_residual(H, pair, model.template), d) if model.template is not None else None
        ),
        "pseudo_hermiticity_residual": _round(pseudo_hermiticity_residual(H, ip_h), d),
        "orthonormality_defect": {
            "count": k,
            "eigenvectors_from": "direct assembly",
            "H": _round(orthonormality_defect(low, ip_h, k, rep), d),
            "L2": _round(orthonormality_defect(low, ip_flat, k, rep), d),
        },
        "pattern_matches": not mismatches,
        "mismatches": mismatches,
        "footer": table.footer,
    })
    return (EXIT_MISMATCH if mismatches else EXIT_OK), _dump(out), None


def _sweep_point(opts, nu: float):
    model = build_model(opts, nu)
    rep = build_rep(opts, model)
    _, s = _solve(model, rep)
    return model, rep, lowest_resolved(s, rep, opts["count"])


def cmd_sweep(opts) -> tuple[int, str, str | None]:
    if opts["expr"] or opts["model"] != "bender":
        raise ConfigError("sweep varies nu and needs --model bender")
    if opts["nu"] is None:
        raise ConfigError("sweep needs --nu start:stop:step")
    values = parse_range(opts["nu"])
    for v in values:
        if not v > -2:
            raise ConfigError(f"nu = {v} is outside the model's range (nu > -2)")
    d = opts["precision"]
    with ThreadPoolExecutor(max_workers=opts["jobs"]) as pool:
        results = list(pool.map(lambda v: _sweep_point(opts, v), values))
    if (opts["format"] or "csv") == "csv":
        lines = [SWEEP_HEADER]
        for v, (_, _, low) in zip(values, results):
            for i, (E, flag) in enumerate(zip(low.eigenvalues, low.real_mask)):
                lines.append(",".join([_fmt(v, d), str(i), _fmt(E.real, d), _fmt(E.imag, d), _flag(flag)]))
        return EXIT_OK, "\n".join(lines) + "\n", None
    model, rep, _ = results[0]
    out = _header("sweep", model, rep, d)
    out["model"]["parameters"].pop("nu", None)
    out["points"] = [{"nu": _round(v, d), "eigenvalues": _eigen_rows(low, d)} for v, (_, _, low) in zip(values, results)]
    return EXIT_OK, _dump(out), None


def cmd_evolve(opts) -> tuple[int, str, str | None]:
    model = build_model(opts)
    rep = build_rep(opts, model)
    d = opts["precision"]
    if not opts["tmax"] >= 0:
        raise ConfigError("tmax must be non-negative")
    _, s = _solve(model, rep)
    sub = s.subset(resolved_modes(s, rep))
    psi0, (a, b) = two_mode_state(sub)
    metric = opts["metric"].strip()
    if metric == "auto":
        ip = InnerProduct.eigenbasis_delta(sub)
    elif metric == "flat":
        ip = InnerProduct.flat()
    else:
        if not isinstance(rep, GridSpec):
            raise ConfigError("weight-function metrics need a grid representation")
        ip = InnerProduct.weighted(metric)
    times = np.linspace(0.0, opts["tmax"], opts["steps"] + 1)
    floor = max(COEFFICIENT_FLOOR, 10 * np.finfo(float).eps * s.basis_condition)
    res = spectral_propagate(sub, psi0, times, ip, rep, coefficient_floor=floor)
    buf = io.StringIO()
    buf.write(EVOLVE_HEADER + "\n")
    for t, l2, h in zip(res.times, res.l2_norms, res.h_norms):
        buf.write(f"{_fmt(t, d)},{_fmt(l2, d)},{_fmt(h, d)}\n")
    summary = _header("evolve", model, rep, d)
    summary.update({
        "metric": metric,
        "modes": [a, b],
        "energies": [[_round(sub.eigenvalues[i].real, d), _round(sub.eigenvalues[i].imag, d)] for i in (a, b)],
        "tmax": _round(opts["tmax"], d),
        "steps": opts["steps"],
        "h_norm_drift": _round(res.drift(), d),
        "l2_norm_range": _round(res.relative_range(), d),
        "complex_spectrum": res.complex_spectrum,
        "discarded_fraction": _round(res.discarded_fraction, d),
    })
    return EXIT_OK, buf.getvalue(), _dump(summary)


COMMANDS = {"spectrum": cmd_spectrum, "verify": cmd_verify, "sweep": cmd_sweep, "evolve": cmd_evolve}


# ---------------------------------------------------------------------------
# argument parsing and dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nhqm",
        description="Spectra, metrics and canonical-pair checks for non-Hermitian Hamiltonians.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file; keys mirror the long flags")
        src = p.add_argument_group("model")
        src.add_argument("--model", help="paper-example, harmonic or bender")
        src.add_argument("--expr", help="operator text, e.g. 'p^2 + x^4'")
        src.add_argument("--omega", type=float)
        src.add_argument("--nu", help="bender exponent (sweep: start:stop:step)")
        r = p.add_argument_group("representation")
        r.add_argument("--grid", help="L:N  half-offset grid on (-L, L) with 2N nodes")
        r.add_argument("--basis", type=int, help="oscillator basis size M")
        r.add_argument("--quad", type=int, help="Gauss-Hermite points (default 2M)")
        r.add_argument("--basis-omega", dest="basis_omega", type=float)
        t = p.add_argument_group("task")
        t.add_argument("--count", type=int, help="eigenvalues to report")
        if name == "verify":
            t.add_argument("--transform", help="diagonal map expression, or 'metric'")
            t.add_argument("--assembly", choices=["algebraic", "stencil"])
            t.add_argument("--modes", type=int, help="probe vectors / eigenvectors checked")
        if name == "sweep":
            t.add_argument("--jobs", type=int, help="parallel sweep points")
        if name == "evolve":
            t.add_argument("--tmax", type=float)
            t.add_argument("--steps", type=int)
            t.add_argument("--metric", help="auto, flat or a weight expression")
        o = p.add_argument_group("output")
        o.add_argument("--format", choices=["json", "csv"])
        o.add_argument("--output", help="write the main result here instead of stdout")
        o.add_argument("--precision", type=int, help="significant digits (default 12)")
    return parser


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--nu -1:1:0.25`` into ``--nu=-1:1:0.25`` so argparse accepts it."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if (a.startswith("--") and "=" not in a and i + 1 < len(argv)
                and _NEGATIVE_VALUE.match(argv[i + 1])):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        opts = resolve_options(args)
        with warnings.catch_warnings():
            # conditioning problems are reported in the output itself
            warnings.simplefilter("ignore", RuntimeWarning)
            code, main_text, side_text = COMMANDS[args.command](opts)
    except (ConfigError, InvalidArgument, ParseError, UnsupportedInBasis) as exc:
        print(f"nhqm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NHQMError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"nhqm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        if opts["output"]:
            _write(opts["output"], main_text)
            if side_text is not None:
                sys.stdout.write(side_text)
        else:
            sys.stdout.write(main_text)
            if side_text is not None:
                sys.stderr.write(side_text)
    except OSError as exc:
        print(f"nhqm: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


__all__ = ["main", "build_parser", "parse_range", "resolve_options"]
