"""Command-line front end.

Every command reads one JSON config document and writes a table, either as
CSV with a header row or as a JSON mirror. Complex numbers in configs are
``[re, im]`` pairs (bare reals are accepted too); matrices are row-major.

Example config for ``symcost sweep``::

    {
      "group": {"kind": "cyclic", "d": 2, "charges": [0, 1]},
      "state": {"amplitudes": [[0.9486832980505138, 0], [0.31622776601683794, 0]]},
      "n": 10, "R_grid": [0.2, 0.4, 0.6, 0.8, 1.0], "trials": 30, "seed": 7
    }
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import Any

import numpy as np

from .core import DEFAULT_CAP, DensityOperator, ToleranceConfig, kron_power, pure_state
from .errors import (
    ConfigError,
    DimensionCapExceeded,
    NormalizationError,
    SymcostError,
)
from .group_rep import GroupRep, make_cyclic_rep, make_explicit_rep
from .measures import collective_ref_series, ref_closed_form, ref_variational
from .protocol import (
    chernoff_bound_trial,
    chernoff_ensemble_size,
    converse_audit,
    apply_ensemble,
    derive_seed,
    exhaustive_ensemble,
    rate_sweep,
    residual_asymmetry,
    sample_ensemble,
)
from .typicality import typical_operator_bound_holds, typical_projector, typical_set

log = logging.getLogger("symcost")

SEED_ENV = "SYMCOST_SEED"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CAP = 0, 2, 3, 4

_MISSING = object()


# ---------------------------------------------------------------------------
# Config parsing


def _get(cfg: dict, key: str, loc: str, default=_MISSING):
    if key in cfg:
        return cfg[key]
    if default is _MISSING:
        raise ConfigError("required field is missing", f"{loc}.{key}" if loc else key)
    return default


def _as_int(x, loc: str, minimum: int | None = None) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x:
        raise ConfigError(f"expected an integer, got {x!r}", loc)
    x = int(x)
    if minimum is not None and x < minimum:
        raise ConfigError(f"must be >= {minimum}", loc)
    return x


def _as_float(x, loc: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"expected a number, got {x!r}", loc)
    return float(x)


def parse_complex(x, loc: str) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ConfigError("complex entries must be [re, im] pairs", loc)
        return complex(_as_float(x[0], loc + "[0]"), _as_float(x[1], loc + "[1]"))
    return complex(_as_float(x, loc))


def parse_matrix(obj, loc: str, dim: int | None = None) -> np.ndarray:
    """Row-major matrix: a list of rows, or a flat list of dim*dim entries."""
    if not isinstance(obj, list) or not obj:
        raise ConfigError("expected a non-empty list", loc)
    nested = all(isinstance(row, list) and row and isinstance(row[0], list) for row in obj)
    if nested:
        rows = [[parse_complex(v, f"{loc}[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(obj)]
        if any(len(r) != len(rows) for r in rows):
            raise ConfigError("matrix must be square", loc)
        m = np.array(rows, dtype=complex)
    else:
        flat = [parse_complex(v, f"{loc}[{i}]") for i, v in enumerate(obj)]
        side = math.isqrt(len(flat))
        if side * side != len(flat):
            raise ConfigError(f"flat matrix has {len(flat)} entries, not a square number", loc)
        m = np.array(flat, dtype=complex).reshape(side, side)
    if dim is not None and m.shape[0] != dim:
        raise ConfigError(f"expected a {dim}x{dim} matrix, got {m.shape[0]}x{m.shape[0]}", loc)
    return m


def parse_tolerances(obj, loc: str = "tolerances") -> ToleranceConfig:
    if obj is None:
        return ToleranceConfig()
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", loc)
    kw = {}
    for key, value in obj.items():
        name = key[4:] if key.startswith("tau_") else key
        if name not in ("herm", "psd", "tr", "eig", "test"):
            raise ConfigError("unknown tolerance", f"{loc}.{key}")
        kw[name] = _as_float(value, f"{loc}.{key}")
    try:
        return ToleranceConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc), loc) from exc


def parse_group(obj, tol: ToleranceConfig, loc: str = "group") -> GroupRep:
    """Build a validated representation; table or unitarity defects become config errors."""
    try:
        return _parse_group(obj, tol, loc)
    except ConfigError:
        raise
    except SymcostError as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}", loc) from exc


def _parse_group(obj, tol: ToleranceConfig, loc: str) -> GroupRep:
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", loc)
    kind = _get(obj, "kind", loc)
    if kind == "cyclic":
        d = _as_int(_get(obj, "d", loc), f"{loc}.d", minimum=2)
        charges = _get(obj, "charges", loc, list(range(d)))
        if not isinstance(charges, list) or not charges:
            raise ConfigError("expected a non-empty list of integers", f"{loc}.charges")
        charges = [_as_int(c, f"{loc}.charges[{i}]") for i, c in enumerate(charges)]
        return make_cyclic_rep(d, charges, tol)
    if kind == "explicit":
        table = _get(obj, "mult_table", loc)
        if not isinstance(table, list):
            raise ConfigError("expected a list of rows", f"{loc}.mult_table")
        table = [[_as_int(v, f"{loc}.mult_table[{i}][{j}]") for j, v in enumerate(row)]
                 for i, row in enumerate(table)]
        us = _get(obj, "unitaries", loc)
        if not isinstance(us, list) or not us:
            raise ConfigError("expected a list of matrices", f"{loc}.unitaries")
        mats = [parse_matrix(u, f"{loc}.unitaries[{i}]") for i, u in enumerate(us)]
        if len({m.shape for m in mats}) != 1:
            raise ConfigError("unitaries have different dimensions", f"{loc}.unitaries")
        return make_explicit_rep(table, np.array(mats), tol)
    raise ConfigError(f"unknown group kind {kind!r}; expected 'cyclic' or 'explicit'", f"{loc}.kind")


def parse_state(obj, dim: int, tol: ToleranceConfig, loc: str = "state") -> np.ndarray:
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", loc)
    if "amplitudes" in obj:
        amps = obj["amplitudes"]
        if not isinstance(amps, list):
            raise ConfigError("expected a list of amplitudes", f"{loc}.amplitudes")
        psi = [parse_complex(a, f"{loc}.amplitudes[{i}]") for i, a in enumerate(amps)]
        if len(psi) != dim:
            raise ConfigError(f"expected {dim} amplitudes, got {len(psi)}", f"{loc}.amplitudes")
        try:
            return pure_state(psi, tol)
        except NormalizationError as exc:
            raise NormalizationError(f"{loc}.amplitudes: {exc}") from exc
    if "density" in obj:
        m = parse_matrix(obj["density"], f"{loc}.density", dim)
        try:
            return DensityOperator(m, tol).matrix
        except SymcostError as exc:
            raise type(exc)(f"{loc}.density: {exc}") from exc
    raise ConfigError("state needs 'amplitudes' or 'density'", loc)


class Context:
    """Parsed common parts of a config plus command-line overrides."""

    def __init__(self, cfg: dict, seed: int | None = None, cap: int | None = None, jobs: int = 1):
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object", "<root>")
        self.cfg = cfg
        self.tol = parse_tolerances(cfg.get("tolerances"))
        self.cap = cap if cap is not None else _as_int(cfg.get("cap", DEFAULT_CAP), "cap", minimum=1)
        if seed is None and os.environ.get(SEED_ENV):
            raw = os.environ[SEED_ENV]
            if not raw.isdigit():
                raise ConfigError(f"expected a non-negative integer, got {raw!r}", SEED_ENV)
            seed = int(raw)
        self.seed = seed if seed is not None else _as_int(cfg.get("seed", 0), "seed", minimum=0)
        self.jobs = jobs

    def rep(self) -> GroupRep:
        return parse_group(_get(self.cfg, "group", ""), self.tol)

    def state(self, rep: GroupRep) -> np.ndarray:
        return parse_state(_get(self.cfg, "state", ""), rep.dim, self.tol)

    def int(self, key, default=_MISSING, minimum=None) -> int:
        return _as_int(_get(self.cfg, key, "", default), key, minimum)

    def float(self, key, default=_MISSING) -> float:
        return _as_float(_get(self.cfg, key, "", default), key)


# ---------------------------------------------------------------------------
# Commands; each returns (columns, rows)


def cmd_ref(ctx: Context):
    rep = ctx.rep()
    rho = ctx.state(rep)
    res = ref_variational(rep, rho, max_iter=ctx.int("max_iter", 500, 1), tol=ctx.float("tol", 1e-4), tols=ctx.tol)
    cols = ["closed_form", "variational", "gap", "minimizer_twirl_distance", "iterations", "converged"]
    row = {
        "closed_form": res.closed_form, "variational": res.variational, "gap": res.gap,
        "minimizer_twirl_distance": res.minimizer_twirl_distance, "iterations": res.iterations,
        "converged": int(res.converged),
    }
    return cols, [row]


def cmd_sweep(ctx: Context):
    rep = ctx.rep()
    rho = ctx.state(rep)
    n = ctx.int("n", minimum=1)
    grid = _get(ctx.cfg, "R_grid", "")
    if not isinstance(grid, list) or not grid:
        raise ConfigError("R_grid must be a non-empty list of rates", "R_grid")
    grid = [_as_float(r, f"R_grid[{i}]") for i, r in enumerate(grid)]
    if any(r < 0 for r in grid):
        raise ConfigError("rates must be >= 0", "R_grid")
    trials = ctx.int("trials", minimum=0)
    cols = ["kind", "R", "trial", "K", "residual", "seed", "D_G"]
    if trials == 0:
        log.warning("trials=0: nothing to sample, emitting an empty table")
        return cols, []
    try:
        reports = rate_sweep(rep, rho, n, grid, trials, ctx.seed, ctx.cap, ctx.jobs, ctx.tol)
    except DimensionCapExceeded as exc:
        raise DimensionCapExceeded(f"n={n}: {exc}") from exc
    rows = []
    for rpt in reports:
        for t, (res, s) in enumerate(zip(rpt.residuals, rpt.trial_seeds)):
            rows.append({"kind": "trial", "R": rpt.R, "trial": t, "K": rpt.K, "residual": res, "seed": s})
    for rpt in reports:
        rows.append({"kind": "median", "R": rpt.R, "K": rpt.K, "residual": rpt.median, "seed": ctx.seed})
    if ctx.cfg.get("include_exhaustive", False):
        ens = exhaustive_ensemble(rep, n, ctx.cap)
        res = residual_asymmetry(rep, apply_ensemble(ens, kron_power(rho, n)), n, ctx.tol)
        rows.append({"kind": "exhaustive", "R": math.log2(ens.K) / n, "K": ens.K, "residual": res})
    rows.append({"kind": "reference", "D_G": ref_closed_form(rep, rho, ctx.tol)})
    return cols, rows


def cmd_audit(ctx: Context):
    rep = ctx.rep()
    rho = ctx.state(rep)
    n = ctx.int("n", minimum=1)
    spec = ctx.cfg.get("ensemble", {"kind": "exhaustive"})
    if not isinstance(spec, dict):
        raise ConfigError("expected an object", "ensemble")
    kind = spec.get("kind", "exhaustive")
    if kind == "exhaustive":
        ensembles = [(ctx.seed, exhaustive_ensemble(rep, n, ctx.cap))]
    elif kind == "random":
        rate = _as_float(_get(spec, "R", "ensemble"), "ensemble.R")
        count = _as_int(spec.get("count", 1), "ensemble.count", minimum=1)
        seeds = [derive_seed(ctx.seed, i) for i in range(count)]
        ensembles = [(s, sample_ensemble(rep, n, rate, s, ctx.cap)) for s in seeds]
    else:
        raise ConfigError(f"unknown ensemble kind {kind!r}", "ensemble.kind")
    cols = ["seed", "n", "K", "rate", "S_out", "S_twirl_out", "S_in", "eps_achieved", "rate_lower_bound",
            "concavity_rhs", "n_S_twirl", "concavity_holds", "term_identity_holds", "entropy_gain_holds",
            "converse_holds"]
    rows = []
    for s, ens in ensembles:
        a = converse_audit(rep, rho, ens, ctx.cap, tol=ctx.tol)
        rows.append({
            "seed": s, "n": a.n, "K": a.K, "rate": a.rate, "S_out": a.S_out, "S_twirl_out": a.S_twirl_out,
            "S_in": a.S_in, "eps_achieved": a.eps_achieved, "rate_lower_bound": a.rate_lower_bound,
            "concavity_rhs": a.concavity_rhs, "n_S_twirl": a.n_S_twirl,
            "concavity_holds": int(a.concavity_holds), "term_identity_holds": int(a.term_identity_holds),
            "entropy_gain_holds": int(a.entropy_gain_holds),
            "converse_holds": int(a.converse_holds),
        })
    return cols, rows


def cmd_chernoff(ctx: Context):
    rep = ctx.rep()
    rho = ctx.state(rep)
    n = ctx.int("n", minimum=1)
    delta = ctx.float("delta")
    eps = ctx.float("eps", 0.1)
    if "K" in ctx.cfg:
        k = ctx.int("K", minimum=1)
    else:
        k = chernoff_ensemble_size(ref_closed_form(rep, rho, ctx.tol), n, delta)
    r = chernoff_bound_trial(rep, rho, n, delta, k, ctx.int("num_batches", 200, 1), eps, ctx.seed,
                             ctx.cap, ctx.jobs, ctx.tol)
    cols = ["n", "delta", "eps", "K", "num_batches", "failures", "empirical_failure_rate", "bound",
            "binomial_sigma", "within_envelope", "lambda_min", "lambda_lower_bound", "trace_X", "trace_Y",
            "typical_mass", "twirled_typical_mass", "typical_rank", "twirled_typical_rank", "retained_rank",
            "lambda_bound_holds", "trace_bounds_hold", "typicality_premise_holds", "D_G", "seed"]
    row = {c: getattr(r, c) for c in cols if hasattr(r, c)}
    for flag in ("within_envelope", "lambda_bound_holds", "trace_bounds_hold", "typicality_premise_holds"):
        row[flag] = int(getattr(r, flag))
    row["D_G"] = r.ref
    return cols, [row]


def cmd_typical(ctx: Context):
    n = ctx.int("n", minimum=1)
    delta = ctx.float("delta")
    rho = None
    if "probs" in ctx.cfg:
        probs = ctx.cfg["probs"]
        if not isinstance(probs, list) or not probs:
            raise ConfigError("expected a non-empty list", "probs")
        probs = [_as_float(p, f"probs[{i}]") for i, p in enumerate(probs)]
        try:
            ts = typical_set(probs, n, delta, ctx.tol)
        except NormalizationError as exc:
            raise NormalizationError(f"probs: {exc}") from exc
    else:
        rep = ctx.rep()
        rho = ctx.state(rep)
        proj = typical_projector(rho, n, delta, ctx.cap, materialize=rep.dim ** n <= ctx.cap, tol=ctx.tol)
        ts = proj.index_set
    cols = ["n", "delta", "entropy", "mass", "cardinality", "log2_cardinality_bound", "cardinality_bound_holds",
            "operator_bound_holds"]
    row = {"n": n, "delta": delta, "entropy": ts.entropy, "mass": ts.total_mass, "cardinality": ts.cardinality,
           "log2_cardinality_bound": ts.cardinality_bound_log2,
           "cardinality_bound_holds": int(ts.cardinality_bound_holds)}
    if rho is not None and proj.matrix is not None:
        row["operator_bound_holds"] = int(typical_operator_bound_holds(proj))
    return cols, [row]


def cmd_collective(ctx: Context):
    rep = ctx.rep()
    rho = ctx.state(rep)
    n_max = ctx.int("n_max", minimum=1)
    series = collective_ref_series(rep, rho, n_max, ctx.cap, ctx.tol)
    cols = ["n", "collective_per_copy", "product_per_copy"]
    rows = [{"n": n, "collective_per_copy": c, "product_per_copy": p}
            for n, c, p in zip(series.n_values, series.per_copy_values, series.product_values)]
    return cols, rows


COMMANDS = {
    "ref": cmd_ref,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
    "chernoff": cmd_chernoff,
    "typical": cmd_typical,
    "collective": cmd_collective,
}


# ---------------------------------------------------------------------------
# Serialization


def format_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".15g")
    return str(v)


def _structured_value(v: Any):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_, int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(format(float(v), ".15g"))
        return f if math.isfinite(f) else format_value(f)
    return v


def render_table(command: str, cols: list, rows: list, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in cols])
        return buf.getvalue()
    if fmt == "structured":
        doc = {"command": command, "columns": cols,
               "rows": [{c: _structured_value(row.get(c)) for c in cols} for row in rows]}
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path_or_text: str, is_text: bool = False):
    """Read a CSV table written by this CLI back into (columns, rows)."""
    if is_text:
        text = path_or_text
    else:
        with open(path_or_text, newline="") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    cols = next(reader)
    rows = [{c: parse_cell(x) for c, x in zip(cols, line)} for line in reader]
    return cols, rows


# ---------------------------------------------------------------------------
# Entry point


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON experiment config")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, help=f"override the config seed (else ${SEED_ENV}, else config)")
    common.add_argument("--cap", type=int, help="maximum Hilbert-space dimension (default 4096)")
    common.add_argument("--format", choices=["csv", "structured"], default="csv")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for Monte Carlo trials")
    parser = argparse.ArgumentParser(prog="symcost", description="Symmetrization cost experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ref": "relative entropy of frameness, closed form vs variational",
        "sweep": "residual asymmetry of random ensembles across rates",
        "audit": "converse entropy-chain audit of an ensemble",
        "chernoff": "operator Chernoff construction and failure-rate trial",
        "typical": "typical set mass and cardinality",
        "collective": "collective vs product per-copy asymmetry series",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        ctx = Context(cfg, seed=args.seed, cap=args.cap, jobs=max(1, args.jobs))
        cols, rows = COMMANDS[args.command](ctx)
    except (ConfigError, NormalizationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionCapExceeded as exc:
        print(f"dimension cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except SymcostError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render_table(args.command, cols, rows, args.format)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "ref" and not rows[0]["converged"]:
        print("variational solver did not converge", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
