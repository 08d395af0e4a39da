"""Command-line front end.

Every subcommand is a pure function of its configuration and master seed.
Parameters come from flags and, optionally, a flat ``key = value`` config
file (``--config``); flags win over the file.  Config file grammar::

    # comment
    N = 200
    alpha = 1.5
    b = 0.25

Keys are the long flag names with dashes or underscores (``c_sel`` or
``c-sel``).  Unknown keys are rejected.

Exit codes: 0 ok, 1 configuration error, 2 numerical failure, 3 I/O error.
Errors go to stderr as one line: ``error code=<n> kind=<kind> message=<text>``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .asp import ASPChain, BSVariantChain, pi_N_dual, stationary_distribution
from .duality import duality_report
from .errors import ConfigurationError, LambdaASPError
from .forward import build_frequency_generator, fixation_prob_exact, fixation_prob_mc
from .lyapunov import sandwich_report
from .model import ModelParams, asymptotic_pi, bs_heuristic_pi
from .offspring import build_offspring_law, limit_pk

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
OUTPUT_DIR_ENV = "LAMBDA_ASP_OUTPUT_DIR"
EXACT_FORWARD_MAX_N = 200

SUBCOMMANDS = (
    "offspring",
    "asp-stationary",
    "fixation-exact",
    "fixation-mc",
    "duality-check",
    "lyapunov-check",
    "sweep",
    "bs-heuristic",
    "plot-stub",
)

SWEEP_COLUMNS = [
    "index", "N", "alpha", "b", "s_N", "d_N", "pi_dual", "pi_asymptotic", "ratio",
    "pi_exact_forward", "abs_diff", "error",
]
FIXATION_COLUMNS = ["N", "alpha", "b", "s_N", "x0", "method", "pi_hat", "std_error", "seed"]

# key -> parser of the raw string; these are also the accepted config-file keys
_KEYS = {
    "N": str,
    "alpha": str,
    "b": str,
    "b_rel": str,
    "s": str,
    "c_sel": float,
    "seed": int,
    "format": str,
    "output": str,
    "workers": int,
    "replicates": int,
    "x0": int,
    "k": str,
    "n": str,
    "t": str,
    "beta1": float,
    "beta2": float,
    "N_geom": str,
    "input": str,
}


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


@dataclass
class RunConfig:
    subcommand: str
    values: dict
    seed: int = 0
    fmt: str = "csv"
    output: str | None = None
    workers: int = 1
    grid: list = field(default_factory=list)  # list of ModelParams

    def echo(self) -> dict:
        return {k: self.values[k] for k in sorted(self.values)}


# ---------------------------------------------------------------- parsing


def _norm_key(key: str) -> str:
    return key.strip().replace("-", "_")


def read_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(EXIT_CONFIG, "config", f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = _norm_key(key)
        if key not in _KEYS:
            raise CliError(EXIT_CONFIG, "config", f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _float_list(text: str, name: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "config", f"{name}: not a number list: {text!r}") from exc
    if not vals:
        raise CliError(EXIT_CONFIG, "config", f"{name}: empty list")
    return vals


def _int_list(text: str, name: str) -> list[int]:
    vals = _float_list(text, name)
    if any(v != int(v) for v in vals):
        raise CliError(EXIT_CONFIG, "config", f"{name}: integers expected, got {text!r}")
    return [int(v) for v in vals]


def _geom_grid(text: str) -> list[int]:
    """``start:factor:count`` -> [start, start*factor, ...] (rounded)."""
    try:
        start, factor, count = text.split(":")
        start, factor, count = float(start), float(factor), int(count)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "config", f"N_geom must be start:factor:count, got {text!r}") from exc
    if count < 1 or factor <= 0:
        raise CliError(EXIT_CONFIG, "config", "N_geom needs count >= 1 and factor > 0")
    return [int(round(start * factor**i)) for i in range(count)]


class _Parser(argparse.ArgumentParser):
    """argparse that reports problems as a CliError instead of printing usage."""

    def error(self, message):
        raise CliError(EXIT_CONFIG, "config", message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lambda-asp",
        description="Fixation probabilities under Beta-coalescent reproduction with selection.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    sub.required = True
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value parameter file")
        p.add_argument("--N", dest="N", help="population size (sweep: comma list)")
        p.add_argument("--alpha", help="Beta-coalescent index in (1, 2) (sweep: comma list)")
        p.add_argument("--b", help="selection exponent, s_N = c_sel N^-b (sweep: comma list)")
        p.add_argument("--b-rel", dest="b_rel", help="b as a fraction of alpha - 1")
        p.add_argument("--s", help="explicit s_N (overrides b; 0 for the neutral model)")
        p.add_argument("--c-sel", dest="c_sel", type=float)
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--output", help="output file (default: stdout or $%s)" % OUTPUT_DIR_ENV)
        p.add_argument("--workers", type=int, help="worker processes for sweep")
        p.add_argument("--replicates", type=int)
        p.add_argument("--x0", type=int, help="initial wildtype count (default N-1)")
        p.add_argument("--k", help="duality: initial forward states, comma list")
        p.add_argument("--n", help="duality: initial ASP states, comma list")
        p.add_argument("--t", help="duality: times, comma list")
        p.add_argument("--beta1", type=float)
        p.add_argument("--beta2", type=float)
        p.add_argument("--N-geom", dest="N_geom", help="sweep: geometric grid start:factor:count")
        p.add_argument("--input", help="plot-stub: CSV file the script should read")
    return parser


def parse_config(argv: list[str] | None = None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    values: dict = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    for key in _KEYS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    # coerce scalar types
    for key, conv in _KEYS.items():
        if key in values and conv is not str:
            try:
                values[key] = conv(values[key])
            except (TypeError, ValueError) as exc:
                raise CliError(EXIT_CONFIG, "config", f"{key}: bad value {values[key]!r}") from exc
    cfg = RunConfig(
        subcommand=ns.subcommand,
        values=values,
        seed=int(values.get("seed", 0)),
        fmt=str(values.get("format", "csv")),
        output=values.get("output"),
        workers=int(values.get("workers", os.cpu_count() or 1)),
    )
    if cfg.fmt not in ("csv", "json"):
        raise CliError(EXIT_CONFIG, "config", f"format must be csv or json, got {cfg.fmt!r}")
    if cfg.workers < 1:
        raise CliError(EXIT_CONFIG, "config", "workers must be >= 1")
    if cfg.subcommand not in ("plot-stub", "bs-heuristic"):
        cfg.grid = _build_grid(values, multi=cfg.subcommand == "sweep")
    return cfg


def _build_grid(values: dict, multi: bool) -> list[ModelParams]:
    if "N_geom" in values:
        if "N" in values:
            raise CliError(EXIT_CONFIG, "config", "give either N or N_geom, not both")
        Ns = _geom_grid(values["N_geom"])
    elif "N" in values:
        Ns = _int_list(values["N"], "N")
    else:
        raise CliError(EXIT_CONFIG, "config", "N is required")
    if "alpha" not in values:
        raise CliError(EXIT_CONFIG, "config", "alpha is required")
    alphas = _float_list(values["alpha"], "alpha")
    given = [k for k in ("b", "b_rel", "s") if k in values]
    if len(given) != 1:
        raise CliError(EXIT_CONFIG, "config", "exactly one of b, b_rel, s is required")
    sel_key = given[0]
    sels = _float_list(values[sel_key], sel_key)
    if not multi and max(len(Ns), len(alphas), len(sels)) > 1:
        raise CliError(EXIT_CONFIG, "config", "lists are only accepted by sweep")
    c_sel = float(values.get("c_sel", 1.0))
    grid = []
    for N in Ns:
        for alpha in alphas:
            for v in sels:
                try:
                    if sel_key == "s":
                        grid.append(ModelParams(N=N, alpha=alpha, s_override=v))
                    else:
                        b = v * (alpha - 1.0) if sel_key == "b_rel" else v
                        grid.append(ModelParams(N=N, alpha=alpha, b=b, c_sel=c_sel))
                except ConfigurationError as exc:
                    raise CliError(EXIT_CONFIG, "config", str(exc)) from exc
    return grid


# ---------------------------------------------------------------- commands


def _base_row(p: ModelParams) -> dict:
    return {"N": p.N, "alpha": p.alpha, "b": p.b, "s_N": p.s_N}


def sweep_point(index: int, p: ModelParams) -> dict:
    """One sweep row; failures become an error row instead of raising."""
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(_base_row(p))
    row["index"] = index
    try:
        chain = ASPChain(p)
        dist = stationary_distribution(chain)
        pi = pi_N_dual(chain, dist)
        pa = asymptotic_pi(p)
        row.update(d_N=chain.derived.d_N, pi_dual=pi, pi_asymptotic=pa,
                   ratio=pi / pa if pa > 0 else math.nan)
        if p.N <= EXACT_FORWARD_MAX_N:
            exact = fixation_prob_exact(build_frequency_generator(p), p.N - 1)
            row.update(pi_exact_forward=exact, abs_diff=abs(pi - exact))
    except (LambdaASPError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(cfg: RunConfig) -> list[dict]:
    if not cfg.grid:
        raise CliError(EXIT_CONFIG, "config", "empty sweep grid")
    jobs = list(enumerate(cfg.grid))
    if cfg.workers == 1 or len(jobs) == 1:
        return [sweep_point(i, p) for i, p in jobs]
    with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
        # map preserves submission order, so rows come back in grid order
        return list(pool.map(sweep_point, *zip(*jobs)))


def _single(cfg: RunConfig) -> ModelParams:
    return cfg.grid[0]


def cmd_offspring(cfg):
    p = _single(cfg)
    law = build_offspring_law(p.N, p.alpha)
    rows = [{"k": 0, "p_k_N": law.p0, "p_k_limit": 1.0 / p.alpha}]
    lim = limit_pk(law.k, p.alpha)
    rows += [{"k": int(k), "p_k_N": float(v), "p_k_limit": float(l)}
             for k, v, l in zip(law.k, law.pk, lim)]
    summary = {"N": p.N, "alpha": p.alpha, "c_tilde": law.c_tilde, "p0": law.p0,
               "p0_closed_form": law.p0_closed_form}
    return ["k", "p_k_N", "p_k_limit"], rows, summary, True


def cmd_asp_stationary(cfg):
    p = _single(cfg)
    chain = ASPChain(p)
    dist = stationary_distribution(chain)
    rows = [{"n": int(n), "pi_n": float(w)} for n, w in zip(dist.states, dist.weights)]
    summary = {**_base_row(p), "E_A_eq": dist.mean, "pi_N": pi_N_dual(chain, dist),
               "balance_residual": dist.balance_residual, "degenerate": dist.degenerate}
    return ["n", "pi_n"], rows, summary, True


def _x0(cfg, p):
    x0 = int(cfg.values.get("x0", p.N - 1))
    if not (0 <= x0 <= p.N):
        raise CliError(EXIT_CONFIG, "config", f"x0 must lie in 0..{p.N}")
    return x0


def cmd_fixation_exact(cfg):
    p = _single(cfg)
    x0 = _x0(cfg, p)
    val = fixation_prob_exact(build_frequency_generator(p), x0)
    row = {**_base_row(p), "x0": x0, "method": "exact", "pi_hat": val, "std_error": 0.0,
           "seed": cfg.seed}
    return FIXATION_COLUMNS, [row], dict(row), True


def cmd_fixation_mc(cfg):
    p = _single(cfg)
    x0 = _x0(cfg, p)
    reps = int(cfg.values.get("replicates", 10_000))
    if reps < 1:
        raise CliError(EXIT_CONFIG, "config", "replicates must be >= 1")
    est = fixation_prob_mc(p, x0, reps, cfg.seed)
    row = {**_base_row(p), "x0": x0, "method": f"mc[{reps}]", "pi_hat": est.point,
           "std_error": est.std_error, "seed": cfg.seed}
    return FIXATION_COLUMNS, [row], dict(row), True


def cmd_duality_check(cfg):
    p = _single(cfg)
    ks = _int_list(cfg.values.get("k", f"1,{p.N - 1}"), "k")
    ns = _int_list(cfg.values.get("n", "1,2,3"), "n")
    ts = _float_list(cfg.values.get("t", "0.1,1,10"), "t")
    rep = duality_report(p, ks, ns, ts)
    d = rep.to_dict()
    rows = d["points"]
    return ["k", "n", "t", "lhs", "rhs", "gap"], rows, d, True


def cmd_lyapunov_check(cfg):
    p = _single(cfg)
    chain = ASPChain(p)
    dist = stationary_distribution(chain)
    rep = sandwich_report(chain, dist, cfg.values.get("beta1"), cfg.values.get("beta2"))
    cols = ["max_over_dN", "argmax", "min_over_dN", "argmin", "d_N", "E_A_eq",
            "beta1", "beta2", "sandwich_ok"]
    return cols, [rep], rep, bool(rep["sandwich_ok"])


def cmd_sweep(cfg):
    rows = run_sweep(cfg)
    ok = all(r["error"] is None for r in rows)
    return SWEEP_COLUMNS, rows, None, ok


def cmd_bs_heuristic(cfg):
    v = cfg.values
    try:
        Ns = _geom_grid(v["N_geom"]) if "N_geom" in v else _int_list(v["N"], "N")
        b = float(v["b"])
    except KeyError as exc:
        raise CliError(EXIT_CONFIG, "config", f"{exc.args[0]} is required") from None
    rows = []
    for N in Ns:
        try:
            heur = bs_heuristic_pi(N, b)
            chain = BSVariantChain(N, b=b)
        except (LambdaASPError, ValueError) as exc:
            raise CliError(EXIT_CONFIG, "config", str(exc)) from exc
        rows.append({"N": N, "b": b, "s_N": chain.s_N, "pi_heuristic": heur,
                     "pi_dual_bs_variant": pi_N_dual(chain)})
    return ["N", "b", "s_N", "pi_heuristic", "pi_dual_bs_variant"], rows, None, True


_PLOT_TEMPLATE = '''\
"""Plot stub written by lambda-asp {version}. Requires matplotlib."""
import csv

import matplotlib.pyplot as plt

with open({path!r}, newline="") as fh:
    rows = [r for r in csv.DictReader(fh) if not r.get("error")]
N = [float(r["N"]) for r in rows]
ratio = [float(r["ratio"]) for r in rows]
plt.semilogx(N, ratio, "o-")
plt.axhline(1.0, color="grey", lw=0.8)
plt.xlabel("N")
plt.ylabel("pi_dual / pi_asymptotic")
plt.savefig({png!r}, dpi=150)
'''


def cmd_plot_stub(cfg):
    src = cfg.values.get("input", "sweep.csv")
    text = _PLOT_TEMPLATE.format(version=__version__, path=src,
                                 png=str(Path(src).with_suffix(".png")))
    return None, text, None, True


COMMANDS = {
    "offspring": cmd_offspring,
    "asp-stationary": cmd_asp_stationary,
    "fixation-exact": cmd_fixation_exact,
    "fixation-mc": cmd_fixation_mc,
    "duality-check": cmd_duality_check,
    "lyapunov-check": cmd_lyapunov_check,
    "sweep": cmd_sweep,
    "bs-heuristic": cmd_bs_heuristic,
    "plot-stub": cmd_plot_stub,
}


# ---------------------------------------------------------------- output


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def render_json(cfg: RunConfig, payload, rows=None) -> str:
    doc = {
        "tool_version": __version__,
        "subcommand": cfg.subcommand,
        "config_echo": cfg.echo(),
        "seed": cfg.seed,
        "result": payload,
    }
    if rows is not None:
        doc["rows"] = rows
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def _target(cfg: RunConfig, ext: str) -> Path | None:
    if cfg.output:
        return Path(cfg.output)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / f"{cfg.subcommand}.{ext}"
    return None


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {path}: {exc}") from exc


_TABULAR = ("offspring", "asp-stationary", "sweep", "bs-heuristic")


def emit(cfg: RunConfig, columns, rows, summary) -> None:
    """CSV: header + rows, provenance in a ``<file>.meta.json`` sidecar when
    writing to a file.  JSON: one document with provenance and results."""
    if columns is None:  # plain text (plot stub)
        _write(_target(cfg, "py"), rows)
        return
    if cfg.fmt == "json":
        # tabular commands carry their rows; single-record commands only the summary
        detail = rows if cfg.subcommand in _TABULAR else None
        result = None if cfg.subcommand in ("sweep", "bs-heuristic") else summary
        _write(_target(cfg, "json"), render_json(cfg, result, detail))
        return
    path = _target(cfg, "csv")
    _write(path, render_csv(columns, rows))
    if path is not None:
        meta = Path(str(path) + ".meta.json")
        _write(meta, render_json(cfg, None if cfg.subcommand in ("sweep", "bs-heuristic") else summary))


def _fail(err: CliError) -> int:
    msg = " ".join(str(err).split())
    sys.stderr.write(f"error code={err.code} kind={err.kind} message={msg}\n")
    return err.code


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        columns, rows, summary, ok = COMMANDS[cfg.subcommand](cfg)
        emit(cfg, columns, rows, summary)
    except CliError as err:
        return _fail(err)
    except ConfigurationError as exc:
        return _fail(CliError(EXIT_CONFIG, "config", str(exc)))
    except OSError as exc:
        return _fail(CliError(EXIT_IO, "io", str(exc)))
    except (LambdaASPError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return _fail(CliError(EXIT_NUMERIC, "numeric", f"{type(exc).__name__}: {exc}"))
    if not ok:
        sys.stderr.write("error code=2 kind=numeric message=one or more points or checks failed\n")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
