"""``graded-weyl`` command line runner.

Each config file describes one experiment.  Results go to
``<out>/<config-hash>/`` and a summary line is appended to
``<out>/ledger.csv``.  A finished result directory under the cache root
(``GRADED_WEYL_CACHE``, default ``<out>``) is reused unless ``--no-cache``.

Exit status: 0 success, 2 schema error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import os
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from . import coverings, lie, operators, residue, spectra, traces
from .discretize import Grid

EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
FILES = ("summary.csv", "singular_values.csv", "centers.csv", "plot.svg")


class NumericFailure(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"numeric failure in stage '{stage}': {exc}")
        self.stage = stage


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except cfgmod.ConfigError:
        raise
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError, NotImplementedError, KeyError) as exc:
        raise NumericFailure(name, exc) from exc


# --- builders ----------------------------------------------------------------


def build_grid(spec: dict, dim: int) -> Grid:
    return Grid(dim, spec["half_width"], spec["points"], spec["mode"])


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.15e}"
    return str(x)


def _quadratic_form(sym: operators.Symbol, d: int) -> np.ndarray:
    A = np.zeros((d, d))
    for e, a in sym.coeffs.items():
        if sum(e) != 2:
            raise ValueError("symbol is not a quadratic form")
        idx = [j for j, k in enumerate(e) for _ in range(k)]
        A[idx[0], idx[1]] += 0.5 * a.real
        A[idx[1], idx[0]] += 0.5 * a.real
    return A


def trace_value(op: operators.ConstDiffOp, method: str, tol: float) -> traces.TraceResult:
    alg = op.alg
    if method == "auto":
        return traces.TraceResult(spectra.tau_of_constant(op), "auto")
    if method == "heisenberg":
        n = (alg.dim - 1) // 2
        A = np.zeros((2 * n, 2 * n))
        for w, a in op.terms.items():
            A[w[0], w[1]] -= 0.5 * complex(a).real
            A[w[1], w[0]] -= 0.5 * complex(a).real
        return traces.tau_exp_heisenberg(A, n)
    sym = operators.abelian_symbol(op)
    d = alg.dim
    if method == "direct":
        return traces.tau_exp_direct(sym, d, rtol=tol)
    if method == "sphere":
        return traces.tau_exp_sphere(sym, op.order, d)
    if method == "gaussian":
        return traces.tau_exp_gaussian(_quadratic_form(sym, d))
    return traces.tau_exp_aniso(sym, alg.layers)


# --- commands ------------------------------------------------------------------


def _setup(cfg: cfgmod.ExperimentConfig):
    with stage("group"):
        alg = lie.from_config(cfg.group)
    op = f = None
    if cfg.operator is not None:
        with stage("operator"):
            op = operators.from_config(cfg.operator, alg)
    if cfg.function is not None:
        with stage("function"):
            f = operators.coefficient_from_config(cfg.function, alg.dim)
    return alg, op, f


def _weyl_config(cfg, alg, op, f) -> spectra.WeylConfig:
    p = cfg.params
    with stage("grid"):
        grid = build_grid(p["grid"], alg.dim)
        refine = build_grid(p["refine"], alg.dim) if "refine" in p else None
    return spectra.WeylConfig(alg, op, f, p["gamma"], grid, p.get("K"), tuple(p["window"]) if "window" in p else None, refine)


def run_trace(cfg, alg, op, f):
    with stage("trace"):
        res = trace_value(op, cfg.params["method"], cfg.params["tolerance"])
    return {"summary": [res.row(alg.name, op.digest())]}


def run_residue(cfg, alg, op, f):
    with stage("trace"):
        tau = traces.TraceResult(spectra.tau_of_constant(op), "auto")
    Q = lie.homogeneous_dimension(alg)
    with stage("residue"):
        res = residue.residue_via_definition(Q, op.order, tau, tuple(cfg.params["s"]))
        closed = residue.residue_closed_form(Q, op.order, tau)
    rows = [{"s": _fmt(s), "value": _fmt(v), "closed_form": _fmt(closed)} for s, v in zip(res.s_values, res.per_s)]
    rows.append({"s": "mean", "value": _fmt(res.value), "closed_form": _fmt(closed)})
    return {"summary": rows}


def run_weyl(cfg, alg, op, f):
    wc = _weyl_config(cfg, alg, op, f)
    with stage("weyl"):
        rep = spectra.weyl_experiment(wc)
    row = {
        "measured": _fmt(rep.measured.constant),
        "stderr": _fmt(rep.measured.stderr),
        "predicted": _fmt(rep.predicted.value),
        "relative_error": _fmt(rep.relative_error),
        "self_convergence": _fmt(rep.self_convergence) if rep.self_convergence is not None else "",
        "k_min": rep.measured.window[0],
        "k_max": rep.measured.window[1],
        "K": rep.sv.K,
        "method": rep.sv.method,
    }
    return {"summary": [row], "sv": rep.sv, "plot": (rep.sv, rep.measured, rep.predicted.value)}


def run_spectrum(cfg, alg, op, f):
    wc = _weyl_config(cfg, alg, op, f)
    with stage("discretize"):
        M = spectra.discretize_operator(wc, wc.grid)
    with stage("singular_values"):
        sv = spectra.singular_values(M, wc.K)
    with stage("fit"):
        fit = spectra.fit_weyl(sv, None, wc.window)
    row = {"exponent": _fmt(fit.exponent), "constant": _fmt(fit.constant), "stderr": _fmt(fit.stderr), "K": sv.K, "method": sv.method}
    return {"summary": [row], "sv": sv, "plot": (sv, fit, None)}


def run_signed(cfg, alg, op, f):
    wc = _weyl_config(cfg, alg, op, f)
    with stage("signed"):
        rep = spectra.signed_experiment(wc)
    rows = []
    for part, fit, pred, rel in zip(("plus", "minus"), (rep.plus, rep.minus), (rep.predicted_plus, rep.predicted_minus), rep.relative_errors):
        rows.append({"part": part, "measured": _fmt(fit.constant), "stderr": _fmt(fit.stderr), "predicted": _fmt(pred), "relative_error": _fmt(rel)})
    sv = spectra.SingularValues(np.sort(np.abs(rep.eigenvalues))[::-1], "dense")
    return {"summary": rows, "sv": sv}


def run_zeta(cfg, alg, op, f):
    wc = _weyl_config(cfg, alg, op, f)
    with stage("zeta"):
        rows = spectra.zeta_trace_check(wc, cfg.params["z"])
    return {
        "summary": [
            {"z": _fmt(r.z), "measured": _fmt(r.measured), "formula": _fmt(r.formula), "relative_error": _fmt(r.relative_error), "in_band": _fmt(r.in_band), "tail": _fmt(r.tail)}
            for r in rows
        ]
    }


def run_cover(cfg, alg, op, f):
    reg = cfg.params["region"]
    if len(reg["lower"]) != alg.dim or len(reg["upper"]) != alg.dim:
        raise cfgmod.ConfigError("params.region", f"bounds need {alg.dim} entries")
    axes = [np.arange(lo, hi + 0.5 * reg["spacing"], reg["spacing"]) for lo, hi in zip(reg["lower"], reg["upper"])]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, alg.dim)
    with stage("cover"):
        cov = coverings.greedy_cover(pts, cfg.params["eps"], alg)
        ok = coverings.covers(cov, pts)
    row = {
        "centers": len(cov),
        "radius": _fmt(cov.radius),
        "multiplicity": cov.multiplicity,
        "bound": 5 ** cov.delta,
        "covered": int(ok),
    }
    if "level" in cfg.params:
        l = cfg.params["level"]
        with stage("partition"):
            lcov = coverings.cover_for_level(pts, l, alg)
            part = coverings.partition_functions(lcov, l, axes)
            defect, slack = coverings.mass_defect(part)
        row.update(level=l, cells=part.n_cells, mass_defect=_fmt(defect), grid_slack=_fmt(slack), defect_bound=_fmt(2.0**-l))
    return {"summary": [row], "covering": cov}


RUNNERS = {
    "trace": run_trace,
    "weyl": run_weyl,
    "residue": run_residue,
    "spectrum": run_spectrum,
    "cover": run_cover,
    "zeta": run_zeta,
    "signed": run_signed,
}


# --- output ----------------------------------------------------------------------


def _header(cfg: cfgmod.ExperimentConfig, digest: str) -> list:
    return [
        f"graded-weyl {__version__}",
        f"config {digest}",
        f"command {cfg.command}",
        f"params {json.dumps(cfg.params, sort_keys=True, separators=(',', ':'))}",
    ]


def _write_rows(path: Path, header: list, rows: list) -> None:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    keys = list(rows[0].keys())
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _write_plot(path: Path, digest: str, sv, fit, predicted) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = digest
    mu = sv.values
    k = np.arange(1, len(mu) + 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(k, k ** (1.0 / fit.exponent) * np.maximum(mu, 1e-300), lw=1, label="k^(1/p) mu(k)")
    if predicted is not None:
        ax.axhline(predicted, color="k", ls="--", lw=1, label="predicted")
    ax.axvspan(fit.window[0] + 1, fit.window[1], color="0.9")
    ax.set_xlabel("k")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Title": f"config {digest}", "Creator": f"graded-weyl {__version__}"})
    plt.close(fig)


def write_outputs(cfg, digest: str, result: dict, target: Path) -> None:
    target.mkdir(parents=True, exist_ok=True)
    header = _header(cfg, digest)
    if "sv" in result:
        sv = result["sv"]
        _write_rows(target / "singular_values.csv", header + [f"method {sv.method}"], [{"k": i, "mu": _fmt(v)} for i, v in enumerate(sv.values)])
    if "covering" in result:
        coverings.to_csv(result["covering"], target / "centers.csv", header)
    if "plot" in result and cfg.params["plot"] == "svg":
        _write_plot(target / "plot.svg", digest, *result["plot"])
    # summary last: its presence marks a complete result
    _write_rows(target / "summary.csv", header, result["summary"])


def _headline(path: Path) -> str:
    rows = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return rows[1] if len(rows) > 1 else ""


def run_one(config_path: str, command: str, out: str, use_cache: bool = True) -> tuple:
    """Run one config; returns ``(digest, exit_status, message)``."""
    try:
        cfg = cfgmod.load(config_path, command)
    except OSError as exc:
        return ("", EXIT_SCHEMA, f"{config_path}: cannot read config: {exc}")
    except cfgmod.ConfigError as exc:
        return ("", EXIT_SCHEMA, f"{config_path}: schema error: {exc}")
    digest = cfg.digest()
    out_root = Path(out)
    cache_root = Path(os.environ.get("GRADED_WEYL_CACHE") or out_root)
    cached = cache_root / digest
    target = out_root / digest
    hit = use_cache and (cached / "summary.csv").exists()
    if not hit:
        try:
            alg, op, f = _setup(cfg)
            result = RUNNERS[command](cfg, alg, op, f)
            with stage("output"):
                write_outputs(cfg, digest, result, cached)
        except cfgmod.ConfigError as exc:
            return (digest, EXIT_SCHEMA, f"{config_path}: schema error: {exc}")
        except NumericFailure as exc:
            return (digest, EXIT_NUMERIC, f"{config_path}: {exc}")
    if cached.resolve() != target.resolve():
        target.mkdir(parents=True, exist_ok=True)
        for name in FILES:
            if (cached / name).exists():
                shutil.copyfile(cached / name, target / name)
    status = "cache hit" if hit else "computed"
    return (digest, 0, f"{digest} {command} {status}: {_headline(target / 'summary.csv')}")


def append_ledger(out: Path, command: str, results: list) -> None:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "ledger.csv"
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(["config_hash", "command", "status", "message"])
        for digest, code, msg in results:
            w.writerow([digest, command, code, msg])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graded-weyl", description="Weyl-law experiments on graded Lie groups.")
    p.add_argument("command", choices=cfgmod.COMMANDS)
    p.add_argument("--config", action="append", required=True, help="TOML experiment config (repeatable)")
    p.add_argument("--out", default="outputs", help="output root (default: outputs)")
    p.add_argument("--threads", type=int, default=1, help="parallel experiments")
    p.add_argument("--no-cache", action="store_true", help="recompute even if a cached result exists")
    p.add_argument("--version", action="version", version=f"graded-weyl {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    use_cache = not args.no_cache
    results = []
    if args.threads > 1 and len(args.config) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            futs = [pool.submit(run_one, c, args.command, args.out, use_cache) for c in args.config]
            batch = [fut.result() for fut in as_completed(futs)]
        # completion order, ties (identical configs) broken by hash
        results = sorted(enumerate(batch), key=lambda t: (t[0], t[1][0]))
        results = [r for _, r in results]
    else:
        results = [run_one(c, args.command, args.out, use_cache) for c in args.config]
    append_ledger(Path(args.out), args.command, results)
    for _, code, msg in results:
        print(msg, file=sys.stderr if code else sys.stdout)
    return max((code for _, code, _ in results), default=0)


if __name__ == "__main__":
    sys.exit(main())
