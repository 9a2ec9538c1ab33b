"""Command-line front end.

Subcommands
-----------
run
    Run GD and/or Heavy-Ball on a configured objective and write trace CSVs
    holding the measured errors alongside the theoretical curves.
verify
    Execute every numerical oracle and write a pass/fail report.
bounds
    Tabulate the GD upper, Heavy-Ball upper and first-order lower bounds.
ridge
    Fit ridge regression from a CSV dataset.

Exit statuses: 0 converged (or all checks passed), 1 a verification check
failed, 2 iteration budget exhausted, 3 diverged, 4 configuration error,
5 I/O or dataset error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, worstcase
from .errors import DatasetError, DivergenceError
from .fixedpoint import (
    GradientStepOperator,
    IterationTrace,
    contraction_factor,
    format_real,
    hb_params,
    optimal_step,
    rate_bounds,
    run_fixed_point,
    run_heavy_ball,
    write_trace_csv,
)
from .objective import (
    QuadraticObjective,
    SmoothnessBounds,
    exact_minimizer,
    random_quadratic,
    read_ridge_csv,
    ridge_to_quadratic,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BUDGET = 2
EXIT_DIVERGED = 3
EXIT_CONFIG = 4
EXIT_IO = 5

OBJECTIVES = ("random", "quadratic", "worst_case", "ridge")
METHODS = ("gd", "hb", "both")
REPORT_COLUMNS = ("check", "parameter", "measured", "bound_or_closed_form", "abs_err", "rel_err", "pass")

# keys that belong to exactly one objective kind
_OBJECTIVE_KEYS = {
    "random": {"n", "kappa", "L"},
    "quadratic": {"Q", "q", "c"},
    "worst_case": {"n", "kappa", "L"},
    "ridge": {"data", "lambda"},
}
_COMMON_KEYS = {"objective", "method", "alpha", "iters", "grad_tol", "seed", "init", "out"}


class ConfigError(ValueError):
    """An invalid experiment configuration; the message names the key."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a ``run`` needs.

    ``objective`` selects which objective fields are read: ``random``
    (``n``, ``kappa``, ``L``, seeded by ``seed``), ``quadratic`` (``Q``,
    ``q``, ``c`` literals), ``worst_case`` (``n``, ``L``, ``kappa``) or
    ``ridge`` (``data``, ``lam``).  ``alpha = None`` means the optimal
    step.  ``init`` is ``"zeros"`` or ``"random"`` (seeded).
    """

    objective: str = "random"
    n: int = 10
    kappa: float = 10.0
    L: float = 1.0
    Q: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    c: float = 0.0
    data: Optional[str] = None
    lam: Optional[float] = None
    method: str = "gd"
    alpha: Optional[float] = None
    iters: int = 1000
    grad_tol: float = 1e-10
    seed: int = 0
    init: str = "zeros"
    out: str = "trace.csv"

    def validate(self) -> "ExperimentConfig":
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective: expected one of {', '.join(OBJECTIVES)}, got {self.objective!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method: expected one of {', '.join(METHODS)}, got {self.method!r}")
        if self.iters < 1:
            raise ConfigError(f"iters: budget must be at least 1, got {self.iters}")
        if not (self.grad_tol > 0 and math.isfinite(self.grad_tol)):
            raise ConfigError(f"grad_tol: must be positive, got {self.grad_tol}")
        if self.init not in ("zeros", "random"):
            raise ConfigError(f"init: expected zeros or random, got {self.init!r}")
        if self.alpha is not None and (self.alpha == 0 or not math.isfinite(self.alpha)):
            raise ConfigError(f"alpha: must be finite and nonzero, got {self.alpha}")
        if self.objective in ("random", "worst_case"):
            if not self.kappa >= 1 or not math.isfinite(self.kappa):
                raise ConfigError(f"kappa: must be at least 1, got {self.kappa}")
            if not self.L > 0:
                raise ConfigError(f"L: must be positive, got {self.L}")
            if self.n < 1:
                raise ConfigError(f"n: must be positive, got {self.n}")
        if self.objective == "worst_case":
            if self.n < 3:
                raise ConfigError(f"n: the worst-case instance needs n >= 3, got {self.n}")
            if not self.kappa > 1:
                raise ConfigError(f"kappa: the worst-case instance needs kappa > 1, got {self.kappa}")
        if self.objective == "quadratic" and (self.Q is None or self.q is None):
            raise ConfigError("Q: a quadratic objective needs both Q and q")
        if self.objective == "ridge":
            if self.data is None:
                raise ConfigError("data: a ridge objective needs a dataset path")
            if self.lam is None or not self.lam > 0:
                raise ConfigError(f"lambda: must be positive, got {self.lam}")
        return self


def _parse_vector(text: str, key: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(",", " ").split()], dtype=np.float64)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as a list of numbers") from None


def _parse_matrix(text: str, key: str) -> np.ndarray:
    rows = [_parse_vector(r, key) for r in text.split(";") if r.strip()]
    if not rows or len({r.size for r in rows}) != 1:
        raise ConfigError(f"{key}: rows must be ';'-separated and equally long")
    return np.vstack(rows)


def _convert(key: str, value: str):
    try:
        if key in ("n", "iters", "seed"):
            return int(value)
        if key in ("kappa", "L", "c", "grad_tol", "lambda"):
            return float(value)
        if key == "alpha":
            return None if value.lower() in ("", "optimal") else float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    if key == "Q":
        return _parse_matrix(value, key)
    if key == "q":
        return _parse_vector(value, key)
    return value


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _COMMON_KEYS and not any(key in keys for keys in _OBJECTIVE_KEYS.values()):
            raise ConfigError(f"{key}: unknown configuration key (line {lineno})")
        if key in values:
            raise ConfigError(f"{key}: given twice (line {lineno})")
        values[key] = _convert(key, value)
    return values


def build_config(values: dict) -> ExperimentConfig:
    """Turn parsed key/value pairs into a validated config.

    Keys that belong to a different objective kind than the selected one
    (say ``Q`` together with ``objective = ridge``) are rejected, so
    exactly one objective is configured.
    """
    values = dict(values)
    objective = values.get("objective", "random")
    if objective not in OBJECTIVES:
        raise ConfigError(f"objective: expected one of {', '.join(OBJECTIVES)}, got {objective!r}")
    allowed = _COMMON_KEYS | _OBJECTIVE_KEYS[objective]
    for key in values:
        if key not in allowed:
            raise ConfigError(f"{key}: not valid for objective {objective!r}")
    if "lambda" in values:
        values["lam"] = values.pop("lambda")
    return ExperimentConfig(**values).validate()


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config_text(text)


# ---------------------------------------------------------------- run


def _initial_point(cfg: ExperimentConfig, n: int) -> np.ndarray:
    if cfg.init == "zeros":
        return np.zeros(n)
    return np.random.default_rng([cfg.seed, 1]).standard_normal(n)


def build_objective(cfg: ExperimentConfig):
    """Return ``(objective, worst_case_instance_or_None)``."""
    if cfg.objective == "random":
        rng = np.random.default_rng(cfg.seed)
        return random_quadratic(cfg.n, cfg.kappa, rng, L=cfg.L), None
    if cfg.objective == "quadratic":
        try:
            return QuadraticObjective(cfg.Q, cfg.q, cfg.c), None
        except ValueError as exc:
            raise ConfigError(f"Q: {exc}") from None
    if cfg.objective == "worst_case":
        inst = worstcase.build_worst_case(cfg.n, cfg.L, cfg.kappa)
        return inst.objective, inst
    problem = read_ridge_csv(cfg.data, cfg.lam)
    return ridge_to_quadratic(problem), None


def _run_method(method, f, cfg, x_init):
    """Run one method; returns ``(trace, status)`` where a divergence keeps the partial trace."""
    try:
        if method == "gd":
            alpha = optimal_step(f.bounds)[0] if cfg.alpha is None else cfg.alpha
            trace = run_fixed_point(f, GradientStepOperator(alpha), x_init, cfg.iters, cfg.grad_tol)
        else:
            trace = run_heavy_ball(f, hb_params(f.bounds), x_init, cfg.iters, cfg.grad_tol)
    except DivergenceError as exc:
        return exc.trace, "diverged"
    return trace, trace.status


def figure_rows(trace: IterationTrace, f, cfg: ExperimentConfig, instance=None) -> list[dict]:
    """Trace CSV rows for ``k = 0..iters``.

    Measured columns are blank past the last recorded iterate.  The GD
    curve uses the step actually taken by GD; the lower-bound curve is
    only filled on the worst-case instance, where it is a valid bound.
    """
    x_star = exact_minimizer(f)
    e0 = float(np.linalg.norm(trace.iterates[0] - x_star))
    prev = trace.params.get("x_prev", trace.iterates[0])
    e_prev = float(np.linalg.norm(prev - x_star))
    gd_factor = None
    if cfg.alpha is not None:
        gd_factor = contraction_factor(cfg.alpha, f.bounds)
    delta = instance.delta_n if instance is not None else 0.0
    curves = rate_bounds(f.bounds, cfg.iters, e0, e_prev, delta, gd_factor)
    rows = []
    for k in range(cfg.iters + 1):
        row = {
            "k": k,
            "gd_bound": curves.gd_upper[k],
            "hb_bound": curves.hb_upper[k],
            "lower_bound": curves.fom_lower[k] if instance is not None else None,
        }
        if k < len(trace):
            row["error"] = trace.errors[k]
            row["grad_norm"] = trace.grad_norms[k]
        rows.append(row)
    return rows


def _method_paths(out: str, methods: Sequence[str]) -> dict:
    if len(methods) == 1:
        return {methods[0]: Path(out)}
    p = Path(out)
    return {m: p.with_name(f"{p.stem}_{m}{p.suffix or '.csv'}") for m in methods}


def _combine_status(statuses) -> int:
    if "diverged" in statuses:
        return EXIT_DIVERGED
    if "budget" in statuses:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_run(cfg: ExperimentConfig) -> tuple[int, dict]:
    """Run the configured methods and write one trace CSV per method.

    Returns the exit status and ``{method: (trace, rows, path)}``.
    """
    f, instance = build_objective(cfg)
    methods = ["gd", "hb"] if cfg.method == "both" else [cfg.method]
    paths = _method_paths(cfg.out, methods)
    x_init = _initial_point(cfg, f.n)
    results, statuses = {}, []
    for method in methods:
        trace, status = _run_method(method, f, cfg, x_init)
        rows = figure_rows(trace, f, cfg, instance)
        write_trace_csv(paths[method], rows)
        results[method] = (trace, rows, paths[method])
        statuses.append(status)
    return _combine_status(statuses), results


# ---------------------------------------------------------------- bounds


def cmd_bounds(kappa: float, k_max: int, out) -> list[dict]:
    """Write the three curves for unit initial errors and zero gap.

    For ``kappa == 1`` only the GD curve is defined; the others stay empty.
    """
    if not kappa >= 1:
        raise ConfigError(f"kappa: must be at least 1, got {kappa}")
    if k_max < 0:
        raise ConfigError(f"iters: must be nonnegative, got {k_max}")
    curves = rate_bounds(SmoothnessBounds.from_kappa(kappa), k_max, 1.0, 1.0, 0.0)
    rows = [
        {
            "k": k,
            "gd_bound": curves.gd_upper[k],
            "hb_bound": curves.hb_upper[k],
            "lower_bound": curves.fom_lower[k],
        }
        for k in range(k_max + 1)
    ]
    write_trace_csv(out, rows)
    return rows


# ---------------------------------------------------------------- ridge


MODEL_COLUMNS = ("name", "value")


def cmd_ridge(dataset_path, lam: float, method: str, budget: int, out, grad_tol: float = 1e-10):
    """Fit ridge regression; write trace CSV(s) and a ``<stem>_model.csv`` report.

    The model report lists ``L``, ``U``, ``kappa``, ``alpha_star``,
    ``q_star``, the final gradient norm and one weight per feature.  With
    ``method == "both"`` the weights come from the run with the smaller
    final gradient.
    """
    cfg = ExperimentConfig(
        objective="ridge", data=str(dataset_path), lam=lam, method=method, iters=budget,
        grad_tol=grad_tol, out=str(out),
    ).validate()
    problem = read_ridge_csv(dataset_path, lam)
    status, results = cmd_run(cfg)
    f = ridge_to_quadratic(problem)
    alpha, q_star = optimal_step(f.bounds)
    best = min(results.values(), key=lambda r: r[0].grad_norms[-1])[0]
    records = [
        ("L", f.bounds.L),
        ("U", f.bounds.U),
        ("kappa", f.bounds.kappa),
        ("alpha_star", alpha),
        ("q_star", q_star),
        ("grad_norm", best.grad_norms[-1]),
    ]
    records += [(f"x.{name}", w) for name, w in zip(problem.feature_names, best.final)]
    p = Path(out)
    model_path = p.with_name(f"{p.stem}_model.csv")
    with model_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MODEL_COLUMNS)
        for name, value in records:
            writer.writerow([name, format_real(value)])
    return status, dict(records), best, model_path


def read_model_csv(path) -> dict:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader)) != MODEL_COLUMNS:
            raise ValueError("unexpected model header")
        return {name: float(value) for name, value in reader}


# ---------------------------------------------------------------- verify


def _row(check, parameter, measured, reference, ok, violation=None):
    """A report row.  ``violation`` overrides ``|measured - reference|`` for one-sided checks."""
    abs_err = abs(measured - reference) if violation is None else max(violation, 0.0)
    rel_err = abs_err / abs(reference) if reference != 0 else math.nan
    return {
        "check": check,
        "parameter": parameter,
        "measured": measured,
        "bound_or_closed_form": reference,
        "abs_err": abs_err,
        "rel_err": rel_err,
        "pass": bool(ok),
    }


def _check_schur_powers(depth: int, seed: int = 0, samples: int = 1000) -> list[dict]:
    rng = np.random.default_rng(seed)
    blocks = [analysis.CompanionBlock2x2(*rng.uniform(-2.0, 2.0, 2)) for _ in range(samples)]
    rows = []
    for k in range(1, depth + 1):
        worst_rec, worst_ratio = 0.0, 0.0
        for m in blocks:
            s = analysis.power_decomposition_2x2(m, k)
            direct = np.linalg.matrix_power(m.matrix(), k)
            scale = analysis.spectral_norm(m.matrix()) ** k
            worst_rec = max(worst_rec, float(np.max(np.abs(s.reconstruct() - direct))) / scale)
            worst_ratio = max(worst_ratio, (abs(s.d) - 1e-10) / analysis.schur_offdiag_bound(m, k))
        rows.append(_row("schur_reconstruction", f"k={k}", worst_rec, 1e-10, worst_rec <= 1e-10,
                         violation=worst_rec - 1e-10))
        rows.append(_row("schur_d_bound", f"k={k}", worst_ratio, 1.0, worst_ratio <= 1.0,
                         violation=worst_ratio - 1.0))
    return rows


def _check_kappa(kappa: float, depth: int) -> list[dict]:
    """Every per-kappa oracle: quadrature, block radii, dual-route norms."""
    rows = []
    tag = f"kappa={kappa!r}"
    if kappa > 1:
        for k in range(1, depth + 1):
            closed = analysis.integral_identity(kappa, k)
            quad = analysis.integral_quadrature(kappa, k)
            rel = abs(quad - closed) / abs(closed)
            rows.append(_row("integral_identity", f"{tag},k={k}", quad, closed, rel <= 1e-8))
            entry = worstcase.minimizer_entry_closed_form(kappa, k)
            rows.append(_row("minimizer_entry_consistency", f"{tag},k={k}", entry, -closed,
                             abs(entry + closed) <= 1e-12 * abs(closed)))
    bounds = SmoothnessBounds.from_kappa(kappa)
    p = hb_params(bounds)
    sweep = np.linspace(bounds.L, bounds.U, 100)
    radii = np.array([analysis.spectral_radius_block(analysis.block_for_eigenvalue(l, p)) for l in sweep])
    dev = float(np.max(np.abs(radii - p.rate)))
    worst = float(radii[np.argmax(np.abs(radii - p.rate))])
    rows.append(_row("hb_spectral_radius", tag, worst, p.rate, dev <= 1e-10))
    for n in (2, 8):
        lam = np.geomspace(bounds.L, bounds.U, n)
        Q = np.diag(lam)
        for k in range(1, depth + 1):
            dense, blocks = analysis.hb_power_norm_routes(Q, p, k)
            scale = max(dense, blocks)
            rel = abs(dense - blocks) / scale if scale > 0 else 0.0
            rows.append(_row("dual_route_norm", f"{tag},n={n},k={k}", dense, blocks, rel <= 1e-8))
            if kappa > 1:
                bound = analysis.bk_norm_bound(kappa, k, p)
                rows.append(_row("bk_norm_bound", f"{tag},n={n},k={k}", blocks, bound,
                                 blocks <= bound, violation=blocks - bound))
    return rows


def _check_worst_case(kappa: float, sizes=(64, 128, 256, 512)) -> list[dict]:
    """Eigenvalue containment and the finite-size gap at entry 1.

    The gap falls below double-precision range for small ``kappa`` and
    large ``n``, so comparisons run in extended precision and the shrinkage
    rows report ``log10 |delta|``.
    """
    rows = []
    if not kappa > 1:
        return rows
    tag = f"kappa={kappa!r}"
    previous = None
    for n in sizes:
        inst = worstcase.build_worst_case(n, 1.0, kappa)
        lo, hi = float(inst.eigenvalues.min()), float(inst.eigenvalues.max())
        rows.append(_row("eigenvalue_min", f"{tag},n={n}", lo, inst.bounds.L,
                         lo >= inst.bounds.L - 1e-9, violation=inst.bounds.L - lo))
        rows.append(_row("eigenvalue_max", f"{tag},n={n}", hi, inst.bounds.U,
                         hi <= inst.bounds.U + 1e-9, violation=hi - inst.bounds.U))
        delta, ctx = worstcase.delta_n_exact(kappa, n, 1)
        sk = ctx.sqrt(ctx.mpf(kappa))
        z2 = (sk - 1) / (sk + 1)
        # the finite-n gap summed as two geometric series
        oracle = -(ctx.mpf(kappa) - 1) / (4 * sk) * 2 * z2**n / (1 - z2**n)
        rel = float(abs(delta - oracle) / abs(oracle))
        rows.append(_row("delta_closed_form", f"{tag},n={n}", float(delta), float(oracle), rel <= 1e-8))
        log_gap = float(ctx.log10(abs(delta)))
        if previous is not None:
            rows.append(_row("delta_shrinkage", f"{tag},n={n}", log_gap, previous,
                             log_gap < previous, violation=log_gap - previous))
        previous = log_gap
    return rows


def _check_geometric(depth: int) -> list[dict]:
    rows = []
    for alpha in (0.0, 0.5, -0.5, 0.9, 3.0, -1.5):
        for k in range(1, depth + 1):
            closed = analysis.geometric_fourier_identities(alpha, k)
            quad = analysis.geometric_fourier_quadrature(alpha, k)
            err = abs(quad - closed)
            ok = err <= 1e-8 * max(abs(closed), 1.0) if closed == 0 else err <= 1e-8 * abs(closed)
            rows.append(_row("geometric_fourier", f"alpha={alpha!r},k={k}", quad, closed, ok))
    return rows


def worker_count() -> int:
    """Worker threads, capped by ``CONTRACTIX_THREADS`` when it is set."""
    default = min(4, os.cpu_count() or 1)
    raw = os.environ.get("CONTRACTIX_THREADS")
    if raw is None or raw.strip() == "":
        return default
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"CONTRACTIX_THREADS: expected a positive integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError(f"CONTRACTIX_THREADS: expected a positive integer, got {raw!r}")
    return min(default, cap)


def cmd_verify(kappas: Sequence[float], depth: int, out) -> tuple[int, list[dict]]:
    """Run every oracle suite up to power/index ``depth`` and write the report.

    Independent suites run on a thread pool; each returns its own rows and
    the report is assembled in a fixed order once all have finished, so
    the output does not depend on scheduling.
    """
    if depth < 0:
        raise ConfigError(f"depth: must be nonnegative, got {depth}")
    for kappa in kappas:
        if not (kappa >= 1 and math.isfinite(kappa)):
            raise ConfigError(f"kappa: must be at least 1, got {kappa}")
    tasks = []
    if depth > 0:
        tasks.append((_check_schur_powers, (min(depth, 30),)))
        tasks.append((_check_geometric, (depth,)))
        for kappa in kappas:
            tasks.append((_check_kappa, (kappa, depth)))
            tasks.append((_check_worst_case, (kappa,)))
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = [pool.submit(fn, *args) for fn, args in tasks]
        rows = [row for fut in futures for row in fut.result()]
    write_report_csv(out, rows)
    ok = all(row["pass"] for row in rows)
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), rows


def write_report_csv(path, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in rows:
            writer.writerow(
                [r["check"], r["parameter"]]
                + [format_real(r[c]) for c in ("measured", "bound_or_closed_form", "abs_err", "rel_err")]
                + ["true" if r["pass"] else "false"]
            )


def read_report_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader)) != REPORT_COLUMNS:
            raise ValueError("unexpected report header")
        rows = []
        for cells in reader:
            row = {"check": cells[0], "parameter": cells[1]}
            for col, cell in zip(REPORT_COLUMNS[2:6], cells[2:6]):
                row[col] = float(cell) if cell else math.nan
            row["pass"] = cells[6] == "true"
            rows.append(row)
    return rows


# ---------------------------------------------------------------- CLI


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contractix", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run GD / Heavy-Ball and write trace CSVs")
    run.add_argument("--config", help="flat key = value configuration file")
    run.add_argument("--objective", choices=OBJECTIVES)
    run.add_argument("--kappa", type=float)
    run.add_argument("--n", type=int)
    run.add_argument("--iters", type=int)
    run.add_argument("--alpha", type=float)
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--lambda", dest="lam", type=float)
    run.add_argument("--data", help="dataset CSV for the ridge objective")

    ver = sub.add_parser("verify", help="run every oracle and write a pass/fail report")
    ver.add_argument("--kappa", type=float, nargs="+", default=[2.0, 4.0, 100.0])
    ver.add_argument("--iters", "--depth", dest="depth", type=int, default=12,
                     help="largest power / index checked (0 gives an empty report)")
    ver.add_argument("--out", default="verify.csv")

    bnd = sub.add_parser("bounds", help="tabulate the theoretical error curves")
    bnd.add_argument("--kappa", type=float, required=True)
    bnd.add_argument("--iters", type=int, default=100)
    bnd.add_argument("--out", default="bounds.csv")

    rdg = sub.add_parser("ridge", help="fit ridge regression from a CSV dataset")
    rdg.add_argument("data", help="CSV with header f1,...,fn,label")
    rdg.add_argument("--lambda", dest="lam", type=float, required=True)
    rdg.add_argument("--method", choices=METHODS, default="gd")
    rdg.add_argument("--iters", type=int, default=100_000)
    rdg.add_argument("--out", default="ridge.csv")
    return parser


def _run_config(args) -> ExperimentConfig:
    values = load_config(args.config) if args.config else {}
    overrides = {
        "objective": args.objective,
        "kappa": args.kappa,
        "n": args.n,
        "iters": args.iters,
        "alpha": args.alpha,
        "method": args.method,
        "seed": args.seed,
        "out": args.out,
        "lambda": args.lam,
        "data": args.data,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "run":
            status, results = cmd_run(_run_config(args))
            for method, (trace, _, path) in results.items():
                print(f"{method}: {trace.status} after {trace.iterations} iterations -> {path}")
            return status
        if args.command == "verify":
            status, rows = cmd_verify(args.kappa, args.depth, args.out)
            failed = [r for r in rows if not r["pass"]]
            print(f"{len(rows) - len(failed)}/{len(rows)} checks passed -> {args.out}")
            for r in failed:
                print(f"FAIL {r['check']} {r['parameter']}")
            return status
        if args.command == "bounds":
            cmd_bounds(args.kappa, args.iters, args.out)
            print(f"bounds -> {args.out}")
            return EXIT_OK
        status, model, trace, model_path = cmd_ridge(args.data, args.lam, args.method, args.iters, args.out)
        print(
            f"L={model['L']!r} U={model['U']!r} kappa={model['kappa']!r} "
            f"alpha*={model['alpha_star']!r} q*={model['q_star']!r}"
        )
        print(f"{trace.status} after {trace.iterations} iterations -> {model_path}")
        return status
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"dataset error in {getattr(args, 'data', '?')}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
