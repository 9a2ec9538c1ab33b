"""Gradient descent and Heavy-Ball written as fixed-point iterations.

The gradient step ``T(x) = x - alpha * grad f(x)`` has the minimizers of
``f`` as its fixed points and is a contraction with factor
``max(|1 - U alpha|, |1 - L alpha|)`` on F(L, U).  Lifting ``T`` to pairs
``(current, previous)`` and adding a momentum term yields the Heavy-Ball
operator, which keeps the same fixed point but contracts faster.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DivergenceError, UnsupportedOperationError
from .objective import QuadraticObjective, SmoothnessBounds, as_vector, exact_minimizer

__all__ = [
    "GradientStepOperator",
    "HeavyBallParams",
    "StackedState",
    "IterationTrace",
    "RateBounds",
    "DIVERGENCE_NORM",
    "apply_gradient_step",
    "contraction_factor",
    "optimal_step",
    "run_fixed_point",
    "gd_upper_bound",
    "hb_params",
    "apply_stacked",
    "apply_hb_operator",
    "run_stacked",
    "run_heavy_ball",
    "hb_upper_bound",
    "hb_constant",
    "fixed_point_residual",
    "rate_bounds",
    "TRACE_COLUMNS",
    "write_trace_csv",
    "read_trace_csv",
    "format_real",
]

DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class GradientStepOperator:
    """The map ``x -> x - alpha * grad f(x)`` for a fixed nonzero ``alpha``."""

    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if alpha == 0 or not math.isfinite(alpha):
            raise ValueError(f"step size must be finite and nonzero, got {self.alpha}")
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class HeavyBallParams:
    """Momentum step ``alpha_tilde`` and weight ``beta_tilde`` tuned for ``bounds``."""

    alpha_tilde: float
    beta_tilde: float
    bounds: SmoothnessBounds

    @property
    def rate(self) -> float:
        """``sqrt(beta_tilde)``, the spectral radius of every iteration block."""
        return math.sqrt(self.beta_tilde)


@dataclass(frozen=True)
class StackedState:
    """A point ``(u, v)`` of the doubled space R^{2n}."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = as_vector(self.u, name="u")
        v = as_vector(self.v, u.size, name="v")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])


@dataclass
class IterationTrace:
    """Record of an iteration run.

    ``iterates[k]`` is ``x^(k)``; ``gradients[k]`` is the gradient at it.
    ``errors[k] = ||x^(k) - x_star||`` when a reference minimizer is known
    (``approximate_errors`` marks a reference taken from a long run rather
    than a direct solve).  ``status`` is one of ``"converged"``,
    ``"budget"`` or ``"diverged"``.
    """

    method: str
    iterates: np.ndarray
    gradients: np.ndarray
    grad_norms: np.ndarray
    errors: Optional[np.ndarray] = None
    x_star: Optional[np.ndarray] = None
    status: str = "budget"
    params: dict = field(default_factory=dict)
    approximate_errors: bool = False

    def __post_init__(self):
        m = len(self.iterates)
        if len(self.gradients) != m or len(self.grad_norms) != m:
            raise ValueError("iterate, gradient and gradient-norm records must align")
        if self.errors is not None:
            if len(self.errors) != m:
                raise ValueError("error record must align with iterates")
            if np.any(np.asarray(self.errors) < 0):
                raise ValueError("errors must be nonnegative")

    def __len__(self):
        return len(self.iterates)

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def first_below(self, threshold: float) -> Optional[int]:
        """Smallest ``k`` with ``errors[k] <= threshold`` (None if never)."""
        if self.errors is None:
            raise UnsupportedOperationError("trace has no error record")
        hits = np.nonzero(self.errors <= threshold)[0]
        return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class RateBounds:
    """Theoretical error curves indexed by ``k = 0..k_max``.

    Entries are NaN where a curve does not apply (Heavy-Ball at ``k = 0``,
    or any accelerated curve when ``kappa == 1``).
    """

    k: np.ndarray
    gd_upper: np.ndarray
    hb_upper: np.ndarray
    fom_lower: np.ndarray
    kappa: float
    initial_error: float
    initial_error_prev: float
    delta_abs: float = 0.0


def _check_dim(f, x, name="x") -> np.ndarray:
    return as_vector(x, f.n, name=name)


def apply_gradient_step(op: GradientStepOperator, f, x) -> np.ndarray:
    x = _check_dim(f, x)
    return x - op.alpha * np.asarray(f.gradient(x), dtype=np.float64)


def contraction_factor(alpha: float, bounds: SmoothnessBounds) -> float:
    """Lipschitz constant ``max(|1 - U alpha|, |1 - L alpha|)`` of the gradient step."""
    return max(abs(1.0 - bounds.U * alpha), abs(1.0 - bounds.L * alpha))


def optimal_step(bounds: SmoothnessBounds) -> tuple[float, float]:
    """Step ``2 / (L + U)`` and its contraction factor ``(kappa - 1) / (kappa + 1)``."""
    kappa = bounds.kappa
    return 2.0 / (bounds.L + bounds.U), (kappa - 1.0) / (kappa + 1.0)


def _reference_minimizer(f, x_star):
    if x_star is not None:
        return as_vector(x_star, f.n, name="x_star")
    if isinstance(f, QuadraticObjective):
        return exact_minimizer(f)
    return None


def _finish(method, iterates, gradients, x_star, status, params, approximate=False):
    its = np.array(iterates)
    grads = np.array(gradients)
    norms = np.linalg.norm(grads, axis=1)
    errors = None
    if x_star is not None:
        errors = np.linalg.norm(its - x_star, axis=1)
    return IterationTrace(
        method=method,
        iterates=its,
        gradients=grads,
        grad_norms=norms,
        errors=errors,
        x_star=x_star,
        status=status,
        params=params,
        approximate_errors=approximate,
    )


def _diverged(x: np.ndarray) -> bool:
    return not np.all(np.isfinite(x)) or float(np.linalg.norm(x)) > DIVERGENCE_NORM


def _gradient_or_nan(f, x):
    try:
        with np.errstate(all="ignore"):
            return np.asarray(f.gradient(x), dtype=np.float64)
    except (ValueError, OverflowError):
        return np.full(x.shape, np.nan)


def _drive(f, step, method, x_init, x_prev, max_iters, grad_tol, x_star, params):
    """Shared loop: ``step(x, x_prev, g) -> x_next``."""
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    if not grad_tol >= 0:
        raise ValueError("grad_tol must be nonnegative")
    x = _check_dim(f, x_init, "x_init")
    iterates, gradients = [], []
    status = "budget"
    k = 0
    while True:
        g = np.asarray(f.gradient(x), dtype=np.float64)
        iterates.append(x)
        gradients.append(g)
        if not np.all(np.isfinite(g)):
            status = "diverged"
            break
        if float(np.linalg.norm(g)) <= grad_tol:
            status = "converged"
            break
        if k >= max_iters:
            break
        x_next = step(x, x_prev, g)
        k += 1
        x_prev, x = x, x_next
        if _diverged(x):
            iterates.append(x)
            gradients.append(_gradient_or_nan(f, x))
            status = "diverged"
            break
    if status == "diverged":
        with np.errstate(all="ignore"):
            trace = _finish(method, iterates, gradients, None, status, params)
            if x_star is not None:
                trace.x_star = x_star
                trace.errors = np.linalg.norm(trace.iterates - x_star, axis=1)
        raise DivergenceError(
            f"{method} iterate left the finite region after {len(iterates) - 1} steps",
            trace=trace,
        )
    return _finish(method, iterates, gradients, x_star, status, params)


def run_fixed_point(
    f,
    op: GradientStepOperator,
    x_init,
    max_iters: int = 10_000,
    grad_tol: float = 1e-10,
    x_star=None,
) -> IterationTrace:
    """Iterate ``x <- x - alpha grad f(x)`` (plain gradient descent).

    Stops once ``||grad f(x^(k))|| <= grad_tol`` or after ``max_iters``
    steps.  Raises :class:`DivergenceError` (carrying the partial trace)
    when an iterate becomes non-finite or exceeds norm ``1e12``.
    """
    alpha = op.alpha

    def step(x, _prev, g):
        return x - alpha * g

    ref = _reference_minimizer(f, x_star)
    trace = _drive(f, step, "GD", x_init, None, max_iters, grad_tol, ref, {"alpha": alpha})
    if ref is None:
        _attach_reference(
            trace,
            _drive(f, step, "GD", trace.final, None, _reference_budget(max_iters),
                   min(grad_tol, 1e-13), None, {}),
        )
    return trace


def _reference_budget(max_iters: int) -> int:
    return max(10 * max_iters, 10_000)


def _attach_reference(trace: IterationTrace, reference: IterationTrace) -> None:
    # errors of a non-quadratic run, measured against the end of a longer run
    trace.x_star = reference.final
    trace.errors = np.linalg.norm(trace.iterates - reference.final, axis=1)
    trace.approximate_errors = True


def gd_upper_bound(k: int, kappa: float, initial_error: float) -> float:
    """``((kappa - 1) / (kappa + 1))^k * initial_error``."""
    if k < 0 or kappa < 1 or initial_error < 0:
        raise ValueError("need k >= 0, kappa >= 1, initial_error >= 0")
    return ((kappa - 1.0) / (kappa + 1.0)) ** k * initial_error


def hb_params(bounds: SmoothnessBounds) -> HeavyBallParams:
    sL, sU = math.sqrt(bounds.L), math.sqrt(bounds.U)
    alpha = 4.0 / (sU + sL) ** 2
    beta = ((sU - sL) / (sU + sL)) ** 2
    return HeavyBallParams(alpha, beta, bounds)


def apply_stacked(f, alpha: float, s: StackedState) -> StackedState:
    """``(u, v) -> (u - alpha grad f(u), u)``."""
    u = _check_dim(f, s.u, "u")
    return StackedState(u - alpha * np.asarray(f.gradient(u), dtype=np.float64), u)


def apply_hb_operator(f, p: HeavyBallParams, s: StackedState) -> StackedState:
    """``(u, v) -> (u - alpha grad f(u) + beta (u - v), u)``."""
    u = _check_dim(f, s.u, "u")
    v = _check_dim(f, s.v, "v")
    g = np.asarray(f.gradient(u), dtype=np.float64)
    return StackedState(u - p.alpha_tilde * g + p.beta_tilde * (u - v), u)


def run_stacked(f, alpha: float, s0: StackedState, steps: int) -> list[StackedState]:
    """Apply the stacked gradient operator ``steps`` times; returns all states."""
    states = [s0]
    for _ in range(steps):
        states.append(apply_stacked(f, alpha, states[-1]))
    return states


def run_heavy_ball(
    f,
    p: HeavyBallParams,
    x_init,
    max_iters: int = 10_000,
    grad_tol: float = 1e-10,
    x_star=None,
    x_prev=None,
    warm_start: bool = False,
) -> IterationTrace:
    """Heavy-Ball iteration with the previous point initialised to zero.

    ``x^(k) = x^(k-1) - a grad f(x^(k-1)) + b (x^(k-1) - x^(k-2))``.
    ``warm_start=True`` sets ``x^(-1) = x^(0)`` instead; an explicit
    ``x_prev`` overrides both.  The previous point used is stored in
    ``trace.params["x_prev"]``.
    """
    x_init = _check_dim(f, x_init, "x_init")
    if x_prev is not None:
        prev = _check_dim(f, x_prev, "x_prev")
    elif warm_start:
        prev = x_init.copy()
    else:
        prev = np.zeros(f.n)
    a, b = p.alpha_tilde, p.beta_tilde

    def step(x, xp, g):
        return x - a * g + b * (x - xp)

    params = {"alpha_tilde": a, "beta_tilde": b, "x_prev": prev}
    ref = _reference_minimizer(f, x_star)
    trace = _drive(f, step, "HB", x_init, prev, max_iters, grad_tol, ref, params)
    if ref is None:
        last_prev = trace.iterates[-2] if len(trace) > 1 else prev
        _attach_reference(
            trace,
            _drive(f, step, "HB", trace.final, last_prev, _reference_budget(max_iters),
                   min(grad_tol, 1e-13), None, {}),
        )
    return trace


def hb_constant(bounds: SmoothnessBounds) -> float:
    """``C(kappa) = 4 (2 + 2 beta + alpha) (sqrt(kappa) + 1) / (sqrt(kappa) - 1)``."""
    kappa = bounds.kappa
    if kappa <= 1:
        raise UnsupportedOperationError("Heavy-Ball bound constant is undefined for kappa == 1")
    p = hb_params(bounds)
    sk = math.sqrt(kappa)
    return 4.0 * (2.0 + 2.0 * p.beta_tilde + p.alpha_tilde) * (sk + 1.0) / (sk - 1.0)


def hb_upper_bound(k: int, bounds: SmoothnessBounds, err0: float, err_minus1: float) -> float:
    """``C(kappa) k r^k (err0 + err_minus1)`` with ``r = (sqrt(kappa) - 1) / (sqrt(kappa) + 1)``."""
    if k < 1:
        raise ValueError("the Heavy-Ball bound is stated for k >= 1")
    C = hb_constant(bounds)
    sk = math.sqrt(bounds.kappa)
    r = (sk - 1.0) / (sk + 1.0)
    return C * k * r**k * (err0 + err_minus1)


def fixed_point_residual(f, x) -> float:
    """``||x - T_1 x||``, which equals ``||grad f(x)||``."""
    x = _check_dim(f, x)
    return float(np.linalg.norm(x - apply_gradient_step(GradientStepOperator(1.0), f, x)))


def rate_bounds(
    bounds: SmoothnessBounds,
    k_max: int,
    initial_error: float = 1.0,
    initial_error_prev: float = 1.0,
    delta_abs: float = 0.0,
    gd_factor: Optional[float] = None,
) -> RateBounds:
    """Tabulate the GD upper, Heavy-Ball upper and first-order lower bounds.

    ``gd_factor`` replaces the optimal contraction factor when GD runs
    with a non-optimal step (pass ``contraction_factor(alpha, bounds)``);
    a factor ``>= 1`` gives an all-NaN GD curve.
    """
    from .worstcase import fom_lower_bound

    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    kappa = bounds.kappa
    ks = np.arange(k_max + 1)
    if gd_factor is None:
        gd = np.array([gd_upper_bound(int(k), kappa, initial_error) for k in ks])
    elif gd_factor < 1:
        gd = gd_factor**ks * initial_error
    else:
        gd = np.full(ks.size, np.nan)
    hb = np.full(ks.size, np.nan)
    lo = np.full(ks.size, np.nan)
    if kappa > 1:
        for k in ks[1:]:
            hb[k] = hb_upper_bound(int(k), bounds, initial_error, initial_error_prev)
        for k in ks:
            lo[k] = fom_lower_bound(int(k), kappa, initial_error, delta_abs)
    return RateBounds(ks, gd, hb, lo, kappa, initial_error, initial_error_prev, delta_abs)


TRACE_COLUMNS = ("k", "error", "grad_norm", "gd_bound", "hb_bound", "lower_bound")


def format_real(value) -> str:
    """Shortest round-trip decimal for a float; empty for missing values."""
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


def write_trace_csv(path, rows: Sequence[dict]) -> None:
    """Write rows keyed by :data:`TRACE_COLUMNS`; missing or NaN cells stay empty."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            out = [str(int(row["k"]))]
            out += [format_real(row.get(col)) for col in TRACE_COLUMNS[1:]]
            writer.writerow(out)


def read_trace_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        rows = []
        for cells in reader:
            row = {"k": int(cells[0])}
            for col, cell in zip(TRACE_COLUMNS[1:], cells[1:]):
                row[col] = float(cell) if cell != "" else None
            rows.append(row)
    return rows
