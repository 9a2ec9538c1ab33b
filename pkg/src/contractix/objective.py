"""Objectives in the class of smooth, strongly convex functions.

A function belongs to the class F(L, U) when every eigenvalue of its
Hessian lies in ``[L, U]`` with ``0 < L <= U``.  The workhorse member is
the quadratic ``f(x) = 0.5 x^T Q x + q^T x + c``; regularized linear
regression reduces to one, and any smooth member can be approximated by
one around a point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import (
    DatasetError,
    DimensionError,
    SingularMatrixError,
    UnsupportedOperationError,
)

__all__ = [
    "SmoothnessBounds",
    "QuadraticObjective",
    "RidgeRegressionProblem",
    "SmoothObjective",
    "as_vector",
    "eval_quadratic",
    "gradient_quadratic",
    "ridge_objective_value",
    "ridge_objective_gradient",
    "ridge_to_quadratic",
    "local_quadratic_model",
    "model_error_bound",
    "exact_minimizer",
    "random_quadratic",
    "read_ridge_csv",
    "write_ridge_csv",
]


def as_vector(x, n: Optional[int] = None, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array, optionally of length ``n``."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must have at least one entry")
    if n is not None and arr.size != n:
        raise DimensionError(f"{name} has dimension {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SmoothnessBounds:
    """Hessian eigenvalue bounds ``L`` (strong convexity) and ``U`` (smoothness)."""

    L: float
    U: float

    def __post_init__(self):
        L, U = float(self.L), float(self.U)
        if not (math.isfinite(L) and math.isfinite(U)):
            raise ValueError("bounds must be finite")
        if not L > 0:
            raise ValueError(f"L must be positive, got {L}")
        if U < L:
            raise ValueError(f"U must satisfy U >= L, got L={L}, U={U}")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "U", U)

    @property
    def kappa(self) -> float:
        """Condition number ``U / L``."""
        return self.U / self.L

    @classmethod
    def from_kappa(cls, kappa: float, L: float = 1.0) -> "SmoothnessBounds":
        return cls(L, kappa * L)


class QuadraticObjective:
    """The quadratic ``0.5 x^T Q x + q^T x + c`` with ``Q`` symmetric positive definite.

    Parameters
    ----------
    Q : (n, n) array_like
        Hessian; must be exactly symmetric as stored.
    q : (n,) array_like
        Linear term.
    c : float
        Constant offset.
    bounds : SmoothnessBounds, optional
        Declared eigenvalue bounds.  When omitted they are taken from a
        dense eigensolve of ``Q``.  Declared bounds are checked against
        the eigenvalues with tolerance ``1e-9 * U``.
    """

    def __init__(self, Q, q, c: float = 0.0, bounds: Optional[SmoothnessBounds] = None):
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim == 0:
            Q = Q.reshape(1, 1)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] == 0:
            raise DimensionError(f"Q must be a non-empty square matrix, got shape {Q.shape}")
        n = Q.shape[0]
        if not np.all(np.isfinite(Q)):
            raise ValueError("Q contains non-finite entries")
        if not np.array_equal(Q, Q.T):
            raise ValueError("Q must be exactly symmetric")
        q = as_vector(q, n, name="q")
        c = float(c)
        if not math.isfinite(c):
            raise ValueError("c must be finite")

        eigs = np.linalg.eigvalsh(Q)
        if bounds is None:
            if eigs[0] <= 0:
                raise ValueError(
                    f"Q must be positive definite, smallest eigenvalue is {eigs[0]:.3e}"
                )
            bounds = SmoothnessBounds(eigs[0], eigs[-1])
        else:
            tol = 1e-9 * bounds.U
            if eigs[0] < bounds.L - tol or eigs[-1] > bounds.U + tol:
                raise ValueError(
                    f"eigenvalues of Q span [{eigs[0]:.6g}, {eigs[-1]:.6g}], "
                    f"outside declared bounds [{bounds.L:.6g}, {bounds.U:.6g}]"
                )
        self.Q = _frozen(Q)
        self.q = _frozen(q)
        self.c = c
        self.bounds = bounds
        self.eigenvalues = _frozen(eigs)

    @property
    def n(self) -> int:
        return self.q.size

    def value(self, x) -> float:
        return eval_quadratic(self, x)

    def gradient(self, x) -> np.ndarray:
        return gradient_quadratic(self, x)

    def hessian(self, x=None) -> np.ndarray:
        return self.Q

    def __repr__(self):
        return (
            f"QuadraticObjective(n={self.n}, L={self.bounds.L:.6g}, "
            f"U={self.bounds.U:.6g}, c={self.c:.6g})"
        )


@dataclass(frozen=True)
class SmoothObjective:
    """A user-supplied objective given by callbacks.

    The bounds are declared by the caller; nothing here estimates them.
    """

    n: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    bounds: SmoothnessBounds
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class RidgeRegressionProblem:
    """Regularized least squares on ``N`` samples with ``n`` features.

    ``D`` stores one feature vector per column (shape ``(n, N)``) and
    ``y`` the ``N`` labels.  The objective is
    ``(1/N) sum_i (y_i - x^T d_i)^2 + lam ||x||^2``.
    """

    D: np.ndarray
    y: np.ndarray
    lam: float
    feature_names: tuple = field(default=(), compare=False)

    def __post_init__(self):
        D = np.asarray(self.D, dtype=np.float64)
        if D.ndim == 1:
            D = D.reshape(-1, 1)
        if D.ndim != 2 or D.shape[0] == 0:
            raise DimensionError(f"D must be an (n, N) matrix with n >= 1, got shape {D.shape}")
        if D.shape[1] == 0:
            raise ValueError("dataset must contain at least one sample")
        y = as_vector(self.y, D.shape[1], name="y")
        if not np.all(np.isfinite(D)):
            raise ValueError("D contains non-finite entries")
        lam = float(self.lam)
        if not (math.isfinite(lam) and lam > 0):
            raise ValueError(f"regularization weight must be positive, got {self.lam}")
        object.__setattr__(self, "D", _frozen(D))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def N(self) -> int:
        return self.D.shape[1]


def eval_quadratic(obj: QuadraticObjective, x) -> float:
    x = as_vector(x, obj.n)
    return float(0.5 * (x @ (obj.Q @ x)) + obj.q @ x + obj.c)


def gradient_quadratic(obj: QuadraticObjective, x) -> np.ndarray:
    x = as_vector(x, obj.n)
    return obj.Q @ x + obj.q


def ridge_objective_value(p: RidgeRegressionProblem, x) -> float:
    """Evaluate the regression objective directly from the samples."""
    x = as_vector(x, p.n)
    residual = p.y - p.D.T @ x
    return float(np.mean(residual**2) + p.lam * (x @ x))


def ridge_objective_gradient(p: RidgeRegressionProblem, x) -> np.ndarray:
    x = as_vector(x, p.n)
    residual = p.y - p.D.T @ x
    return -(2.0 / p.N) * (p.D @ residual) + 2.0 * p.lam * x


def ridge_to_quadratic(p: RidgeRegressionProblem) -> QuadraticObjective:
    """Rewrite the regression objective as a quadratic with Hessian ``Q_LR``.

    ``Q_LR = lam I + (1/N) sum_i d_i d_i^T`` and the returned quadratic is
    exactly one half of the regression objective, so both share the
    minimizer and ``gradient = 0.5 * ridge_objective_gradient``.  The
    bounds are ``L = lam`` and ``U = lam + lambda_max(D^T D)``.
    """
    D, y, N = p.D, p.y, p.N
    Q = p.lam * np.eye(p.n) + (D @ D.T) / N
    Q = 0.5 * (Q + Q.T)
    q = -(D @ y) / N
    c = 0.5 * float(np.mean(y**2))
    top = float(np.linalg.eigvalsh(D.T @ D)[-1]) if N <= p.n else float(
        np.linalg.eigvalsh(D @ D.T)[-1]
    )
    bounds = SmoothnessBounds(p.lam, p.lam + max(top, 0.0))
    return QuadraticObjective(Q, q, c, bounds)


def local_quadratic_model(f, x0) -> QuadraticObjective:
    """Second-order Taylor model of ``f`` around ``x0``.

    The model matches ``f`` in value, gradient and Hessian at ``x0``.
    """
    hess = getattr(f, "hessian", None)
    if hess is None:
        raise UnsupportedOperationError("objective has no Hessian evaluator")
    x0 = as_vector(x0, f.n, name="x0")
    Q = np.asarray(hess(x0), dtype=np.float64).reshape(f.n, f.n)
    Q = 0.5 * (Q + Q.T)
    g = np.asarray(f.gradient(x0), dtype=np.float64)
    q = g - Q @ x0
    c = float(f.value(x0)) + 0.5 * (x0 @ (Q @ x0)) - x0 @ g
    return QuadraticObjective(Q, q, c, f.bounds)


def model_error_bound(f, x0, x) -> float:
    """Upper bound ``U ||x - x0||^2`` on the error of the local quadratic model."""
    x0 = as_vector(x0, f.n, name="x0")
    x = as_vector(x, f.n)
    d = x - x0
    return float(f.bounds.U * (d @ d))


def exact_minimizer(obj: QuadraticObjective) -> np.ndarray:
    """Solve ``Q x = -q`` by a dense LU solve."""
    try:
        x = np.linalg.solve(obj.Q, -obj.q)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Q is singular: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("Q is numerically singular")
    return x


def random_quadratic(
    n: int,
    kappa: float,
    rng: np.random.Generator,
    L: float = 1.0,
    minimizer_scale: float = 1.0,
) -> QuadraticObjective:
    """Random quadratic in F(L, kappa L) whose spectrum contains both endpoints.

    ``Q = V^T diag(lam) V`` with ``lam`` log-uniform in ``[L, U]`` and
    ``V`` a Haar-random orthogonal matrix.  The linear term is chosen so
    the minimizer is a standard normal vector times ``minimizer_scale``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    U = kappa * L
    if n == 1:
        lam = np.array([L])
    else:
        lam = np.exp(rng.uniform(np.log(L), np.log(U), size=n))
        lam[0], lam[1] = L, U
    A = rng.standard_normal((n, n))
    V, R = np.linalg.qr(A)
    V = V * np.sign(np.diag(R))
    Q = V.T @ np.diag(lam) @ V
    Q = 0.5 * (Q + Q.T)
    x_star = minimizer_scale * rng.standard_normal(n)
    q = -Q @ x_star
    return QuadraticObjective(Q, q, 0.0, SmoothnessBounds(L, U))


def read_ridge_csv(path, lam: float) -> RidgeRegressionProblem:
    """Load a dataset with header ``f1,...,fn,label`` and one sample per row."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[-1] != "label":
            raise DatasetError("header must be f1,...,fn,label", line=1)
        width = len(header)
        features, labels = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != width:
                raise DatasetError(f"expected {width} fields, got {len(row)}", line=line)
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise DatasetError(str(exc), line=line) from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetError("non-finite value", line=line)
            features.append(values[:-1])
            labels.append(values[-1])
    if not labels:
        raise DatasetError("dataset contains no samples")
    D = np.array(features, dtype=np.float64).T
    return RidgeRegressionProblem(D, np.array(labels), lam, tuple(header[:-1]))


def write_ridge_csv(path, D, y) -> None:
    D = np.asarray(D, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = D.shape[0]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i + 1}" for i in range(n)] + ["label"])
        for col, label in zip(D.T, y):
            writer.writerow([repr(float(v)) for v in col] + [repr(float(label))])
