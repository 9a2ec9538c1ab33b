"""The circulant hard instance behind the first-order lower bound.

The instance is ``f(x) = 0.5 x^T P x + q^T x`` with
``P = (L (kappa - 1) / 4) * C + L I``, where ``C`` is the circulant matrix
with first row ``(2, -1, 0, ..., 0, -1)``, and ``q = (L (kappa - 1) / 4) e_1``.
Its spectrum is the DFT of the first row, which places every eigenvalue in
``[L, U]``.  The entries of the minimizer are a Riemann sum whose limit
decays like ``((sqrt(kappa) - 1) / (sqrt(kappa) + 1))^k``; any method that
only moves within the span of observed gradients cannot reach the far
entries quickly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional

import mpmath
import numpy as np

from .errors import SingularMatrixError
from .fixedpoint import IterationTrace, format_real
from .objective import QuadraticObjective, SmoothnessBounds, as_vector

__all__ = [
    "CirculantMatrix",
    "WorstCaseInstance",
    "SpanCertificate",
    "dft",
    "idft",
    "circulant_spectrum",
    "circulant_eigenvalues",
    "circulant_solve",
    "build_worst_case",
    "minimizer_entry_closed_form",
    "spectral_minimizer_entry",
    "delta_n_estimate",
    "delta_n_exact",
    "delta_extrapolated",
    "fom_lower_bound",
    "verify_zero_tail",
    "verify_zero_band",
    "verify_span_membership",
    "write_instance_csv",
]


@dataclass(frozen=True)
class CirculantMatrix:
    """Matrix whose row ``r`` is the first row cyclically shifted right by ``r``."""

    first_row: np.ndarray

    def __post_init__(self):
        row = as_vector(self.first_row, name="first_row").copy()
        row.setflags(write=False)
        object.__setattr__(self, "first_row", row)

    @property
    def n(self) -> int:
        return self.first_row.size

    def dense(self) -> np.ndarray:
        n = self.n
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
        return self.first_row[idx]

    def matvec(self, x) -> np.ndarray:
        x = as_vector(x, self.n)
        return self.dense() @ x


def _dft_matrix(n: int, sign: int) -> np.ndarray:
    # exponent index reduced mod n keeps the angles small and exact
    idx = np.outer(np.arange(n), np.arange(n)) % n
    return np.exp(sign * 2j * np.pi * idx / n)


def dft(x, method: str = "direct") -> np.ndarray:
    """``X_l = sum_i x_i exp(-2 pi j i l / n)`` (0-based), direct O(n^2) or FFT."""
    x = np.asarray(x)
    if method == "fft":
        return np.fft.fft(x)
    if method != "direct":
        raise ValueError(f"unknown DFT method {method!r}")
    return _dft_matrix(x.size, -1) @ x


def idft(X, method: str = "direct") -> np.ndarray:
    X = np.asarray(X)
    if method == "fft":
        return np.fft.ifft(X)
    if method != "direct":
        raise ValueError(f"unknown DFT method {method!r}")
    return (_dft_matrix(X.size, +1) @ X) / X.size


def circulant_spectrum(c: CirculantMatrix, method: str = "direct") -> np.ndarray:
    """Complex eigenvalues: the DFT of the first row."""
    return dft(c.first_row.astype(np.complex128), method)


def circulant_eigenvalues(c: CirculantMatrix, method: str = "direct") -> np.ndarray:
    """Real eigenvalues of a circulant with symmetric first row.

    Raises ``ValueError`` when the imaginary parts exceed ``1e-10 ||p||``,
    i.e. when the first row is not symmetric.
    """
    lam = circulant_spectrum(c, method)
    tol = 1e-10 * max(float(np.linalg.norm(c.first_row)), np.finfo(float).tiny)
    if np.max(np.abs(lam.imag)) > tol:
        raise ValueError("circulant has complex eigenvalues (first row is not symmetric)")
    return lam.real.copy()


def circulant_solve(c: CirculantMatrix, b, method: str = "direct") -> np.ndarray:
    """Solve ``C x = b`` by forward DFT, division per mode, inverse DFT."""
    b = as_vector(b, c.n, name="b")
    # row-shift convention: DFT(C x) = conj(DFT(p)) * DFT(x) for real p
    lam = np.conj(circulant_spectrum(c, method))
    mags = np.abs(lam)
    if mags.max() == 0 or mags.min() < 1e-12 * mags.max():
        raise SingularMatrixError("circulant matrix has a (near) zero eigenvalue")
    x = idft(dft(b.astype(np.complex128), method) / lam, method)
    return x.real.copy()


def _rate(kappa: float) -> float:
    sk = math.sqrt(kappa)
    return (sk - 1.0) / (sk + 1.0)


def minimizer_entry_closed_form(kappa: float, k: int) -> float:
    """Infinite-dimensional limit of entry ``k`` (1-based) of the minimizer.

    ``-((kappa - 1) / (4 sqrt(kappa))) * r^(k - 1)`` with
    ``r = (sqrt(kappa) - 1) / (sqrt(kappa) + 1)``.  The exponent is ``k - 1``:
    the first entry tends to ``-(kappa - 1) / (4 sqrt(kappa))``.
    """
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    if k < 1:
        raise ValueError("k is a 1-based index")
    return -(kappa - 1.0) / (4.0 * math.sqrt(kappa)) * _rate(kappa) ** (k - 1)


def _working_digits(kappa: float, n: int) -> int:
    # the finite-n gap shrinks like r^n; resolve it with ~25 spare digits
    r = _rate(kappa)
    if r <= 0:
        return 30
    return int(min(30 + n * -math.log10(r), 1500))


def spectral_minimizer_entry(kappa: float, n: int, k: int, dps: Optional[int] = None):
    """Entry ``k`` of the size-``n`` minimizer, as an mpmath number.

    Evaluates the spectral sum
    ``-(1/n) sum_i cos(2 pi (i-1)(k-1)/n) / (2 (1 - cos(2 pi (i-1)/n)) + 4/(kappa-1))``
    in extended precision (the entries do not depend on ``L``).
    """
    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    ctx = mpmath.MPContext()
    ctx.dps = dps if dps is not None else _working_digits(kappa, n)
    kap = ctx.mpf(kappa)
    shift = 4 / (kap - 1)
    cos_tab = [ctx.cospi(ctx.mpf(2 * i) / n) for i in range(n)]
    total = ctx.mpf(0)
    for i in range(n):
        total += cos_tab[(i * (k - 1)) % n] / (2 * (1 - cos_tab[i]) + shift)
    return -total / n, ctx


def _closed_form_mp(ctx, kappa, k):
    kap = ctx.mpf(kappa)
    sk = ctx.sqrt(kap)
    return -(kap - 1) / (4 * sk) * ((sk - 1) / (sk + 1)) ** (k - 1)


def delta_n_exact(kappa: float, n: int, k: int = 1):
    """The gap at entry ``k`` as an mpmath number, with its context.

    Use this when the gap may underflow double precision.
    """
    entry, ctx = spectral_minimizer_entry(kappa, n, k)
    return entry - _closed_form_mp(ctx, kappa, k), ctx


def _delta(kappa: float, n: int, k: int) -> float:
    return float(delta_n_exact(kappa, n, k)[0])


def delta_n_estimate(instance: "WorstCaseInstance", k: int) -> float:
    """Gap between entry ``k`` of the size-``n`` minimizer and its ``n -> inf`` limit.

    Measured with the extended-precision spectral sum, because the gap
    drops below double-precision resolution once ``n`` reaches a few
    hundred.
    """
    if not 1 <= k <= instance.n:
        raise ValueError("k must lie in 1..n")
    return _delta(instance.bounds.kappa, instance.n, k)


def delta_extrapolated(kappa: float, n: int, k: int = 1):
    """Aitken extrapolation of the gap from sizes ``n - 2, n - 1, n``.

    The gap decays geometrically in ``n``, so the extrapolated limit should
    sit far below the measured gap at ``n``.  Returned as an mpmath number,
    since either may be below double-precision range.
    """
    if n < 3 or k > n - 2:
        raise ValueError("need n >= 3 and k <= n - 2")
    ctx = mpmath.MPContext()
    ctx.dps = 2 * _working_digits(kappa, n)
    xs = [ctx.mpf(spectral_minimizer_entry(kappa, m, k, dps=ctx.dps)[0]) for m in (n - 2, n - 1, n)]
    denom = xs[2] - 2 * xs[1] + xs[0]
    limit = xs[2] if denom == 0 else xs[2] - (xs[2] - xs[1]) ** 2 / denom
    return limit - _closed_form_mp(ctx, kappa, k)


@dataclass(frozen=True)
class WorstCaseInstance:
    """The hard quadratic of dimension ``n`` for the class ``bounds``."""

    n: int
    bounds: SmoothnessBounds
    P: CirculantMatrix
    q_tilde: np.ndarray
    objective: QuadraticObjective
    x0: np.ndarray
    eigenvalues: np.ndarray

    @cached_property
    def delta_n(self) -> float:
        """Measured gap at entry 1 between finite ``n`` and the limit."""
        return delta_n_estimate(self, 1)


def build_worst_case(n: int, L: float, kappa: float, method: str = "direct") -> WorstCaseInstance:
    if n < 3:
        raise ValueError("the worst-case instance needs n >= 3")
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    bounds = SmoothnessBounds(L, kappa * L)
    scale = L * (kappa - 1.0) / 4.0
    row = np.zeros(n)
    row[0], row[1], row[-1] = 2.0, -1.0, -1.0
    p = scale * row
    p[0] += L
    P = CirculantMatrix(p)
    q_tilde = np.zeros(n)
    q_tilde[0] = scale
    lam = circulant_eigenvalues(P, method)
    objective = QuadraticObjective(P.dense(), q_tilde, 0.0, bounds)
    x0 = -circulant_solve(P, q_tilde, method)
    q_tilde.setflags(write=False)
    x0.setflags(write=False)
    lam.setflags(write=False)
    return WorstCaseInstance(n, bounds, P, q_tilde, objective, x0, lam)


def fom_lower_bound(k: int, kappa: float, initial_error: float, delta_abs: float = 0.0) -> float:
    """``e0 (1 - 1/sqrt(kappa)) / (1 + sqrt(kappa)) r^k - |delta|``, floored at zero."""
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    if k < 0:
        raise ValueError("k must be nonnegative")
    sk = math.sqrt(kappa)
    value = initial_error * (1.0 - 1.0 / sk) / (1.0 + sk) * _rate(kappa) ** k - abs(delta_abs)
    return max(value, 0.0)


def verify_zero_tail(trace: IterationTrace, instance: WorstCaseInstance, tol: float = 1e-12) -> bool:
    """True iff ``|x^(k)_l| <= tol`` for every 1-based ``l > k`` and every ``k``."""
    its = np.asarray(trace.iterates)
    if its.shape[1] != instance.n:
        raise ValueError("trace dimension does not match the instance")
    for k, x in enumerate(its):
        if np.any(np.abs(x[k:]) > tol):
            return False
    return True


def verify_zero_band(trace: IterationTrace, instance: WorstCaseInstance, tol: float = 1e-12) -> bool:
    """Wrap-around version of the zero-tail check.

    The corner entries of the circulant couple coordinate 1 to coordinate
    ``n``, so the support of ``x^(k)`` grows from both ends: entries
    ``k+1 .. n-k+1`` (1-based) stay zero while ``2k < n``.  That band
    contains entry ``k+1``, so ``||x^(k) - x0|| >= |x0_{k+1}|`` still holds.
    """
    its = np.asarray(trace.iterates)
    n = instance.n
    if its.shape[1] != n:
        raise ValueError("trace dimension does not match the instance")
    for k, x in enumerate(its):
        if 2 * k >= n:
            break
        if np.any(np.abs(x[k : n - k + 1]) > tol):
            return False
    return True


@dataclass(frozen=True)
class SpanCertificate:
    """Per-iterate residual of projecting ``x^(k)`` onto the observed span."""

    residuals: np.ndarray
    thresholds: np.ndarray

    @property
    def passed(self) -> np.ndarray:
        return self.residuals <= self.thresholds

    @property
    def ok(self) -> bool:
        return bool(np.all(self.passed))


def _project_out(basis: list, v: np.ndarray) -> np.ndarray:
    # two passes of modified Gram-Schmidt
    for _ in range(2):
        for b in basis:
            v = v - (b @ v) * b
    return v


def verify_span_membership(trace, gradients=None, rtol: float = 1e-8) -> SpanCertificate:
    """Check ``x^(k) in span{x^(0), g^(0), ..., g^(k-1)}`` for every ``k``.

    ``gradients`` defaults to ``trace.gradients``.  The basis is
    orthonormalized incrementally; directions whose residual norm is below
    ``1e-13`` of their original norm are dropped as already spanned.
    """
    its = np.asarray(trace.iterates if hasattr(trace, "iterates") else trace, dtype=float)
    grads = np.asarray(trace.gradients if gradients is None else gradients, dtype=float)
    if len(grads) < len(its) - 1:
        raise ValueError("need a gradient for every iterate but the last")
    basis: list = []

    def extend(v):
        norm = float(np.linalg.norm(v))
        if norm == 0:
            return
        w = _project_out(basis, v)
        wn = float(np.linalg.norm(w))
        if wn > 1e-13 * norm:
            basis.append(w / wn)

    extend(its[0])
    residuals = np.empty(len(its))
    thresholds = np.empty(len(its))
    for k, x in enumerate(its):
        if k > 0:
            extend(grads[k - 1])
        residuals[k] = np.linalg.norm(_project_out(basis, x))
        thresholds[k] = rtol * (1.0 + np.linalg.norm(x))
    return SpanCertificate(residuals, thresholds)


def write_instance_csv(path, instance: WorstCaseInstance) -> None:
    """Columns ``index,first_row,q_tilde,x0,eigenvalue`` (1-based index)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "first_row", "q_tilde", "x0", "eigenvalue"])
        for i in range(instance.n):
            writer.writerow(
                [
                    i + 1,
                    format_real(instance.P.first_row[i]),
                    format_real(instance.q_tilde[i]),
                    format_real(instance.x0[i]),
                    format_real(instance.eigenvalues[i]),
                ]
            )
