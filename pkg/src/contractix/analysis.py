"""Spectral machinery behind the Heavy-Ball rate and the lower-bound instance.

On a quadratic the Heavy-Ball iteration is linear in the stacked error
``(x^(k) - x*, x^(k-1) - x*)`` with iteration matrix

    R = [[(1 + b) I - a Q, -b I], [I, 0]].

Diagonalizing ``Q`` turns ``R`` into ``n`` independent 2x2 companion blocks
``[[1 + b - a lambda_i, -b], [1, 0]]``.  With the tuned ``(a, b)`` every
block has spectral radius ``sqrt(b)``, whatever ``lambda_i`` in ``[L, U]``.
The module also provides the 2x2 Schur power bound used to turn spectral
radii into norm bounds, and quadrature oracles for the two Fourier
integrals that evaluate the lower-bound minimizer.

Complex arithmetic stays inside this module; public functions return real
magnitudes, norms or real parts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import mpmath
import numpy as np

from .errors import ConsistencyError
from .fixedpoint import HeavyBallParams, hb_params

__all__ = [
    "OutsideClassWarning",
    "CompanionBlock2x2",
    "HbBlock",
    "SchurPower2x2",
    "companion_roots",
    "block_for_eigenvalue",
    "spectral_radius_block",
    "power_decomposition_2x2",
    "schur_offdiag_bound",
    "spectral_norm",
    "hb_iteration_matrix",
    "hb_power_norm_routes",
    "hb_matrix_power_norm",
    "bk_norm_bound",
    "z_roots",
    "integral_identity",
    "integral_quadrature",
    "geometric_fourier_identities",
    "geometric_fourier_quadrature",
]


class OutsideClassWarning(UserWarning):
    """An eigenvalue lies outside ``[L, U]``, so the tuned-radius identity may fail."""


def companion_roots(a: float, b: float) -> tuple[complex, complex]:
    """Roots of ``t^2 - a t - b``, larger modulus first.

    Real roots use the cancellation-free form ``t1 = (a + sign(a) sqrt(D)) / 2``
    and ``t2 = -b / t1``.
    """
    disc = a * a + 4.0 * b
    return _roots_from_disc(a, b, disc)


def _roots_from_disc(a: float, b: float, disc: float) -> tuple[complex, complex]:
    if disc < 0:
        im = 0.5 * math.sqrt(-disc)
        return complex(0.5 * a, im), complex(0.5 * a, -im)
    t1 = 0.5 * (a + math.copysign(math.sqrt(disc), a))
    t2 = -b / t1 if t1 != 0 else 0.0
    return complex(t1), complex(t2)


@dataclass(frozen=True)
class CompanionBlock2x2:
    """The matrix ``[[a, b], [1, 0]]``."""

    a: float
    b: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [1.0, 0.0]])

    def roots(self) -> tuple[complex, complex]:
        return companion_roots(self.a, self.b)

    @property
    def spectral_radius(self) -> float:
        return max(abs(t) for t in self.roots())


@dataclass(frozen=True)
class HbBlock:
    """Heavy-Ball block for one eigenvalue ``lambda_i`` of ``Q``."""

    lambda_i: float
    params: HeavyBallParams

    @property
    def a(self) -> float:
        p = self.params
        return 1.0 + p.beta_tilde - p.alpha_tilde * self.lambda_i

    @property
    def b(self) -> float:
        return -self.params.beta_tilde

    @property
    def companion(self) -> CompanionBlock2x2:
        return CompanionBlock2x2(self.a, self.b)

    def matrix(self) -> np.ndarray:
        return self.companion.matrix()

    @property
    def in_class(self) -> bool:
        bd = self.params.bounds
        return bd.L <= self.lambda_i <= bd.U

    def discriminant(self) -> float:
        """``a^2 - 4 beta``, in the factored form ``alpha^2 (lambda - L)(lambda - U)``
        when the parameters are the tuned ones, so its sign is exact at the endpoints."""
        p = self.params
        tuned = hb_params(p.bounds)
        if _close(tuned.alpha_tilde, p.alpha_tilde) and _close(tuned.beta_tilde, p.beta_tilde):
            bd = p.bounds
            return p.alpha_tilde**2 * (self.lambda_i - bd.L) * (self.lambda_i - bd.U)
        return self.a * self.a + 4.0 * self.b

    def roots(self) -> tuple[complex, complex]:
        return _roots_from_disc(self.a, self.b, self.discriminant())


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= 4 * np.finfo(float).eps * max(abs(x), abs(y))


def block_for_eigenvalue(lambda_i: float, p: HeavyBallParams) -> HbBlock:
    return HbBlock(float(lambda_i), p)


def spectral_radius_block(blk: HbBlock) -> float:
    """Largest root modulus of the block.

    For a non-positive discriminant the roots are a conjugate pair (or a
    double root) of modulus ``sqrt(beta)``, returned directly.  An
    eigenvalue outside ``[L, U]`` triggers :class:`OutsideClassWarning`.
    """
    if not blk.in_class:
        warnings.warn(
            f"eigenvalue {blk.lambda_i} lies outside [{blk.params.bounds.L}, {blk.params.bounds.U}]",
            OutsideClassWarning,
            stacklevel=2,
        )
    if blk.discriminant() <= 0:
        return math.sqrt(blk.params.beta_tilde)
    return max(abs(t) for t in blk.roots())


@dataclass(frozen=True)
class SchurPower2x2:
    """``M^k = W [[lambda1^k, d], [0, lambda2^k]] W^H`` with ``W`` unitary."""

    lambda1: complex
    lambda2: complex
    d: complex
    k: int
    W: np.ndarray
    Tk: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """The real matrix ``M^k`` assembled from the Schur factors."""
        return (self.W @ self.Tk @ self.W.conj().T).real


def _schur_factor(a: float, b: float, root: complex) -> tuple[np.ndarray, np.ndarray]:
    u = np.array([root, 1.0], dtype=np.complex128)
    u /= np.linalg.norm(u)
    v = np.array([-np.conj(u[1]), np.conj(u[0])])
    W = np.column_stack([u, v])
    T = W.conj().T @ np.array([[a, b], [1.0, 0.0]], dtype=np.complex128) @ W
    T[1, 0] = 0.0
    return W, T


def power_decomposition_2x2(m: CompanionBlock2x2, k: int) -> SchurPower2x2:
    """Schur-factorize ``m`` once, then power its triangular factor ``k`` times.

    The first Schur vector is the normalized eigenvector ``(t1, 1)`` of the
    larger root; the second is its unitary complement.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    t1, _ = m.roots()
    W, T = _schur_factor(m.a, m.b, t1)
    Tk = T.copy()
    for _ in range(k - 1):
        Tk = Tk @ T
    return SchurPower2x2(complex(T[0, 0]), complex(T[1, 1]), complex(Tk[0, 1]), k, W, Tk)


def schur_offdiag_bound(m: CompanionBlock2x2, k: int) -> float:
    """``k (|a| + |b| + 1) rho^(k - 1)`` for the off-diagonal Schur entry of ``m^k``."""
    return k * (abs(m.a) + abs(m.b) + 1.0) * m.spectral_radius ** (k - 1)


def spectral_norm(A) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(A), 2))


def hb_iteration_matrix(Q, p: HeavyBallParams) -> np.ndarray:
    """``[[(1 + b) I - a Q, -b I], [I, 0]]`` of size ``2n``."""
    Q = np.asarray(Q, dtype=np.float64)
    n = Q.shape[0]
    eye = np.eye(n)
    top = np.hstack([(1.0 + p.beta_tilde) * eye - p.alpha_tilde * Q, -p.beta_tilde * eye])
    bottom = np.hstack([eye, np.zeros((n, n))])
    return np.vstack([top, bottom])


def hb_power_norm_routes(Q, p: HeavyBallParams, k: int) -> tuple[float, float]:
    """``||R^k||`` by a dense power of ``R`` and by the largest 2x2 block power."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or not np.array_equal(Q, Q.T):
        raise ValueError("Q must be a symmetric square matrix")
    if k < 0:
        raise ValueError("k must be nonnegative")
    dense = spectral_norm(np.linalg.matrix_power(hb_iteration_matrix(Q, p), k))
    blocks = max(
        spectral_norm(np.linalg.matrix_power(block_for_eigenvalue(lam, p).matrix(), k))
        for lam in np.linalg.eigvalsh(Q)
    )
    return dense, blocks


def hb_matrix_power_norm(Q, p: HeavyBallParams, k: int, rtol: float = 1e-8) -> float:
    """``||R^k||``, computed two independent ways.

    Raises :class:`ConsistencyError` if the dense route and the block route
    differ by more than ``rtol`` relative.
    """
    dense, blocks = hb_power_norm_routes(Q, p, k)
    scale = max(dense, blocks)
    if abs(dense - blocks) > rtol * scale:
        raise ConsistencyError(
            f"dense ||R^{k}|| = {dense!r} but block route gives {blocks!r}"
        )
    return blocks


def z_roots(kappa: float) -> tuple[float, float]:
    """``z1 = (sqrt(kappa) + 1) / (sqrt(kappa) - 1)`` and ``z2 = 1 / z1``."""
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    sk = math.sqrt(kappa)
    return (sk + 1.0) / (sk - 1.0), (sk - 1.0) / (sk + 1.0)


def bk_norm_bound(kappa: float, k: int, p: HeavyBallParams) -> float:
    """``z2^k (1 + k c z1)`` with ``c = 2 + 2 beta + alpha``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    z1, z2 = z_roots(kappa)
    c = 2.0 + 2.0 * p.beta_tilde + p.alpha_tilde
    return z2**k * (1.0 + k * c * z1)


def integral_identity(kappa: float, k: int) -> float:
    """Closed form of ``int_0^1 exp(2 pi j (k-1) t) / (2 (1 - cos 2 pi t) + 4/(kappa - 1)) dt``.

    Equals ``z2^(k-1) / (z1 - z2) = ((kappa - 1) / (4 sqrt(kappa))) z2^(k-1)``.
    """
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    if k < 1:
        raise ValueError("k must be at least 1")
    z1, z2 = z_roots(kappa)
    return (kappa - 1.0) / (4.0 * math.sqrt(kappa)) * z2 ** (k - 1)


@lru_cache(maxsize=16)
def _half_cos_table(nodes: int, dps: int) -> tuple:
    # cos(2 pi i / nodes) for i = 0..nodes/2, enough for any index by symmetry
    ctx = mpmath.MPContext()
    ctx.dps = dps
    return tuple(ctx.cospi(ctx.mpf(2 * i) / nodes) for i in range(nodes // 2 + 1))


def integral_quadrature(kappa: float, k: int, nodes: Optional[int] = None) -> float:
    """Periodic trapezoid rule for :func:`integral_identity`'s integral.

    The integrand is smooth and periodic, so the rule converges
    geometrically in ``nodes``.  The sum runs in extended precision: its
    terms are of order ``kappa`` while the result can be many orders
    smaller.  ``nodes`` defaults to ``2**14``, or ``2**16`` when
    ``kappa - 1 < 1e-2``.
    """
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    if k < 1:
        raise ValueError("k must be at least 1")
    if nodes is None:
        nodes = 2**16 if kappa - 1.0 < 1e-2 else 2**14
    if nodes < 2 or nodes % 2:
        raise ValueError("nodes must be a positive even number")
    _, z2 = z_roots(kappa)
    dps = 30 + int(math.ceil((k - 1) * -math.log10(z2))) if z2 > 0 else 30
    dps = 10 * ((dps + 9) // 10)
    table = _half_cos_table(nodes, dps)
    ctx = mpmath.MPContext()
    ctx.dps = dps
    shift = 4 / (ctx.mpf(kappa) - 1)
    half = nodes // 2

    def term(i):
        j = (i * (k - 1)) % nodes
        c = table[j if j <= half else nodes - j]
        return c / (2 * (1 - table[i]) + shift)

    # terms i and nodes - i coincide
    total = term(0) + term(half)
    total += 2 * ctx.fsum(term(i) for i in range(1, half))
    return float(total / nodes)


def geometric_fourier_identities(alpha: float, k: int) -> float:
    """``int_0^1 exp(2 pi j k t) / (exp(2 pi j t) - alpha) dt``.

    Equals ``alpha^(k-1)`` inside the unit disc and zero outside it.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if abs(alpha) == 1:
        raise ValueError("the identity is undefined for |alpha| == 1")
    if abs(alpha) < 1:
        return float(alpha) ** (k - 1)
    return 0.0


def geometric_fourier_quadrature(alpha: float, k: int, nodes: int = 2**14) -> float:
    """Periodic trapezoid rule for :func:`geometric_fourier_identities`.

    The imaginary part vanishes by symmetry for real ``alpha``; the real
    part is returned.
    """
    if abs(alpha) == 1:
        raise ValueError("the integrand is singular for |alpha| == 1")
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    vals = np.exp(1j * ((k * np.arange(nodes)) % nodes) * (2.0 * np.pi / nodes)) / (
        np.exp(1j * theta) - alpha
    )
    return float(np.mean(vals).real)
