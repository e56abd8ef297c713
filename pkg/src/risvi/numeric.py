"""Dense complex linear algebra and seeded sampling shared across the package.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``.
``vec`` is column-major everywhere, which is what makes the identity
``vec(B X A^T) = (A kron B) vec(X)`` hold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Hermitian system cannot be Cholesky-factored."""


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by a master seed and a stream key.

    Two streams with the same ``(seed, key)`` produce identical draws, no
    matter which process creates them or in what order.
    """

    seed: int
    key: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(seq))

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.seed, self.key + tuple(int(k) for k in key))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def kron(a, b) -> np.ndarray:
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Khatri-Rao product: column j is ``a[:, j] kron b[:, j]``.

    The row-wise variant used for ``G diag(f)`` style products is obtained
    by transposing the operands and the result.
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"khatri_rao needs equal column counts, got {a.shape[1]} and {b.shape[1]}"
        )
    p, n = a.shape
    q = b.shape[0]
    return (a[:, None, :] * b[None, :, :]).reshape(p * q, n)


def vec(m) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v).reshape(rows, cols, order="F")


def sample_circ_gauss(rng, n: int, variance: float = 1.0) -> np.ndarray:
    """Draw ``n`` i.i.d. circularly-symmetric CN(0, variance) samples.

    Real and imaginary parts are each N(0, variance / 2). Draws are taken
    sequentially from the generator, so ``k`` calls of size ``n`` consume
    exactly the same numbers as one call of size ``k * n``.
    """
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    gen = as_generator(rng)
    z = gen.standard_normal((int(n), 2))
    return np.sqrt(variance / 2.0) * (z[:, 0] + 1j * z[:, 1])


def hermitian_solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` for Hermitian positive definite ``a`` via Cholesky.

    ``a`` is symmetrized as ``(a + a^H) / 2`` before factoring.
    """
    a = np.asarray(a)
    a = 0.5 * (a + a.conj().T)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"Cholesky factorization failed: {exc}") from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def check_finite(name: str, *arrays) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError(f"non-finite values in {name}")
