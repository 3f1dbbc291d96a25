"""Shared generators for randomized suites."""
import numpy as np
import pytest

from genprod.norms import Subspace


def random_orthogonal(n, rng, complex_field=False):
    G = rng.standard_normal((n, n))
    if complex_field:
        G = G + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    # Fix the phase so the factor is unique given the draw.
    return Q * np.sign(np.where(np.diag(R).real == 0, 1.0, np.diag(R).real))


def block_triangular_similarity(n, k, rng, leading_eigs, trailing_eigs,
                                coupling=1.0, block_noise=0.3):
    """Orthogonal similarity transform of a block lower-triangular matrix.

    The top-right block is zero, so the span of the trailing n-k columns of
    the orthogonal factor is invariant; the matrix restricted there has
    exactly ``trailing_eigs`` as eigenvalues, and the full spectrum is the
    union with ``leading_eigs``.

    ``block_noise`` scales strictly-lower entries inside the diagonal blocks.
    Keep it 0 when eigenvalues repeat within a block: noise would make the
    repeat defective and the computed eigenvalues split like a fractional
    power of machine epsilon, defeating tight cluster tolerances.

    Returns (A, H, T) with H the invariant subspace.
    """
    assert len(leading_eigs) == k and len(trailing_eigs) == n - k
    T = np.zeros((n, n))
    T[:k, :k] = block_noise * np.tril(rng.standard_normal((k, k)), -1)
    T[:k, :k] += np.diag(leading_eigs)
    T[k:, k:] = block_noise * np.tril(rng.standard_normal((n - k, n - k)), -1)
    np.fill_diagonal(T[k:, k:], trailing_eigs)
    T[k:, :k] = coupling * rng.standard_normal((n - k, k))
    Q = random_orthogonal(n, rng)
    A = Q @ T @ Q.T
    H = Subspace(Q[:, k:])
    return A, H, T
