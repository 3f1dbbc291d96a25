"""Vector norms, invariant subspaces, and norms of matrices restricted to them.

Everything here works over the real or the complex field; inputs are promoted
to float64/complex128 on validation.  All returned objects are immutable
value types (arrays are marked read-only), so they can be shared freely
between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

# Default tolerances.  Chosen for double precision at dimensions up to ~100;
# every operation that uses one accepts an override.
INVARIANCE_TOL = 1e-9
RANK_FLOOR = 1e-10
NORM_TOL = 1e-8

# Scale-invariant threshold for "Ax differs from x".
FIXED_POINT_RTOL = 1e-9


class InvarianceError(ValueError):
    """A subspace claimed invariant is not mapped into itself."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RankAmbiguityError(ValueError):
    """A numerical rank decision fell inside the ambiguity band.

    Carries the relative singular-value gap that straddled the cutoff so the
    caller can pick a better tolerance.
    """

    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap


class DecompositionError(ValueError):
    """A direct-sum split H + K is missing directions or too ill-conditioned."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and promote a square matrix with finite entries."""
    A = np.asarray(a)
    if not np.issubdtype(A.dtype, np.inexact):
        A = A.astype(float)
    elif A.dtype == np.float32:
        A = A.astype(np.float64)
    elif A.dtype == np.complex64:
        A = A.astype(np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_vector(x, n: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.asarray(x)
    if not np.issubdtype(v.dtype, np.inexact):
        v = v.astype(float)
    v = v.reshape(-1)
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


# ---------------------------------------------------------------------------
# Subspaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace stored as an orthonormal basis (columns of ``basis``).

    ``basis`` has shape (n, d) with d the dimension and n the ambient
    dimension; d may be 0 (the zero subspace) or n (the full space).
    """

    basis: np.ndarray
    tol: float = INVARIANCE_TOL

    def __post_init__(self):
        B = np.asarray(self.basis)
        if B.ndim != 2:
            raise ValueError("subspace basis must be a 2-d array (n, d)")
        if not np.issubdtype(B.dtype, np.inexact):
            B = B.astype(float)
        n, d = B.shape
        if d > n:
            raise ValueError(f"subspace dimension {d} exceeds ambient dimension {n}")
        if d:
            gram = B.conj().T @ B
            if not np.allclose(gram, np.eye(d), atol=max(self.tol, 1e-12) * 100):
                raise ValueError("subspace basis columns are not orthonormal")
        object.__setattr__(self, "basis", _readonly(B.copy()))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_zero(self) -> bool:
        return self.dim == 0

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.basis)

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n))

    @classmethod
    def span(cls, *vectors, tol: float = INVARIANCE_TOL) -> "Subspace":
        """Orthonormalize spanning vectors (dependent ones are dropped)."""
        cols = [as_vector(v) for v in vectors]
        if not cols:
            raise ValueError("span() needs at least one vector")
        M = np.column_stack(cols)
        return cls.from_spanning(M, tol=tol)

    @classmethod
    def from_spanning(cls, M, tol: float = INVARIANCE_TOL) -> "Subspace":
        """Subspace spanned by the columns of M, via SVD with rank detection."""
        M = np.atleast_2d(np.asarray(M))
        if not np.issubdtype(M.dtype, np.inexact):
            M = M.astype(float)
        if M.size == 0 or not np.any(M):
            return cls.zero(M.shape[0])
        u, s, _ = np.linalg.svd(M, full_matrices=False)
        rank = int(np.sum(s > max(M.shape) * np.finfo(float).eps * s[0]))
        return cls(u[:, :rank], tol=tol)

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace."""
        B = self.basis
        return B @ B.conj().T

    def project(self, x) -> np.ndarray:
        x = as_vector(x, self.ambient_dim)
        return self.basis @ (self.basis.conj().T @ x)

    def coords(self, x) -> np.ndarray:
        """Coordinates of x in the orthonormal basis (x assumed in the subspace)."""
        return self.basis.conj().T @ as_vector(x, self.ambient_dim)

    def lift(self, c) -> np.ndarray:
        return self.basis @ np.asarray(c)

    def contains(self, x, tol: float | None = None) -> bool:
        x = as_vector(x, self.ambient_dim)
        t = self.tol if tol is None else tol
        scale = max(1.0, float(np.linalg.norm(x)))
        return float(np.linalg.norm(x - self.project(x))) <= t * scale

    def equals(self, other: "Subspace", tol: float = 1e-8) -> bool:
        if self.ambient_dim != other.ambient_dim or self.dim != other.dim:
            return False
        if self.dim == 0:
            return True
        diff = self.projector() - other.projector()
        return float(np.linalg.norm(diff, 2)) <= tol

    def orthogonal_complement(self) -> "Subspace":
        n, d = self.basis.shape
        if d == 0:
            return Subspace.full(n)
        if d == n:
            return Subspace.zero(n)
        # Complete the basis via full QR of [B | I].
        q, _ = np.linalg.qr(np.hstack([self.basis, np.eye(n, dtype=self.basis.dtype)]))
        comp = q[:, d:n]
        return Subspace(comp, tol=self.tol)


def mean_zero_subspace(n: int) -> Subspace:
    """The hyperplane of vectors whose entries sum to zero.

    Basis: successive differences e1-e2, e2-e3, ... orthonormalized, so it is
    canonical and reproducible.
    """
    if n < 1:
        raise ValueError("ambient dimension must be >= 1")
    if n == 1:
        return Subspace.zero(1)
    D = np.zeros((n, n - 1))
    for j in range(n - 1):
        D[j, j] = 1.0
        D[j + 1, j] = -1.0
    q, _ = np.linalg.qr(D)
    return Subspace(q)


def is_mean_zero_subspace(H: Subspace, tol: float = 1e-9) -> bool:
    """True when H is exactly the sum-zero hyperplane (real basis)."""
    n = H.ambient_dim
    if H.dim != n - 1 or np.iscomplexobj(H.basis):
        return False
    e = np.ones(n)
    return float(np.linalg.norm(H.basis.T @ e)) <= tol * np.sqrt(n)


# ---------------------------------------------------------------------------
# Rank decisions
# ---------------------------------------------------------------------------

def numerical_rank(singular_values, floor: float = RANK_FLOOR,
                   ambiguity_decades: float = 2.0) -> int:
    """Rank from descending singular values: values below floor*s0 are zero.

    Raises RankAmbiguityError when the gap between the last kept and the first
    dropped value spans fewer than ``ambiguity_decades`` orders of magnitude,
    i.e. the data does not clearly separate signal from noise at this floor.
    """
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    rel = s / s[0]
    rank = int(np.sum(rel > floor))
    if 0 < rank < s.size and rel[rank] > 0.0:
        gap = rel[rank - 1] / rel[rank]
        if gap < 10.0 ** ambiguity_decades:
            raise RankAmbiguityError(
                f"singular values {s[rank - 1]:.3e} and {s[rank]:.3e} straddle "
                f"the rank cutoff with gap {gap:.2e}", gap=gap)
    return rank


def fixed_point_space(A, tol: float = RANK_FLOOR) -> Subspace:
    """Nullspace of (I - A): the fixed vectors of A."""
    A = as_matrix(A)
    n = A.shape[0]
    _, s, vh = np.linalg.svd(np.eye(n) - A)
    rank = numerical_rank(s, floor=tol)
    return Subspace(vh[rank:].conj().T)


def range_complement(A, tol: float = RANK_FLOOR) -> Subspace:
    """Range of (I - A), the natural invariant complement to the fixed space."""
    A = as_matrix(A)
    n = A.shape[0]
    u, s, _ = np.linalg.svd(np.eye(n) - A)
    rank = numerical_rank(s, floor=tol)
    return Subspace(u[:, :rank])


class SplittingReport(NamedTuple):
    fixed: Subspace
    moving: Subspace
    complementary: bool
    min_angle_sv: float


def complementary_pair(A, tol: float = RANK_FLOOR) -> SplittingReport:
    """Fixed space of A and range of (I - A), with a complementarity flag.

    Both spaces come from one SVD of (I - A), so their dimensions always add
    up to n.  ``complementary`` reports whether they intersect only at 0
    (equivalently, eigenvalue 1 of A has no nontrivial Jordan structure),
    decided by the smallest singular value of the stacked basis.
    """
    A = as_matrix(A)
    n = A.shape[0]
    u, s, vh = np.linalg.svd(np.eye(n) - A)
    rank = numerical_rank(s, floor=tol)
    fixed = Subspace(vh[rank:].conj().T)
    moving = Subspace(u[:, :rank])
    stacked = np.hstack([fixed.basis, moving.basis])
    if stacked.shape[1] == 0:
        return SplittingReport(fixed, moving, True, 1.0)
    sv = np.linalg.svd(stacked, compute_uv=False)
    min_sv = float(sv[-1])
    return SplittingReport(fixed, moving, min_sv > 1e-7, min_sv)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

class VectorNorm:
    """Base class: a vector norm evaluable on single vectors and columnwise."""

    name = "norm"

    def __call__(self, x) -> float:
        raise NotImplementedError

    def batch(self, X: np.ndarray) -> np.ndarray:
        """Norm of every column of X."""
        return np.array([self(X[:, j]) for j in range(X.shape[1])])

    def dimension(self) -> int | None:
        """Ambient dimension when the norm fixes one, else None."""
        return None


@dataclass(frozen=True)
class PNorm(VectorNorm):
    """The entrywise p-norm for p in {1, 2, inf}."""

    p: float

    def __post_init__(self):
        if self.p not in (1.0, 2.0, np.inf):
            raise ValueError("only p in {1, 2, inf} is supported")

    @property
    def name(self) -> str:
        return {1.0: "l1", 2.0: "l2", np.inf: "linf"}[self.p]

    def __call__(self, x) -> float:
        x = np.asarray(x)
        if x.size == 0:
            return 0.0
        a = np.abs(x)
        if self.p == 1.0:
            return float(a.sum())
        if self.p == 2.0:
            return float(np.sqrt((a * a).sum()))
        return float(a.max())

    def batch(self, X: np.ndarray) -> np.ndarray:
        if X.shape[0] == 0:
            return np.zeros(X.shape[1])
        a = np.abs(X)
        if self.p == 1.0:
            return a.sum(axis=0)
        if self.p == 2.0:
            return np.sqrt((a * a).sum(axis=0))
        return a.max(axis=0)


L1 = PNorm(1.0)
L2 = PNorm(2.0)
LINF = PNorm(np.inf)


@dataclass(frozen=True, eq=False)
class WeightedL1(VectorNorm):
    """Sum of absolute entries with positive per-coordinate weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and strictly positive")
        object.__setattr__(self, "weights", _readonly(w.copy()))

    name = "weighted_l1"

    def dimension(self) -> int:
        return self.weights.shape[0]

    def __call__(self, x) -> float:
        x = as_vector(x, self.weights.shape[0])
        return float(self.weights @ np.abs(x))

    def batch(self, X: np.ndarray) -> np.ndarray:
        return self.weights @ np.abs(X)


@dataclass(frozen=True, eq=False)
class AdditiveNorm(VectorNorm):
    """Norm that splits along a direct sum H + K and adds the base norm parts.

    For x = y + z with y in H and z in K the value is base(y) + base(z).
    The split is the (generally oblique) projection along the pair, so the
    additivity identity holds exactly by construction.  Use
    :func:`additive_norm` to build one; it validates the direct sum.
    """

    base: VectorNorm
    H: Subspace
    K: Subspace
    _solve: np.ndarray = field(repr=False, default=None)

    name = "additive"

    def dimension(self) -> int:
        return self.H.ambient_dim

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        """The pair (y, z) with x = y + z, y in H, z in K."""
        x = as_vector(x, self.H.ambient_dim)
        c = self._solve @ x
        d = self.H.dim
        y = self.H.basis @ c[:d]
        z = self.K.basis @ c[d:]
        return y, z

    def split_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        C = self._solve @ X
        d = self.H.dim
        return self.H.basis @ C[:d], self.K.basis @ C[d:]

    def __call__(self, x) -> float:
        y, z = self.split(x)
        return float(self.base(y) + self.base(z))

    def batch(self, X: np.ndarray) -> np.ndarray:
        Y, Z = self.split_batch(X)
        return self.base.batch(Y) + self.base.batch(Z)


def additive_norm(base: VectorNorm, H: Subspace, K: Subspace,
                  cond_limit: float = 1e8) -> AdditiveNorm:
    """Build the split-and-add norm over a direct sum H + K.

    Raises DecompositionError unless dim H + dim K equals the ambient
    dimension and the stacked basis is invertible with condition number
    below ``cond_limit``.
    """
    n = H.ambient_dim
    if K.ambient_dim != n:
        raise DecompositionError("H and K live in different ambient dimensions")
    if H.dim + K.dim != n:
        raise DecompositionError(
            f"dim H + dim K = {H.dim + K.dim} does not span dimension {n}")
    T = np.hstack([H.basis, K.basis])
    if n == 0:
        raise DecompositionError("empty ambient space")
    sv = np.linalg.svd(T, compute_uv=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] > cond_limit:
        raise DecompositionError(
            f"H and K overlap within tolerance (condition number "
            f"{sv[0] / max(sv[-1], 1e-300):.2e} exceeds {cond_limit:.1e})")
    solve = np.linalg.inv(T)
    solve.setflags(write=False)
    return AdditiveNorm(base=base, H=H, K=K, _solve=solve)


def vector_norm(x, norm: VectorNorm) -> float:
    """Evaluate a norm on a vector (with dimension checking)."""
    d = norm.dimension()
    x = as_vector(x, d)
    return norm(x)


# ---------------------------------------------------------------------------
# Operator and partial norms
# ---------------------------------------------------------------------------

def _power_iteration_top(M: np.ndarray, seed: int = 0):
    """Largest singular value of M and a maximizing right vector.

    Computed from the symmetric eigendecomposition of the Gram matrix
    M* M, which is deterministic and accurate to machine precision at our
    scales.  (A plain power iteration stalls below 1e-8 accuracy when the
    top two singular values nearly coincide.)  Note for the test suite:
    this is a different algorithm on a different operator than a full SVD
    of M, which therefore remains a valid independent oracle.
    """
    m, d = M.shape
    if d == 0 or m == 0 or not np.any(M):
        return 0.0, (np.zeros(d, dtype=M.dtype) if d else np.zeros(0))
    gram = M.conj().T @ M
    vals, vecs = np.linalg.eigh(gram)
    top = float(np.sqrt(max(vals[-1], 0.0)))
    return top, vecs[:, -1]


def operator_norm(A, norm: VectorNorm = L1, *, samples: int = 4096,
                  seed: int = 0) -> float:
    """Induced operator norm of A.

    Closed forms: l1 (max absolute column sum), linf (max absolute row sum),
    weighted l1, and l2 via the Gram eigendecomposition.  Additive
    norms whose parts are invariant reduce to the two restricted norms; any
    remaining case falls back to the sampling optimizer of
    :func:`partial_norm` on the full space and is a certified lower bound
    only (the result's strategy records this).
    """
    A = as_matrix(A)
    n = A.shape[0]
    if n == 0:
        return 0.0
    value, _, _ = _operator_norm_detail(A, norm, samples=samples, seed=seed)
    return value


def _operator_norm_detail(A, norm, *, samples=4096, seed=0):
    """(value, witness, exact) triples backing operator_norm and verdicts."""
    n = A.shape[0]
    absA = np.abs(A)
    if isinstance(norm, PNorm) and norm.p == 1.0:
        sums = absA.sum(axis=0)
        j = int(np.argmax(sums))
        w = np.zeros(n, dtype=A.dtype)
        w[j] = 1.0
        return float(sums[j]), w, True
    if isinstance(norm, PNorm) and norm.p == np.inf:
        sums = absA.sum(axis=1)
        i = int(np.argmax(sums))
        row = A[i]
        w = np.ones(n, dtype=A.dtype)
        nz = np.abs(row) > 0
        w[nz] = np.conj(row[nz]) / np.abs(row[nz])
        return float(sums[i]), w, True
    if isinstance(norm, PNorm) and norm.p == 2.0:
        val, vec = _power_iteration_top(A, seed=seed)
        return val, vec, True
    if isinstance(norm, WeightedL1):
        wts = norm.weights
        ratios = (wts @ absA) / wts
        j = int(np.argmax(ratios))
        w = np.zeros(n, dtype=A.dtype)
        w[j] = 1.0 / wts[j]
        return float(ratios[j]), w, True
    if isinstance(norm, AdditiveNorm):
        okH = check_invariance(A, norm.H).ok if norm.H.dim else True
        okK = check_invariance(A, norm.K).ok if norm.K.dim else True
        if okH and okK:
            candidates = []
            exact = True
            for part in (norm.H, norm.K):
                if part.dim == 0:
                    continue
                r = partial_norm(A, part, norm.base, samples=samples, seed=seed,
                                 check=False)
                exact = exact and r.is_exact
                candidates.append((r.value, r.witness))
            if not candidates:
                return 0.0, None, True
            value, witness = max(candidates, key=lambda t: t[0])
            return value, witness, exact
    r = partial_norm(A, Subspace.full(n), norm, samples=samples, seed=seed,
                     check=False)
    return r.value, r.witness, False


class InvarianceResult(NamedTuple):
    ok: bool
    residual: float


def check_invariance(A, H: Subspace, tol: float = INVARIANCE_TOL) -> InvarianceResult:
    """Does A map H into H?  Residual is ||(I - P_H) A B_H|| (spectral)."""
    A = as_matrix(A)
    if A.shape[0] != H.ambient_dim:
        raise ValueError("matrix and subspace dimensions differ")
    if H.dim == 0:
        return InvarianceResult(True, 0.0)
    AB = A @ H.basis
    leak = AB - H.basis @ (H.basis.conj().T @ AB)
    residual = float(np.linalg.norm(leak, 2))
    return InvarianceResult(residual <= tol, residual)


def restrict(A, H: Subspace, tol: float = INVARIANCE_TOL) -> np.ndarray:
    """Matrix of A acting on H, written in H's orthonormal basis."""
    A = as_matrix(A)
    inv = check_invariance(A, H, tol)
    if not inv.ok:
        raise InvarianceError(
            f"subspace is not invariant (residual {inv.residual:.3e} > {tol:.1e})",
            residual=inv.residual)
    return H.basis.conj().T @ A @ H.basis


@dataclass(frozen=True, eq=False)
class PartialNormResult:
    """Largest norm amplification of A over an invariant subspace.

    ``method`` is "closed_form" for exact routes (including the euclidean
    route, computed to machine tolerance) and "optimized" for the sampling
    route, whose value is a certified lower bound with heuristic tightness.
    ``strategy`` names the specific computation.
    """

    value: float
    witness: np.ndarray | None
    method: str
    strategy: str
    tol: float
    samples: int = 0
    zero_subspace: bool = False

    @property
    def is_exact(self) -> bool:
        return self.method == "closed_form"


def _probe_coords(A, H: Subspace, rng, samples: int) -> np.ndarray:
    """Candidate directions in basis coordinates: random plus structured.

    Structured probes are coordinate vectors and pairwise coordinate
    differences projected into the subspace (these are the extreme points of
    sum-norm balls sliced by difference subspaces) and a top singular
    direction of the restricted map.
    """
    n, d = H.basis.shape
    cplx = np.iscomplexobj(A) or np.iscomplexobj(H.basis)
    blocks = []
    C = rng.standard_normal((d, samples))
    if cplx:
        C = C + 1j * rng.standard_normal((d, samples))
    blocks.append(C)
    blocks.append(np.eye(d, dtype=C.dtype))
    Bh = H.basis.conj().T  # projector coordinates: coords(P_H v) = Bh @ v
    coord = Bh  # projections of coordinate vectors
    blocks.append(coord)
    if n <= 40:
        diffs = []
        for j in range(n):
            for l in range(j + 1, n):
                diffs.append(Bh[:, j] - Bh[:, l])
        if diffs:
            blocks.append(np.column_stack(diffs))
    try:
        _, top = _power_iteration_top(A @ H.basis)
        if top is not None and np.linalg.norm(top) > 0:
            blocks.append(top.reshape(-1, 1))
    except np.linalg.LinAlgError:
        pass
    C = np.hstack([b.astype(C.dtype) for b in blocks])
    keep = np.linalg.norm(C, axis=0) > 1e-12
    return C[:, keep]


def _pattern_refine(f: Callable[[np.ndarray], float], c0: np.ndarray,
                    cplx: bool, min_step: float = 1e-7) -> tuple[np.ndarray, float]:
    """Coordinate-wise pattern search with shrinking steps (scale free)."""
    c = c0 / np.linalg.norm(c0)
    best = f(c)
    d = c.shape[0]
    deltas = [1.0, -1.0]
    if cplx:
        deltas += [1.0j, -1.0j]
    step = 0.5
    while step > min_step:
        improved = False
        for i in range(d):
            for delta in deltas:
                cand = c.copy()
                cand[i] += step * delta
                nc = np.linalg.norm(cand)
                if nc == 0.0:
                    continue
                cand /= nc
                val = f(cand)
                if val > best * (1 + 1e-14) + 1e-300:
                    c, best = cand, val
                    improved = True
        if not improved:
            step *= 0.5
    return c, best


def partial_norm(A, H: Subspace, norm: VectorNorm = L1, *,
                 tol: float = NORM_TOL, invariance_tol: float = INVARIANCE_TOL,
                 route: str = "auto", samples: int = 4096, seed: int = 0,
                 refine: bool = True, check: bool = True) -> PartialNormResult:
    """Supremum of norm(A x) / norm(x) over nonzero x in the invariant subspace H.

    Routes (``route="auto"``):
      * zero subspace: value 0 by convention, flagged;
      * one-dimensional H: direct evaluation on the basis vector;
      * l1 norm with H the sum-zero hyperplane: exact column-pair form;
      * l2 norm: spectral norm of A restricted to H (machine tolerance);
      * anything else: multi-start sampling on the unit sphere of H plus
        coordinate-wise pattern refinement.  The result is then a certified
        lower bound whose tightness is heuristic.

    ``route="sample"`` forces the sampling optimizer (useful as an
    independent cross-check of the closed forms); ``route="closed"`` raises
    when no exact route applies.

    Raises InvarianceError when H is not invariant under A (skipped with
    ``check=False``, e.g. for full-space operator norms).
    """
    A = as_matrix(A)
    if A.shape[0] != H.ambient_dim:
        raise ValueError("matrix and subspace dimensions differ")
    if route not in ("auto", "closed", "sample"):
        raise ValueError(f"unknown route {route!r}")
    if H.dim == 0:
        return PartialNormResult(0.0, None, "closed_form", "zero_subspace",
                                 tol, zero_subspace=True)
    if check:
        inv = check_invariance(A, H, invariance_tol)
        if not inv.ok:
            raise InvarianceError(
                f"subspace not invariant under the matrix "
                f"(residual {inv.residual:.3e})", residual=inv.residual)

    if route != "sample":
        # An additive norm agrees with its base norm on each of its parts, so
        # a subspace contained in one part reduces to the base norm there.
        if isinstance(norm, AdditiveNorm):
            for part in (norm.H, norm.K):
                if part.dim >= H.dim and \
                        float(np.linalg.norm(H.basis - part.basis @ (
                            part.basis.conj().T @ H.basis))) <= 1e-9 * np.sqrt(max(H.dim, 1)):
                    return partial_norm(A, H, norm.base, tol=tol,
                                        invariance_tol=invariance_tol,
                                        route=route, samples=samples, seed=seed,
                                        refine=refine, check=False)
        if H.dim == 1:
            b = H.basis[:, 0]
            nb = norm(b)
            value = float(norm(A @ b) / nb)
            return PartialNormResult(value, _readonly(b / nb), "closed_form",
                                     "single_direction", tol)
        if isinstance(norm, PNorm) and norm.p == 1.0 and \
                not np.iscomplexobj(A) and is_mean_zero_subspace(H):
            n = A.shape[0]
            best, pair = -1.0, (0, 1)
            for j in range(n):
                diff = np.abs(A[:, j:j + 1] - A[:, j + 1:]).sum(axis=0)
                if diff.size:
                    l = int(np.argmax(diff))
                    if diff[l] > best:
                        best, pair = float(diff[l]), (j, j + 1 + l)
            w = np.zeros(n)
            w[pair[0]], w[pair[1]] = 0.5, -0.5
            return PartialNormResult(best / 2.0, _readonly(w), "closed_form",
                                     "mean_zero_extreme_pairs", tol)
        if isinstance(norm, PNorm) and norm.p == 2.0:
            value, coords = _power_iteration_top(A @ H.basis, seed=seed)
            witness = None
            if coords is not None and np.linalg.norm(coords) > 0:
                witness = H.basis @ coords
                witness = _readonly(witness / norm(witness))
            return PartialNormResult(value, witness, "closed_form",
                                     "gram_spectral", tol)
        if route == "closed":
            raise ValueError(f"no exact route for norm {norm.name!r} on a "
                             f"{H.dim}-dimensional subspace")

    # Sampling route.
    rng = np.random.default_rng(seed)
    C = _probe_coords(A, H, rng, samples)
    X = H.basis @ C
    nx = norm.batch(X)
    ok = nx > 1e-300
    ratios = np.zeros(C.shape[1])
    ratios[ok] = norm.batch(A @ X[:, ok]) / nx[ok]
    used = int(C.shape[1])
    order = np.argsort(ratios)[::-1]
    best_c = C[:, order[0]]
    best = float(ratios[order[0]])
    if refine:
        cplx = np.iscomplexobj(C)

        def f(c):
            x = H.basis @ c
            v = norm(x)
            return float(norm(A @ x) / v) if v > 1e-300 else 0.0

        for idx in order[:3]:
            c_ref, val = _pattern_refine(f, C[:, idx], cplx)
            if val > best:
                best, best_c = val, c_ref
    w = H.basis @ best_c
    w = _readonly(w / norm(w))
    return PartialNormResult(best, w, "optimized",
                             "multistart_sampling+pattern_refine", tol,
                             samples=used)


# ---------------------------------------------------------------------------
# Norm axiom spot checks
# ---------------------------------------------------------------------------

class NormAxiomReport(NamedTuple):
    homogeneity: float
    triangle: float
    definiteness_ok: bool
    samples: int


def check_norm_axioms(norm: VectorNorm, n: int, *, samples: int = 200,
                      seed: int = 0, complex_field: bool = False,
                      tol: float = 1e-9) -> NormAxiomReport:
    """Sample homogeneity / triangle / definiteness violations of a norm.

    Returns maximal relative violations; a valid implementation shows values
    at roundoff level.  Spot checking cannot prove the axioms, it guards
    against mis-built composite norms.
    """
    rng = np.random.default_rng(seed)

    def draw():
        v = rng.standard_normal(n)
        if complex_field:
            v = v + 1j * rng.standard_normal(n)
        return v

    hom, tri = 0.0, 0.0
    for _ in range(samples):
        x, y = draw(), draw()
        c = float(rng.standard_normal())
        nx, ny = norm(x), norm(y)
        scale = max(nx, ny, 1e-30)
        hom = max(hom, abs(norm(c * x) - abs(c) * nx) / max(abs(c) * nx, 1e-30))
        tri = max(tri, (norm(x + y) - nx - ny) / scale)
        if nx <= 0 and float(np.linalg.norm(x)) > 1e-12:
            return NormAxiomReport(hom, tri, False, samples)
    zero_ok = norm(np.zeros(n, dtype=complex if complex_field else float)) <= tol
    return NormAxiomReport(hom, tri, zero_ok, samples)
