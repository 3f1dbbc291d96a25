"""Contraction-type classification of a single matrix.

Four related properties of a matrix A with respect to a vector norm:

  * nonexpansive: the induced operator norm is at most 1;
  * paracontracting: the norm strictly drops on every vector A moves;
  * rate-certified (gamma) contraction: norm(A x) <= norm(x) - gamma *
    norm(A x - x) for every x, for a fixed gamma > 0;
  * H-contracting: nonexpansive, with strict contraction on an invariant
    subspace H.

Paracontraction and the gamma inequality are universally quantified, so a
sampler can only falsify them.  Verdicts are therefore three-valued, and
certification goes through structural routes: for norms that add up along
the splitting into the fixed space of A and the range of (I - A), the three
strict properties coincide and the contraction ratio on the moving part
yields the certified rate gamma = (1 - k) / (1 + k).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .norms import (
    AdditiveNorm,
    InvarianceError,
    L2,
    NORM_TOL,
    PNorm,
    Subspace,
    VectorNorm,
    _operator_norm_detail,
    additive_norm,
    as_matrix,
    check_invariance,
    complementary_pair,
    partial_norm,
)

# Scale-invariant thresholds for "A moves x" and for counting an equality as
# a violation of a strict inequality.
MOVED_RTOL = 1e-9
FALSIFY_RTOL = 1e-12


class Verdict(str, enum.Enum):
    CERTIFIED = "certified"
    FALSIFIED = "falsified"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class ContractionVerdict:
    """Outcome of one contraction check.

    Falsified verdicts always carry a concrete witness vector; certified
    verdicts carry the structural evidence (contraction ratio k, certified
    rate gamma, route) in ``certificate``.
    """

    kind: Verdict
    prop: str
    witness: np.ndarray | None = None
    certificate: dict | None = None
    budget_used: int = 0
    note: str = ""

    def __post_init__(self):
        if self.witness is not None:
            w = np.asarray(self.witness)
            w.setflags(write=False)
            object.__setattr__(self, "witness", w)

    @property
    def certified(self) -> bool:
        return self.kind == Verdict.CERTIFIED

    @property
    def falsified(self) -> bool:
        return self.kind == Verdict.FALSIFIED


def lp_gamma(k: float) -> float:
    """Certified contraction rate from the ratio k on the moving subspace."""
    if not 0.0 <= k < 1.0:
        raise ValueError(f"need 0 <= k < 1, got {k}")
    return (1.0 - k) / (1.0 + k)


def _is_identity(A: np.ndarray, atol: float = 1e-12) -> bool:
    n = A.shape[0]
    return bool(np.all(np.abs(A - np.eye(n)) <= atol))


def _probe_matrix(A: np.ndarray, budget: int, rng,
                  extra: list[np.ndarray] | None = None) -> np.ndarray:
    """Falsification probes: coordinate vectors, eigenvector directions,
    caller extras, then random fill up to the budget."""
    n = A.shape[0]
    cplx = np.iscomplexobj(A)
    cols = [np.eye(n, dtype=complex if cplx else float)]
    try:
        _, vecs = np.linalg.eig(A)
        cols.append(vecs.real)
        if np.iscomplexobj(vecs):
            cols.append(vecs.imag)
    except np.linalg.LinAlgError:
        pass
    if extra:
        cols.extend(np.atleast_2d(e.T).T for e in extra)
    fill = max(budget - sum(c.shape[1] for c in cols), 0)
    if fill:
        R = rng.standard_normal((n, fill))
        if cplx:
            R = R + 1j * rng.standard_normal((n, fill))
        cols.append(R)
    X = np.hstack([c.astype(complex if cplx else float) for c in cols])
    keep = np.linalg.norm(X, axis=0) > 1e-12
    return X[:, keep]


def _find_strict_drop_violation(A, norm, X):
    """Index of the worst sampled x with A x != x but no norm drop, or None."""
    AX = A @ X
    moved = norm.batch(AX - X)
    nx = norm.batch(X)
    nax = norm.batch(AX)
    ok = nx > 1e-300
    viol = ok & (moved > MOVED_RTOL * nx) & (nax >= nx * (1.0 - FALSIFY_RTOL))
    if not np.any(viol):
        return None
    ratios = np.where(viol, nax / np.maximum(nx, 1e-300), -np.inf)
    return int(np.argmax(ratios))


# ---------------------------------------------------------------------------
# Nonexpansiveness
# ---------------------------------------------------------------------------

def is_nonexpansive(A, norm: VectorNorm, *, tol: float = NORM_TOL,
                    samples: int = 4096, seed: int = 0) -> ContractionVerdict:
    """Is the induced operator norm at most 1?

    Norms with exact operator-norm routes give definite verdicts.  When only
    the sampling lower bound is available, a bound above 1 still falsifies
    (the witness is explicit), but a bound below 1 cannot certify.
    """
    A = as_matrix(A)
    value, witness, exact = _operator_norm_detail(A, norm, samples=samples,
                                                  seed=seed)
    cert = {"operator_norm": value, "exact": exact}
    if value > 1.0 + tol:
        return ContractionVerdict(Verdict.FALSIFIED, "nonexpansive",
                                  witness=witness, certificate=cert)
    if exact:
        return ContractionVerdict(Verdict.CERTIFIED, "nonexpansive",
                                  certificate=cert)
    return ContractionVerdict(
        Verdict.INCONCLUSIVE, "nonexpansive", certificate=cert,
        note="operator norm known only as a sampled lower bound")


# ---------------------------------------------------------------------------
# Structural certification routes
# ---------------------------------------------------------------------------

def _split_certificate(A, norm, *, tol: float, samples: int, seed: int):
    """Certificate via a norm that adds up along fixed/moving parts of A.

    Requires: the norm splits additively over H + K, those parts coincide
    with the moving and fixed spaces of A, A is certifiably nonexpansive for
    the norm, and the contraction ratio k on the moving part is exact and
    below 1.  Returns the certificate dict or None.
    """
    if not isinstance(norm, AdditiveNorm):
        return None
    try:
        pair = complementary_pair(A)
    except Exception:
        return None
    if not pair.complementary:
        return None
    if not (norm.H.equals(pair.moving, tol=1e-7) and
            norm.K.equals(pair.fixed, tol=1e-7)):
        return None
    nonexp = is_nonexpansive(A, norm, tol=tol, samples=samples, seed=seed)
    if not nonexp.certified:
        return None
    if pair.moving.dim == 0:
        return {"k": 0.0, "gamma": 1.0, "route": "additive_split",
                "moving_dim": 0}
    kres = partial_norm(A, pair.moving, norm.base, samples=samples, seed=seed)
    if not kres.is_exact or kres.value >= 1.0 - tol:
        return None
    k = kres.value
    return {"k": k, "gamma": lp_gamma(k), "route": "additive_split",
            "moving_dim": pair.moving.dim}


def _orthogonal_l2_certificate(A, *, tol: float, seed: int):
    """Paracontraction certificate for the euclidean norm.

    When the fixed space and the moving space are orthogonal complements,
    the euclidean norm splits by Pythagoras, so strict contraction on the
    moving part certifies the strict drop on every moved vector.  This route
    does NOT certify a gamma rate (the rate inequality genuinely fails for
    the euclidean norm without additivity).
    """
    try:
        pair = complementary_pair(A)
    except Exception:
        return None
    if not pair.complementary or pair.moving.dim == 0:
        return None
    if pair.fixed.dim and pair.moving.dim:
        cross = pair.fixed.basis.conj().T @ pair.moving.basis
        if float(np.abs(cross).max()) > 1e-8:
            return None
    val, _, _ = _operator_norm_detail(A, L2, seed=seed)
    if val > 1.0 + tol:
        return None
    kres = partial_norm(A, pair.moving, L2, seed=seed)
    if not kres.is_exact or kres.value >= 1.0 - tol:
        return None
    return {"k": kres.value, "route": "orthogonal_l2",
            "moving_dim": pair.moving.dim}


# ---------------------------------------------------------------------------
# Paracontraction and the rate inequality
# ---------------------------------------------------------------------------

def check_paracontracting(A, norm: VectorNorm, budget: int = 2048, *,
                          seed: int = 0, tol: float = NORM_TOL) -> ContractionVerdict:
    """Does the norm strictly drop on every vector that A moves?

    Sampling (coordinate vectors, eigenvector directions, random) can only
    falsify; certification uses the additive-split route, the orthogonal
    euclidean route, or the vacuous case A = I.
    """
    A = as_matrix(A)
    rng = np.random.default_rng(seed)
    extra = []
    if isinstance(norm, AdditiveNorm):
        extra = [norm.H.basis, norm.K.basis]
    X = _probe_matrix(A, budget, rng, extra=[e for e in extra if e.size])
    used = X.shape[1]
    idx = _find_strict_drop_violation(A, norm, X)
    if idx is not None:
        return ContractionVerdict(Verdict.FALSIFIED, "paracontracting",
                                  witness=X[:, idx], budget_used=used)
    if _is_identity(A):
        return ContractionVerdict(Verdict.CERTIFIED, "paracontracting",
                                  budget_used=used,
                                  note="vacuous: the matrix moves no vector")
    cert = _split_certificate(A, norm, tol=tol, samples=budget, seed=seed)
    if cert is not None:
        return ContractionVerdict(Verdict.CERTIFIED, "paracontracting",
                                  certificate=cert, budget_used=used)
    if isinstance(norm, PNorm) and norm.p == 2.0:
        cert = _orthogonal_l2_certificate(A, tol=tol, seed=seed)
        if cert is not None:
            return ContractionVerdict(Verdict.CERTIFIED, "paracontracting",
                                      certificate=cert, budget_used=used)
    return ContractionVerdict(
        Verdict.INCONCLUSIVE, "paracontracting", budget_used=used,
        note="no violation sampled; no certification route applies")


def check_l_paracontracting(A, norm: VectorNorm, gamma: float,
                            budget: int = 2048, *, seed: int = 0,
                            tol: float = NORM_TOL) -> ContractionVerdict:
    """Does norm(A x) <= norm(x) - gamma * norm(A x - x) hold for all x?

    Falsified on any sampled violation beyond tolerance; certified when the
    additive-split route yields a rate at least as large as the requested
    gamma; otherwise inconclusive (sampling cannot prove a universally
    quantified inequality).
    """
    A = as_matrix(A)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    rng = np.random.default_rng(seed)
    extra = []
    if isinstance(norm, AdditiveNorm):
        extra = [norm.H.basis, norm.K.basis]
    X = _probe_matrix(A, budget, rng, extra=[e for e in extra if e.size])
    used = X.shape[1]
    AX = A @ X
    nx = norm.batch(X)
    slack = norm.batch(AX) - (nx - gamma * norm.batch(AX - X))
    viol = slack > tol * np.maximum(nx, 1.0)
    if np.any(viol):
        idx = int(np.argmax(np.where(viol, slack, -np.inf)))
        return ContractionVerdict(
            Verdict.FALSIFIED, "l_paracontracting", witness=X[:, idx],
            certificate={"gamma": gamma, "slack": float(slack[idx])},
            budget_used=used)
    if _is_identity(A):
        return ContractionVerdict(
            Verdict.CERTIFIED, "l_paracontracting",
            certificate={"gamma": gamma, "route": "identity"},
            budget_used=used, note="vacuous: the displacement term is zero")
    cert = _split_certificate(A, norm, tol=tol, samples=budget, seed=seed)
    if cert is not None:
        if cert["gamma"] >= gamma - 1e-15:
            out = dict(cert)
            out["gamma_requested"] = gamma
            return ContractionVerdict(Verdict.CERTIFIED, "l_paracontracting",
                                      certificate=out, budget_used=used)
        return ContractionVerdict(
            Verdict.INCONCLUSIVE, "l_paracontracting", budget_used=used,
            certificate=cert,
            note=f"certified rate {cert['gamma']:.6g} is below the "
                 f"requested gamma {gamma:.6g}")
    return ContractionVerdict(
        Verdict.INCONCLUSIVE, "l_paracontracting", budget_used=used,
        note="no violation sampled; no certification route applies")


# ---------------------------------------------------------------------------
# H-contraction
# ---------------------------------------------------------------------------

def check_H_contractor(A, H: Subspace, norm: VectorNorm, *,
                       tol: float = NORM_TOL, samples: int = 4096,
                       seed: int = 0) -> ContractionVerdict:
    """Nonexpansive, H invariant, and strictly contracting on H?

    The certificate carries the contraction ratio k on H.  An exact k at or
    above 1 falsifies with the maximizing direction as witness; a sampled
    lower bound below 1 cannot certify the supremum and stays inconclusive.
    """
    A = as_matrix(A)
    inv = check_invariance(A, H)
    if not inv.ok:
        leak = A @ H.basis - H.projector() @ (A @ H.basis)
        j = int(np.argmax(np.linalg.norm(leak, axis=0)))
        return ContractionVerdict(
            Verdict.FALSIFIED, "h_contractor", witness=H.basis[:, j],
            certificate={"invariance_residual": inv.residual},
            note="subspace is not invariant")
    nonexp = is_nonexpansive(A, norm, tol=tol, samples=samples, seed=seed)
    if nonexp.falsified:
        return ContractionVerdict(Verdict.FALSIFIED, "h_contractor",
                                  witness=nonexp.witness,
                                  certificate=nonexp.certificate,
                                  note="matrix is expansive")
    pn = partial_norm(A, H, norm, tol=tol, samples=samples, seed=seed)
    cert = {"k": pn.value, "k_method": pn.method, "k_strategy": pn.strategy,
            "subspace_dim": H.dim}
    if not nonexp.certified:
        return ContractionVerdict(Verdict.INCONCLUSIVE, "h_contractor",
                                  certificate=cert, note=nonexp.note)
    if pn.is_exact:
        if pn.value >= 1.0:
            return ContractionVerdict(Verdict.FALSIFIED, "h_contractor",
                                      witness=pn.witness, certificate=cert)
        if pn.value >= 1.0 - tol:
            return ContractionVerdict(
                Verdict.INCONCLUSIVE, "h_contractor", certificate=cert,
                note="contraction ratio within tolerance of 1")
        return ContractionVerdict(Verdict.CERTIFIED, "h_contractor",
                                  certificate=cert)
    if pn.value >= 1.0:
        return ContractionVerdict(Verdict.FALSIFIED, "h_contractor",
                                  witness=pn.witness, certificate=cert)
    return ContractionVerdict(
        Verdict.INCONCLUSIVE, "h_contractor", certificate=cert,
        note="contraction ratio known only as a sampled lower bound")


def make_additive_norm(base: VectorNorm, H: Subspace, K: Subspace) -> AdditiveNorm:
    """Norm that agrees with ``base`` on H and on K and adds across the split."""
    return additive_norm(base, H, K)


# ---------------------------------------------------------------------------
# Equivalence audit
# ---------------------------------------------------------------------------

class ProofChainStats(NamedTuple):
    """Worst sampled slack in the two displacement inequalities.

    For x = y + z split along moving/fixed parts and k the contraction ratio:
    displacement_excess is max of norm(x - A x) - (1 + k) norm(y), and
    drop_deficit is max of (1 - k) norm(y) - (norm(x) - norm(A x)); both are
    nonpositive up to roundoff when the audit hypotheses hold.
    """

    samples: int
    displacement_excess: float
    drop_deficit: float


@dataclass(frozen=True, eq=False)
class EquivalenceAuditReport:
    """Joint classification under the split-additive norm built from A."""

    nonexpansive: ContractionVerdict
    l_paracontracting: ContractionVerdict | None
    paracontracting: ContractionVerdict
    h_contractor: ContractionVerdict
    k: float | None
    gamma: float | None
    hypotheses_ok: bool
    boundary: str | None
    agreement_ok: bool
    disagreement: str | None
    proof_chain: ProofChainStats | None


def _audit_agreement(verdicts: dict) -> tuple[bool, str | None]:
    kinds = {name: v.kind for name, v in verdicts.items() if v is not None}
    cert = [n for n, k in kinds.items() if k == Verdict.CERTIFIED]
    fals = [n for n, k in kinds.items() if k == Verdict.FALSIFIED]
    if cert and fals:
        return False, f"certified {cert} vs falsified {fals}"
    return True, None


def equiv_theorem_audit(A, base: VectorNorm, *, budget: int = 2048,
                        proof_samples: int = 0, seed: int = 0,
                        tol: float = NORM_TOL) -> EquivalenceAuditReport:
    """Classify A three ways under the additive norm built on its own split.

    Builds the norm that adds ``base`` values across the moving part (range
    of I - A) and the fixed part, computes the contraction ratio k there,
    then runs the rate check with gamma = (1 - k) / (1 + k), the strict-drop
    check, and the subspace-contraction check, reporting any certified vs
    falsified conflict.  ``proof_samples`` additionally samples the two
    displacement inequalities behind the rate bound.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if _is_identity(A):
        para = ContractionVerdict(Verdict.CERTIFIED, "paracontracting",
                                  note="vacuous: the matrix moves no vector")
        lpara = ContractionVerdict(Verdict.CERTIFIED, "l_paracontracting",
                                   certificate={"gamma": 1.0, "route": "identity"},
                                   note="vacuous: the displacement term is zero")
        hc = ContractionVerdict(
            Verdict.INCONCLUSIVE, "h_contractor",
            note="fixed-point boundary: the moving space is zero and every "
                 "nonzero invariant subspace has ratio exactly 1")
        nonexp = is_nonexpansive(A, base, tol=tol, seed=seed)
        return EquivalenceAuditReport(
            nonexpansive=nonexp, l_paracontracting=lpara, paracontracting=para,
            h_contractor=hc, k=None, gamma=None, hypotheses_ok=True,
            boundary="k=1", agreement_ok=True, disagreement=None,
            proof_chain=None)

    pair = complementary_pair(A)
    if not pair.complementary:
        nonexp = is_nonexpansive(A, base, tol=tol, seed=seed)
        bad = ContractionVerdict(
            Verdict.INCONCLUSIVE, "h_contractor",
            note="fixed and moving spaces are not complementary")
        return EquivalenceAuditReport(
            nonexpansive=nonexp, l_paracontracting=None, paracontracting=bad,
            h_contractor=bad, k=None, gamma=None, hypotheses_ok=False,
            boundary="defective eigenvalue 1", agreement_ok=True,
            disagreement=None, proof_chain=None)

    nu = additive_norm(base, pair.moving, pair.fixed)
    nonexp = is_nonexpansive(A, nu, tol=tol, samples=budget, seed=seed)
    kres = partial_norm(A, pair.moving, base, samples=budget, seed=seed)
    k = kres.value
    hypotheses_ok = nonexp.certified and kres.is_exact
    boundary = None
    gamma = None
    if kres.is_exact and k >= 1.0 - tol:
        boundary = f"k={k:.6g}"
    elif kres.is_exact and k < 1.0 - tol:
        gamma = lp_gamma(k)

    para = check_paracontracting(A, nu, budget, seed=seed, tol=tol)
    hc = check_H_contractor(A, pair.moving, nu, tol=tol, samples=budget,
                            seed=seed)
    lpara = None
    if gamma is not None:
        lpara = check_l_paracontracting(A, nu, gamma, budget, seed=seed,
                                        tol=tol)
    agreement_ok, disagreement = _audit_agreement(
        {"l_paracontracting": lpara, "paracontracting": para,
         "h_contractor": hc})

    chain = None
    if proof_samples > 0 and hypotheses_ok:
        chain = _proof_chain_stats(A, nu, k, proof_samples, seed)

    return EquivalenceAuditReport(
        nonexpansive=nonexp, l_paracontracting=lpara, paracontracting=para,
        h_contractor=hc, k=k, gamma=gamma, hypotheses_ok=hypotheses_ok,
        boundary=boundary, agreement_ok=agreement_ok,
        disagreement=disagreement, proof_chain=chain)


def _proof_chain_stats(A, nu: AdditiveNorm, k: float, samples: int,
                       seed: int) -> ProofChainStats:
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    cplx = np.iscomplexobj(A) or np.iscomplexobj(nu.H.basis)
    X = rng.standard_normal((n, samples))
    if cplx:
        X = X + 1j * rng.standard_normal((n, samples))
    X = X / np.maximum(nu.batch(X), 1e-300)
    AX = A @ X
    Y, _ = nu.split_batch(X)
    ny = nu.base.batch(Y)
    displacement = nu.batch(X - AX)
    drop = nu.batch(X) - nu.batch(AX)
    excess = float(np.max(displacement - (1.0 + k) * ny))
    deficit = float(np.max((1.0 - k) * ny - drop))
    return ProofChainStats(samples=samples, displacement_excess=excess,
                           drop_deficit=deficit)


# ---------------------------------------------------------------------------
# Sampled probe for the strict-monotonicity condition
# ---------------------------------------------------------------------------

class MonotonicityProbe(NamedTuple):
    consistent: bool
    counterexample: tuple[np.ndarray, np.ndarray, np.ndarray] | None
    samples: int


def probe_strict_monotonicity(norm: VectorNorm, H: Subspace, K: Subspace, *,
                              samples: int = 500, seed: int = 0,
                              rtol: float = 1e-12) -> MonotonicityProbe:
    """Sample the condition: growing the H part strictly grows the norm.

    Checks norm(y) < norm(y') implies norm(y + z) < norm(y' + z) on random
    y, y' from H and z from K; equality on the right already violates the
    strict implication.  A universally quantified condition cannot be
    certified this way; the probe reports consistency on the sample or a
    concrete counterexample.
    """
    rng = np.random.default_rng(seed)
    cplx = np.iscomplexobj(H.basis) or np.iscomplexobj(K.basis)

    def draw(S: Subspace):
        c = rng.standard_normal(S.dim)
        if cplx:
            c = c + 1j * rng.standard_normal(S.dim)
        return S.basis @ c

    for i in range(samples):
        y, yp, z = draw(H), draw(H), draw(K)
        ny, nyp = norm(y), norm(yp)
        if ny > nyp:
            y, yp, ny, nyp = yp, y, nyp, ny
        if ny >= nyp * (1.0 - 1e-9):
            continue  # the hypothesis norm(y) < norm(y') is not clearly met
        if norm(y + z) >= norm(yp + z) * (1.0 - rtol):
            return MonotonicityProbe(False, (y, yp, z), i + 1)
    return MonotonicityProbe(True, None, samples)


# ---------------------------------------------------------------------------
# Random instances for audits and experiments
# ---------------------------------------------------------------------------

def random_semisimple_nonexpansive(n: int, rng, *, moving_dim: int | None = None,
                                   k: float | None = None,
                                   complex_field: bool = False):
    """Random matrix acting as the identity on a subspace and contracting
    (euclidean ratio exactly k) on an orthogonal complement.

    Returns (A, moving, fixed, k); eigenvalue 1 is semisimple by
    construction, with fixed space ``fixed`` and moving space ``moving``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    d = moving_dim if moving_dim is not None else int(rng.integers(1, n))
    if not 1 <= d <= n - 1:
        raise ValueError("moving_dim must be between 1 and n - 1")
    if k is None:
        k = float(rng.uniform(0.05, 0.95))
    G = rng.standard_normal((n, n))
    if complex_field:
        G = G + 1j * rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(G)
    Bh, Bk = Q[:, :d], Q[:, d:]
    C = rng.standard_normal((d, d))
    if complex_field:
        C = C + 1j * rng.standard_normal((d, d))
    top = np.linalg.svd(C, compute_uv=False)[0]
    C = C * (k / top)
    A = Bh @ C @ Bh.conj().T + Bk @ Bk.conj().T
    return A, Subspace(Bh), Subspace(Bk), k
