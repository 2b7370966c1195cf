"""Smallest-magnitude eigenvalues of the pencil and their transmission eigenvalues.

With A symmetric positive definite, ``A x = lambda B x`` is equivalent to
``A^{-1} B x = mu x`` with ``mu = 1 / lambda``.  ARPACK's implicitly restarted
Arnoldi iteration on that operator returns the largest ``|mu|`` first, i.e.
the smallest ``|lambda|``; the infinite eigenvalues caused by the singular B
map to ``mu = 0`` and stay out of the way.  A complex shift ``s`` switches to
``(A - s B)^{-1} B`` in complex arithmetic.

Transmission eigenvalues follow from ``lambda = -k^2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Eigensolver failure; ``residuals`` holds whatever was achieved."""

    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals if residuals is not None else []


class FactorizationError(SolverError):
    pass


@dataclass
class SolverConfig:
    nev: int = 4
    krylov_dim: int | None = None
    tol: float = 1e-10
    max_restarts: int = 50
    shift: complex = 0.0

    def __post_init__(self):
        if self.nev < 1:
            raise ValueError("nev must be positive")
        if self.krylov_dim is None:
            self.krylov_dim = max(40, 4 * self.nev)
        if self.krylov_dim < 2 * self.nev + 2:
            raise ValueError("krylov_dim must be at least 2*nev + 2")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_restarts < 1:
            raise ValueError("max_restarts must be positive")


@dataclass
class EigenPair:
    lam: complex
    k: complex
    residual: float
    x: np.ndarray = field(repr=False)
    backward_error: float = 0.0

    @property
    def physical(self) -> bool:
        """False for purely imaginary k (positive real lambda)."""
        return not (abs(self.k.real) <= 1e-12 * abs(self.k) and abs(self.k.imag) > 0)


def to_transmission_k(lam: complex) -> complex:
    """Principal square root of ``-lambda`` (Re k >= 0)."""
    lam = complex(lam)
    if lam == 0:
        raise SolverError("lambda = 0 does not correspond to a transmission eigenvalue")
    k = np.sqrt(-lam)
    if k.real == 0.0 and k.imag < 0:
        k = -k
    # drop the sign of a zero part so real values print without "-0i"
    return complex(k.real + 0.0, k.imag + 0.0)


def spd_factorize(A: sps.spmatrix):
    """Sparse LU with symmetric pivoting; raises if A is not positive definite.

    With diagonal pivoting forced and a symmetric fill-reducing ordering the
    factorization is ``P A P^T = L U`` with ``diag(U)`` equal to the pivots of
    the LDL^T factorization, so positive pivots certify positive definiteness.
    """
    A = sps.csc_matrix(A)
    try:
        lu = spla.splu(
            A,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:  # singular
        raise FactorizationError(f"factorization of A failed: {exc}") from exc
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise FactorizationError("factorization of A needed off-diagonal pivoting; A is not SPD")
    piv = lu.U.diagonal()
    if not np.all(piv > 0):
        raise FactorizationError(
            f"A is not positive definite: {int(np.sum(piv <= 0))} non-positive pivots"
        )
    return lu


def _sort_key_groups(pairs: list[EigenPair]) -> list[EigenPair]:
    pairs = sorted(pairs, key=lambda p: abs(p.k))
    out: list[EigenPair] = []
    i = 0
    while i < len(pairs):
        j = i + 1
        while j < len(pairs) and abs(abs(pairs[j].k) - abs(pairs[i].k)) <= 1e-9 * abs(pairs[i].k):
            j += 1
        out += sorted(pairs[i:j], key=lambda p: p.k.imag)
        i = j
    return out


def residual_norms(A, B, lam: complex, x: np.ndarray) -> tuple[float, float]:
    """Absolute ``||Ax - lam Bx|| / ||x||`` and the normwise backward error."""
    r = A @ x - lam * (B @ x)
    nx = np.linalg.norm(x)
    res = float(np.linalg.norm(r) / nx)
    scale = spla.norm(A, 1) + abs(lam) * spla.norm(B, 1)
    return res, res / scale


def _complete_conjugates(lams, vecs, tol):
    lams = list(lams)
    vecs = [v for v in vecs.T]
    for i in range(len(lams)):
        lam = lams[i]
        if abs(lam.imag) > tol * abs(lam):
            if not any(abs(l - np.conj(lam)) <= 1e2 * tol * abs(lam) for l in lams):
                lams.append(np.conj(lam))
                vecs.append(np.conj(vecs[i]))
    return np.array(lams), np.column_stack(vecs)


def _dense_fallback(A, B, shift):
    import scipy.linalg as sla

    w, V = sla.eig(A.toarray(), B.toarray())
    ok = np.isfinite(w)
    return w[ok], V[:, ok]


def solve_pencil(pencil, cfg: SolverConfig | None = None, A=None, B=None) -> list[EigenPair]:
    """Eigenpairs with the ``cfg.nev`` smallest ``|lambda|``, sorted by ascending ``|k|``.

    ``pencil`` may be an :class:`~tevem.assembly.EigenPencil` or ``None`` when
    ``A`` and ``B`` are passed directly.  Conjugate pairs are always returned
    complete, so the result may hold more than ``nev`` pairs.
    """
    cfg = cfg or SolverConfig()
    if pencil is not None:
        A, B = pencil.A, pencil.B
    A = sps.csr_matrix(A)
    B = sps.csr_matrix(B)
    n = A.shape[0]
    if B.nnz == 0 or not np.any(B.data):
        raise SolverError("B is identically zero: every eigenvalue is infinite")
    shift = complex(cfg.shift)
    lu = spd_factorize(A)  # certifies SPD even when a shift is used
    nreq = min(cfg.nev + 2, n)
    ncv = min(cfg.krylov_dim, n)
    if nreq >= n - 1 or ncv <= nreq + 1:
        lams, vecs = _dense_fallback(A, B, shift)
    else:
        if shift == 0:
            op = spla.LinearOperator((n, n), matvec=lambda v: lu.solve(B @ v), dtype=float)
        else:
            dtype = complex if shift.imag else float
            shifted = spla.splu(sps.csc_matrix(A - (shift if shift.imag else shift.real) * B, dtype=dtype))
            op = spla.LinearOperator((n, n), matvec=lambda v: shifted.solve(B @ v), dtype=dtype)
        v0 = np.ones(n) / np.sqrt(n)
        try:
            mu, vecs = spla.eigs(op, k=nreq, which="LM", ncv=ncv, tol=cfg.tol,
                                 maxiter=cfg.max_restarts * ncv, v0=v0)
        except spla.ArpackNoConvergence as exc:
            res = [residual_norms(A, B, shift + 1.0 / m, v)[0] for m, v in zip(exc.eigenvalues, exc.eigenvectors.T)]
            raise SolverError(f"Arnoldi iteration did not converge ({len(res)} of {nreq} pairs)", res) from exc
        keep = np.abs(mu) > 0
        lams = shift + 1.0 / mu[keep]
        vecs = vecs[:, keep]
    if shift == 0:
        lams, vecs = _complete_conjugates(lams, vecs, 1e-8)
    pairs = []
    for lam, x in zip(lams, vecs.T):
        lam = complex(lam)
        x = x / np.linalg.norm(x)
        # fix the phase so the largest entry is real and positive
        x = x * np.exp(-1j * np.angle(x[np.argmax(np.abs(x))]))
        res, bwd = residual_norms(A, B, lam, x)
        pairs.append(EigenPair(lam, to_transmission_k(lam), res, x, bwd))
    pairs = _sort_key_groups(pairs)
    cut = min(cfg.nev, len(pairs))
    # do not split a conjugate pair at the cut
    while cut < len(pairs) and abs(pairs[cut].k - np.conj(pairs[cut - 1].k)) <= 1e-8 * abs(pairs[cut].k) \
            and abs(pairs[cut].k.imag) > 0:
        cut += 1
    return pairs[:cut]


@dataclass
class ResidualReport:
    residuals: np.ndarray
    backward_errors: np.ndarray
    tol: float

    @property
    def flagged(self) -> list[int]:
        return np.flatnonzero(self.backward_errors > self.tol).tolist()

    @property
    def ok(self) -> bool:
        return not self.flagged


def verify_residuals(pencil_or_A, pairs, tol: float = 1e-10, B=None) -> ResidualReport:
    """Recompute residuals from the sparse matrices, independent of the solver internals.

    A pair is flagged when its normwise backward error
    ``||Ax - lam Bx|| / ((||A||_1 + |lam| ||B||_1) ||x||)`` exceeds ``tol``.
    """
    if B is None:
        A, B = pencil_or_A.A, pencil_or_A.B
    else:
        A = pencil_or_A
    res = np.empty(len(pairs))
    bwd = np.empty(len(pairs))
    for i, p in enumerate(pairs):
        res[i], bwd[i] = residual_norms(A, B, p.lam, p.x)
    return ResidualReport(res, bwd, tol)
