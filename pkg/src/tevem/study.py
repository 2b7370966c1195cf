"""Refinement studies: solve on a mesh sequence, track modes, fit orders, print tables.

The convergence model is ``k_h = k* + C h^alpha``.  It is fitted by
Gauss-Newton on ``(k*, C, alpha)``; complex eigenvalues are fitted separately
for the real and the imaginary part.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .assembly import assemble
from .eigensolve import SolverConfig, SolverError, solve_pencil, verify_residuals
from .mesh import generate_structured, geometry

log = logging.getLogger(__name__)

AMBIGUITY_TOL = 1e-6


@dataclass
class StudyConfig:
    domain: str
    family: str
    levels: list[int]
    n_index: float
    nev: int = 4
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int | None = None
    backend: str | None = None

    def __post_init__(self):
        self.levels = [int(N) for N in self.levels]
        if len(self.levels) < 3:
            raise ValueError("a study needs at least 3 refinement levels to fit an order")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("refinement levels must be strictly increasing")
        if not self.n_index > 1:
            raise ValueError("index of refraction must satisfy n > 1")
        if self.nev < 1:
            raise ValueError("nev must be positive")


@dataclass
class OrderFit:
    alpha: float
    k_star: float
    C: float
    residual: float
    low_confidence: bool = False


@dataclass
class ModeFit:
    """Fit of one tracked mode; ``imag`` is None for real eigenvalues."""

    real: OrderFit
    imag: OrderFit | None

    @property
    def k_star(self) -> complex:
        return complex(self.real.k_star, self.imag.k_star if self.imag else 0.0)

    @property
    def alpha(self) -> tuple[float, float]:
        return self.real.alpha, (self.imag.alpha if self.imag else math.nan)

    @property
    def low_confidence(self) -> bool:
        return self.real.low_confidence or bool(self.imag and self.imag.low_confidence)


@dataclass
class ConvergenceTable:
    domain: str
    family: str
    n_index: float
    N: list[int]
    h: np.ndarray  # (levels,)
    k: np.ndarray  # (levels, nev) complex, columns are tracked modes
    residual: np.ndarray  # (levels, nev) backward errors
    fits: list[ModeFit]
    ambiguities: list[str] = field(default_factory=list)

    @property
    def nev(self) -> int:
        return self.k.shape[1]


# ------------------------------------------------------------------ fitting


def _model(p, h):
    return p[0] + p[1] * h ** p[2]


def _initial_guess(h, k):
    # three-point closed form on the finest levels (exact for geometric h)
    h1, h2, h3 = h[-3:]
    k1, k2, k3 = k[-3:]
    d12, d23 = k1 - k2, k2 - k3
    ok = d12 != 0 and d23 != 0 and d12 * d23 > 0 and abs(d12) != abs(d23)
    alpha = math.log(abs(d12) / abs(d23)) / math.log(h1 / h2) if ok else 2.0
    if not np.isfinite(alpha) or alpha <= 0:
        # differences grow under refinement: not in the asymptotic range
        ok = False
        alpha = 2.0
    C = d12 / (h1**alpha - h2**alpha) if h1 != h2 else 0.0
    return np.array([k3 - C * h3**alpha, C, alpha]), ok


def fit_order(h, k, max_iter: int = 100) -> OrderFit:
    """Least-squares fit of ``k = k* + C h^alpha`` to real samples.

    ``low_confidence`` is set when the differences between levels are not
    monotone in one direction, or when ``|k_j - k*|`` does not decrease with
    ``h`` (so the asymptotic model is not yet in force).
    """
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    if len(h) < 3 or len(h) != len(k):
        raise ValueError("fit_order needs at least 3 samples of (h, k)")
    if len(np.unique(h)) != len(h) or np.any(h <= 0):
        raise ValueError("sample mesh sizes must be positive and distinct")
    order = np.argsort(-h)
    h, k = h[order], k[order]
    scale = max(np.max(np.abs(k)), 1e-300)
    if np.max(np.abs(k - k[-1])) <= 1e-14 * scale:  # constant sequence
        return OrderFit(math.nan, float(k[-1]), 0.0, 0.0, low_confidence=True)
    p, monotone = _initial_guess(h, k)
    # Gauss-Newton with step halving; log h keeps the alpha column well scaled
    logh = np.log(h)
    r = k - _model(p, h)
    for _ in range(max_iter):
        hp = h ** p[2]
        J = np.column_stack([np.ones_like(h), hp, p[1] * hp * logh])
        step, *_ = np.linalg.lstsq(J, r, rcond=None)
        t = 1.0
        while t > 1e-6:
            q = p + t * step
            rq = k - _model(q, h)
            if np.linalg.norm(rq) <= np.linalg.norm(r):
                break
            t *= 0.5
        else:
            break
        p, r_old, r = q, r, rq
        if np.linalg.norm(t * step) <= 1e-15 * (1 + np.linalg.norm(p)) or np.linalg.norm(r_old) - np.linalg.norm(r) <= 1e-30:
            break
    err = np.abs(k - p[0])
    low = (not monotone) or bool(np.any(np.diff(err) > 0)) or not (p[2] > 0)
    return OrderFit(float(p[2]), float(p[0]), float(p[1]), float(np.sqrt(np.mean(r**2))), low)


def fit_mode(h, k, imag_tol: float = 1e-8) -> ModeFit:
    """Fit a (possibly complex) mode componentwise."""
    k = np.asarray(k, dtype=complex)
    real = fit_order(h, k.real)
    if np.all(np.abs(k.imag) <= imag_tol * np.abs(k)):
        return ModeFit(real, None)
    return ModeFit(real, fit_order(h, k.imag))


# ------------------------------------------------------------------ tracking


def track_modes(levels: list[np.ndarray], nev: int, tol: float = AMBIGUITY_TOL):
    """Follow the ``nev`` smallest values of the finest level back to the coarser ones.

    Consecutive levels are matched by the assignment minimising the summed
    distance in the complex plane.  Finest-first ordering lets the best
    resolved level define the modes; the global assignment avoids greedy
    mistakes when a coarse level moves more than the gap between modes.  A
    conjugate pair is matched jointly because crossing it would cost more.
    When the two best candidates of a mode are equally far (within ``tol``)
    but distinct, the choice is reported.
    """
    levels = [np.asarray(c, dtype=complex) for c in levels]
    for j, cand in enumerate(levels):
        if len(cand) < nev:
            raise ValueError(f"level {j} produced {len(cand)} eigenvalues, fewer than nev={nev}")
    current = levels[-1][:nev].copy()
    out = [current.copy()]
    notes = []
    for j in range(len(levels) - 2, -1, -1):
        cand = levels[j]
        dist = np.abs(current[:, None] - cand[None, :])
        _, cols = linear_sum_assignment(dist)
        for i in range(nev):
            order = np.argsort(dist[i], kind="stable")
            if len(order) > 1 and dist[i, order[1]] - dist[i, order[0]] <= tol \
                    and abs(cand[order[0]] - cand[order[1]]) > tol:
                notes.append(f"level {j}, mode {i + 1}: candidates {cand[order[0]]:.8f} and "
                             f"{cand[order[1]]:.8f} equally close")
        current = cand[cols]
        out.append(current.copy())
    return np.array(out[::-1]), notes


# ------------------------------------------------------------------ studies


def solve_level(cfg: StudyConfig, N: int, nev: int):
    mesh = generate_structured(cfg.domain, cfg.family, N, seed=cfg.seed)
    h = geometry(mesh).h
    pencil = assemble(mesh, cfg.n_index, backend=cfg.backend)
    solver = SolverConfig(
        nev=nev,
        krylov_dim=max(cfg.solver.krylov_dim, 4 * nev),
        tol=cfg.solver.tol,
        max_restarts=cfg.solver.max_restarts,
        shift=cfg.solver.shift,
    )
    pairs = solve_pencil(pencil, solver)
    report = verify_residuals(pencil, pairs, tol=max(cfg.solver.tol, 1e-10))
    if not report.ok:
        raise SolverError(f"N={N}: residual check failed for pairs {report.flagged}", report.backward_errors.tolist())
    return h, pairs, report


def run_study(cfg: StudyConfig) -> ConvergenceTable:
    hs, ks, bwd = [], [], []
    # a couple of extra candidates on every level absorb reorderings
    extra = 2
    for N in cfg.levels:
        h, pairs, report = solve_level(cfg, N, cfg.nev + extra)
        log.info("N=%d h=%.5f k=%s", N, h, [f"{p.k:.6f}" for p in pairs[: cfg.nev]])
        hs.append(h)
        ks.append(np.array([p.k for p in pairs]))
        bwd.append(dict(zip([p.k for p in pairs], report.backward_errors)))
    tracked, notes = track_modes(ks, cfg.nev)
    res = np.array([[bwd[j].get(k, np.nan) for k in row] for j, row in enumerate(tracked)])
    h = np.array(hs)
    fits = [fit_mode(h, tracked[:, i]) for i in range(cfg.nev)]
    return ConvergenceTable(cfg.domain, cfg.family, cfg.n_index, list(cfg.levels), h, tracked, res, fits, notes)


# ------------------------------------------------------------------ output


def format_complex(z: complex, digits: int = 4) -> str:
    z = complex(z)
    if round(z.imag, digits) == 0:
        return f"{z.real:.{digits}f}"
    sign = "+" if z.imag > 0 else "-"
    return f"{z.real:.{digits}f}{sign}{abs(z.imag):.{digits}f}i"


def _format_order(fit: ModeFit) -> str:
    re, im = fit.alpha
    s = f"{re:.2f}" if fit.imag is None else f"{re:.2f} & {im:.2f}"
    return s + ("*" if fit.low_confidence else "")


def emit_table(table: ConvergenceTable, format: str = "text") -> bytes:
    """Render a study as a text table or as CSV (full precision)."""
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "N", "h", "i", "re_k", "im_k", "residual"])
        for j, N in enumerate(table.N):
            for i in range(table.nev):
                k = table.k[j, i]
                w.writerow([j, N, repr(float(table.h[j])), i + 1, repr(float(k.real)), repr(float(k.imag)),
                            repr(float(table.residual[j, i]))])
        w.writerow(["fit", "i", "alpha_re", "alpha_im", "re_kstar", "im_kstar"])
        for i, f in enumerate(table.fits):
            a_re, a_im = f.alpha
            w.writerow(["fit", i + 1, repr(a_re), repr(a_im), repr(f.k_star.real), repr(f.k_star.imag)])
        return buf.getvalue().encode()
    if format != "text":
        raise ValueError(f"unknown table format {format!r}")
    head = ["Mesh"] + [f"k{i + 1}h" for i in range(table.nev)]
    rows = [[f"N={N}"] + [format_complex(k) for k in table.k[j]] for j, N in enumerate(table.N)]
    rows.append(["Order"] + [_format_order(f) for f in table.fits])
    rows.append(["Extrapolated"] + [format_complex(f.k_star) for f in table.fits])
    widths = [max(len(r[c]) for r in [head] + rows) for c in range(len(head))]
    lines = [f"# {table.domain}, {table.family} meshes, n = {table.n_index:g}"]
    for r in [head] + rows:
        lines.append("  ".join(s.rjust(wd) for s, wd in zip(r, widths)).rstrip())
    if any(f.low_confidence for f in table.fits):
        lines.append("* low-confidence fit: errors not monotone over the levels")
    for note in table.ambiguities:
        lines.append(f"! tracking ambiguity: {note}")
    return ("\n".join(lines) + "\n").encode()
