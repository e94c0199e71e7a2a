"""Commuting squares with the scalars in the lower-left corner.

Corner layout and naming used throughout::

        c01  <=  c11          A  <=  X
         ^        ^           ^       ^
        c00  <=  c10          C  <=  B

    c00 = lower left (scalars for every constructor), c10 = lower right
    ("B", the corner whose operator algebra is the first leg of the
    extracted biunitary), c01 = upper left ("A"), c11 = upper right.

The directional basic constructions keep the scalar corner: the new square
shares the untouched edge of the old one, with the two parallel towers
extended by one Jones step driven by a single Jones projection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config, DEFAULT
from .fdalg import (BasicConstructionResult, ExpectationOperator, FdAlgebra,
                    GnsMap, TraceVector, basic_construction, canonical_onb,
                    canonical_trace, inclusion_matrix, matrix_trace,
                    matrix_units)
from .tensorkit import (SubspaceBasis, dagger, norm, orthonormal_rows,
                        partial_transpose, product_span)


class BiunitarityError(ValueError):
    pass


@dataclass(frozen=True)
class Biunitary:
    """u in M_n (x) M_k with both unitarity defects recorded."""

    n: int
    k: int
    u: np.ndarray
    residual_u: float
    residual_pt: float

    @property
    def conj(self) -> np.ndarray:
        """Conjugate letter: entrywise adjoint of the W-valued coefficients,
        i.e. ((t (x) id) u)^*.  This is the convention under which the gauge
        action ad(r (x) q) conjugates every word operator."""
        return dagger(partial_transpose(self.u, self.n, self.k))


def biunitarity_residuals(u: np.ndarray, n: int, k: int) -> tuple[float, float]:
    eye = np.eye(n * k)
    ru = norm(dagger(u) @ u - eye)
    pt = partial_transpose(u, n, k)
    rpt = norm(dagger(pt) @ pt - eye)
    return ru, rpt


def as_biunitary(u: np.ndarray, n: int, k: int, tol: float = 1e-9) -> Biunitary:
    u = np.asarray(u, dtype=complex)
    ru, rpt = biunitarity_residuals(u, n, k)
    if ru > tol or rpt > tol:
        raise BiunitarityError(
            f"not biunitary: |u*u-1|={ru:.3e}, partial transpose defect {rpt:.3e}")
    return Biunitary(n, k, u, ru, rpt)


def is_biunitary(u: np.ndarray, n: int, k: int, tol: float = 1e-9) -> bool:
    ru, rpt = biunitarity_residuals(u, n, k)
    return ru <= tol and rpt <= tol


def flipped(bu: Biunitary) -> Biunitary:
    """The dual datum sigma(u)* in M_k (x) M_n (again biunitary)."""
    from .tensorkit import flip_sigma
    v = dagger(flip_sigma(bu.u, bu.n, bu.k))
    ru, rpt = biunitarity_residuals(v, bu.k, bu.n)
    return Biunitary(bu.k, bu.n, v, ru, rpt)


@dataclass(frozen=True)
class HadamardMatrix:
    """Unitary with all entries of modulus n^{-1/2}."""

    n: int
    w: np.ndarray


def as_hadamard(w: np.ndarray, tol: float = 1e-9) -> HadamardMatrix:
    w = np.asarray(w, dtype=complex)
    n = w.shape[0]
    if w.shape != (n, n):
        raise ValueError("Hadamard candidate must be square")
    ru = norm(dagger(w) @ w - np.eye(n))
    if ru > tol:
        raise ValueError(f"not unitary (residual {ru:.3e})")
    mods = np.abs(np.abs(w) - n ** -0.5)
    if mods.max() > tol:
        i, j = np.unravel_index(int(np.argmax(mods)), w.shape)
        raise ValueError(
            f"entry ({i},{j}) has modulus {abs(w[i, j]):.6f}, expected {n ** -0.5:.6f}")
    return HadamardMatrix(n, w)


def fourier_matrix(n: int) -> HadamardMatrix:
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return as_hadamard(np.exp(2j * np.pi * j * k / n) / np.sqrt(n))


# ---------------------------------------------------------------------------
# squares


@dataclass
class CommutingSquare:
    ambient: int
    c00: FdAlgebra
    c10: FdAlgebra
    c01: FdAlgebra
    c11: FdAlgebra
    trace: TraceVector   # trace of c11, density lives on the ambient


@dataclass
class SquareReport:
    inclusion_residual: float
    commuting_residual: float
    span_dim: int
    c11_dim: int
    nondegenerate: bool

    def passed(self, tol: float) -> bool:
        return (self.inclusion_residual <= tol
                and self.commuting_residual <= tol and self.nondegenerate)


def verify_square(s: CommutingSquare, tol: float | None = None,
                  cfg: Config = DEFAULT, sample: int | None = None) -> SquareReport:
    """Commuting condition E_{c01} E_{c10} = E_{c00} plus non-degeneracy
    (the product span of the middle corners fills c11).

    ``sample`` limits the commuting check to that many random elements of
    c11 (used by tower steps on large ambients); None checks the basis.
    """
    if tol is None:
        tol = cfg.residual_tol
    inc = max(s.c01.basis.containment_residual(s.c00.basis),
              s.c10.basis.containment_residual(s.c00.basis),
              s.c11.basis.containment_residual(s.c01.basis),
              s.c11.basis.containment_residual(s.c10.basis))
    e01 = ExpectationOperator(s.c01, s.trace)
    e10 = ExpectationOperator(s.c10, s.trace)
    e00 = ExpectationOperator(s.c00, s.trace)
    mats = s.c11.matrices()
    if sample is not None and sample < mats.shape[0]:
        rng = cfg.rng(salt=17)
        coef = rng.standard_normal((sample, mats.shape[0]))
        mats = np.tensordot(coef, mats, axes=(1, 0))
    comm = 0.0
    for x in mats:
        comm = max(comm, norm(e01(e10(x)) - e00(x)), norm(e10(e01(x)) - e00(x)))
    span = product_span(s.c10.basis, s.c01.basis, cfg)
    nondeg = (span.dim == s.c11.dim
              and s.c11.basis.containment_residual(span) <= 10 * tol)
    return SquareReport(inc, comm, span.dim, s.c11.dim, nondeg)


def _unit_matrices(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(n):
            g = np.zeros((n, n), dtype=complex)
            g[i, j] = 1.0
            out.append(g)
    return out


def vertex_model(bu: Biunitary, cfg: Config = DEFAULT) -> CommutingSquare:
    """Square (C < u(M_n (x) 1)u* ; 1 (x) M_k < M_n (x) M_k)."""
    n, k, u = bu.n, bu.k, bu.u
    N = n * k
    eye_k = np.eye(k)
    gens_b = [u @ np.kron(g, eye_k) @ dagger(u) for g in _unit_matrices(n)]
    gens_a = [np.kron(np.eye(n), g) for g in _unit_matrices(k)]
    return CommutingSquare(
        ambient=N,
        c00=FdAlgebra.scalars(N, cfg),
        c10=FdAlgebra.from_generators(gens_b, N, cfg),
        c01=FdAlgebra.from_generators(gens_a, N, cfg),
        c11=FdAlgebra.full(N, cfg),
        trace=matrix_trace(N, cfg),
    )


def spin_model(had: HadamardMatrix, cfg: Config = DEFAULT) -> CommutingSquare:
    """Square (C < w Delta w* ; Delta < M_n)."""
    n, w = had.n, had.w
    gens_b = [w @ np.diag(np.eye(n)[i]).astype(complex) @ dagger(w) for i in range(n)]
    return CommutingSquare(
        ambient=n,
        c00=FdAlgebra.scalars(n, cfg),
        c10=FdAlgebra.from_generators(gens_b, n, cfg),
        c01=FdAlgebra.diagonal(n, cfg),
        c11=FdAlgebra.full(n, cfg),
        trace=matrix_trace(n, cfg),
    )


def dual_square(s: CommutingSquare) -> CommutingSquare:
    """Interchange the two middle corners (exact, no arithmetic)."""
    return CommutingSquare(s.ambient, s.c00, c10=s.c01, c01=s.c10,
                           c11=s.c11, trace=s.trace)


@dataclass
class SquareStep:
    """One directional basic construction applied to a square."""

    square: CommutingSquare
    bc: BasicConstructionResult
    new_edge: FdAlgebra          # the second extended tower algebra
    lam: float

    @property
    def gns(self) -> GnsMap:
        return self.bc.gns


def _parallel_extension(small: FdAlgebra, corner: FdAlgebra, gns: GnsMap,
                        e: np.ndarray, cfg: Config) -> FdAlgebra:
    """span{ lambda(small) e lambda(small) } = <small, e> on the new ambient.

    The ladder identifies this with the abstract basic construction of
    corner < small, which fixes the expected dimension and block data;
    the span is built from random two-sided products and rank-checked.
    """
    mats = np.stack([gns.apply(x) for x in small.matrices()])
    D = gns.dim
    lam_inc = inclusion_matrix(corner, small)
    sizes = np.array([d for d, _, _ in small.block_data])
    t = lam_inc @ sizes
    expected = int(np.sum(t * t))
    rng = cfg.rng(salt=431)
    n_cand = expected + max(8, expected // 8)
    dim_s = mats.shape[0]
    cx = rng.standard_normal((n_cand, dim_s)) + 1j * rng.standard_normal((n_cand, dim_s))
    cy = rng.standard_normal((n_cand, dim_s)) + 1j * rng.standard_normal((n_cand, dim_s))
    xs = np.tensordot(cx, mats, axes=(1, 0))
    ys = np.tensordot(cy, mats, axes=(1, 0))
    cand = np.einsum("aij,jk,akl->ail", xs, e, ys, optimize=True).reshape(-1, D * D)
    rows = orthonormal_rows(cand / np.sqrt(D), cfg=cfg)
    if rows.shape[0] != expected:
        left = np.einsum("aij,jk->aik", mats, e, optimize=True)
        prods = np.einsum("aij,bjk->abik", left, mats,
                          optimize=True).reshape(-1, D * D)
        rows = orthonormal_rows(np.concatenate([rows, prods / np.sqrt(D)]), cfg=cfg)
        if rows.shape[0] != expected:
            raise ValueError(
                f"parallel tower extension has dim {rows.shape[0]}, "
                f"ladder predicts {expected}")
    return FdAlgebra(SubspaceBasis(D, rows), check=False, cfg=cfg)


def _push(alg: FdAlgebra, gns: GnsMap, cfg: Config) -> FdAlgebra:
    mats = [gns.apply(x) for x in alg.matrices()]
    blocks = None
    if alg._block_data is not None:
        blocks = []
        for d, _, p in alg.block_data:
            q = gns.apply(p)
            blocks.append((d, int(np.round(np.real(np.trace(q)))) // d, q))
    return FdAlgebra(SubspaceBasis.from_matrices(mats, gns.dim, cfg),
                     check=False, cfg=cfg, block_data=blocks)


def basic_construction_right(s: CommutingSquare, cfg: Config = DEFAULT) -> SquareStep:
    """Extend the horizontal towers: Jones step on the top edge c01 < c11,
    the same projection extending the bottom edge; shares the left edge."""
    bc = basic_construction(s.c01, s.c11, s.trace, cfg)
    gns, e = bc.gns, bc.jones_projection
    b_ext = _parallel_extension(s.c10, s.c00, gns, e, cfg)
    new = CommutingSquare(
        ambient=gns.dim,
        c00=_push(s.c00, gns, cfg),
        c10=b_ext,
        c01=_push(s.c01, gns, cfg),
        c11=bc.extended,
        trace=bc.trace,
    )
    return SquareStep(new, bc, b_ext, bc.lam)


def basic_construction_up(s: CommutingSquare, cfg: Config = DEFAULT) -> SquareStep:
    """Extend the vertical towers: Jones step on the right edge c10 < c11,
    the same projection extending the left edge; shares the bottom edge."""
    bc = basic_construction(s.c10, s.c11, s.trace, cfg)
    gns, e = bc.gns, bc.jones_projection
    a_ext = _parallel_extension(s.c01, s.c00, gns, e, cfg)
    new = CommutingSquare(
        ambient=gns.dim,
        c00=_push(s.c00, gns, cfg),
        c10=_push(s.c10, gns, cfg),
        c01=a_ext,
        c11=bc.extended,
        trace=bc.trace,
    )
    return SquareStep(new, bc, a_ext, bc.lam)


# ---------------------------------------------------------------------------
# biunitary extraction


class GaugeError(RuntimeError):
    pass




def extract_biunitary(s: CommutingSquare, cfg: Config = DEFAULT,
                      tol: float = 1e-8) -> Biunitary:
    """Biunitary of a square with scalar corner, in L(l2(B)) (x) L(l2(A)).

    For a non-degenerate commuting square the two product maps

        a (x) b -> (ab)^    and    b (x) a -> (ba)^

    are unitaries l2(A) (x) l2(B) -> l2(X) resp. l2(B) (x) l2(A) -> l2(X)
    (independence: tr(ab) = tr(a) tr(b)).  Composing one with the adjoint
    of the other and the flip yields the canonical angle matrix

        u[(r,c),(s,d)] = tr(b_r^* a_c^* b_s a_d)

    in the canonical-trace orthonormal bases of the middle corners.  This
    realizes the upward Jones step of the square conjugated onto the
    canonical position: the copy of L(A) acts on the second leg, B acts on
    the first in its left regular representation, and b -> u (b (x) 1) u^*
    is the resulting inclusion of B into B (x) L(A).  Changing the two
    orthonormal bases moves u by the gauge ad(r (x) q); gauge-invariant
    data (intertwiner dimensions, traces) is the contractual output.
    """
    if s.c00.dim != 1:
        raise ValueError("extraction requires the scalar corner")
    a_mats = canonical_onb(s.c01, s.trace)
    b_mats = canonical_onb(s.c10, s.trace)
    rho = s.trace.density
    left = np.einsum("rij,cjk->rcik", b_mats.conj().transpose(0, 2, 1),
                     a_mats.conj().transpose(0, 2, 1), optimize=True)
    right = np.einsum("sij,djk->sdik", b_mats, a_mats, optimize=True)
    u = np.einsum("pq,rcqi,sdip->rcsd", rho, left, right, optimize=True)
    b_dim, a_dim = b_mats.shape[0], a_mats.shape[0]
    u_mat = u.reshape(b_dim * a_dim, b_dim * a_dim)
    ru, rpt = biunitarity_residuals(u_mat, b_dim, a_dim)
    if max(ru, rpt) > tol:
        raise GaugeError(
            f"angle matrix fails biunitarity ({ru:.2e}, {rpt:.2e}); "
            "the square is degenerate or not commuting")
    return Biunitary(b_dim, a_dim, u_mat, ru, rpt)


# ---------------------------------------------------------------------------
# gauge alignment


@dataclass
class GaugeResult:
    ok: bool
    r: np.ndarray | None
    q: np.ndarray | None
    residual: float


def _polar_unitary(x: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(x)
    return u @ vh


def align_gauge(u1: Biunitary, u2: Biunitary, cfg: Config = DEFAULT,
                tol: float = 1e-8) -> GaugeResult:
    """Search unitaries r, q with (r (x) q) u2 (r (x) q)* = u1.

    The commutation form T u2 = u1 T is linear in T = r (x) q: we compute
    the intertwiner space once and alternate rank-one realignment with polar
    projection inside it, restarting from seeded random points.  Failure is
    a legitimate outcome (the inputs need not be gauge equivalent).
    """
    if (u1.n, u1.k) != (u2.n, u2.k):
        return GaugeResult(False, None, None, float("inf"))
    n, k = u1.n, u1.k
    # T u2 = u1 T is linear in vec(T): (1 (x) u2^T - u1 (x) 1) vec(T) = 0
    sup = np.kron(np.eye(n * k), u2.u.T) - np.kron(u1.u, np.eye(n * k))
    from .tensorkit import nullspace_rows
    null = nullspace_rows(sup, cfg=cfg)
    if null.shape[0] == 0:
        return GaugeResult(False, None, None, float("inf"))
    best = GaugeResult(False, None, None, float("inf"))
    for trial in range(cfg.gauge_restarts):
        rng = cfg.rng(salt=1000 + trial)
        c = rng.standard_normal(null.shape[0]) + 1j * rng.standard_normal(null.shape[0])
        t = (c @ null).reshape(n * k, n * k)
        r = q = None
        for _ in range(cfg.gauge_iters):
            # nearest r (x) q: realignment + leading singular pair
            re = t.reshape(n, k, n, k).transpose(0, 2, 1, 3).reshape(n * n, k * k)
            uu, ss, vvh = np.linalg.svd(re)
            r = _polar_unitary(uu[:, 0].reshape(n, n))
            q = _polar_unitary(vvh[0].conj().reshape(k, k))
            prod = np.kron(r, q).reshape(-1)
            # project back into the intertwiner space
            t_new = (null.conj() @ prod) @ null
            t_new = t_new.reshape(n * k, n * k)
            if np.linalg.norm(t_new - t) < 1e-14:
                t = t_new
                break
            t = t_new
        g = np.kron(r, q)
        resid = norm(g @ u2.u @ dagger(g) - u1.u)
        if resid < best.residual:
            best = GaugeResult(resid <= tol, r, q, resid)
        if best.ok:
            break
    return best


# ---------------------------------------------------------------------------
# quantum-automorphism relations


@dataclass
class QautReport:
    unit_residual: float
    mult_residual: float

    def passed(self, tol: float) -> bool:
        return self.unit_residual <= tol and self.mult_residual <= tol


def qaut_relations(bu: Biunitary, b_alg: FdAlgebra,
                   tr: TraceVector | None = None) -> QautReport:
    """Residuals of the unit and multiplication intertwiner relations of the
    corner algebra against the biunitary (first leg = L^2 of the algebra,
    in its canonical-trace orthonormal basis)."""
    if tr is None:
        tr = canonical_trace(b_alg)
    b_mats = canonical_onb(b_alg, tr)
    bdim = b_mats.shape[0]
    if bu.n != bdim:
        raise ValueError(f"first leg has size {bu.n}, algebra dimension {bdim}")
    k = bu.k
    eta = np.array([tr(dagger(x)) for x in b_mats])
    prods = np.einsum("mab,nbc->mnac", b_mats, b_mats, optimize=True)
    mu = np.einsum("ij,kcj,mnci->kmn", tr.density, b_mats.conj(), prods,
                   optimize=True).reshape(bdim, bdim * bdim)
    u = bu.u
    unit_res = norm(u @ np.kron(eta.reshape(-1, 1), np.eye(k))
                    - np.kron(eta.reshape(-1, 1), np.eye(k)))
    # word u_13 u_23 on V (x) V (x) W with one shared W leg
    from .tensorkit import embed_legs
    x13 = embed_legs(u, [bdim, k], [bdim, bdim, k], [0, 2])
    x23 = embed_legs(u, [bdim, k], [bdim, bdim, k], [1, 2])
    word = x13 @ x23
    lhs = np.kron(mu, np.eye(k))   # rows (V,W), cols (V,V,W)
    mult_res = norm(lhs @ word - u @ lhs)
    return QautReport(unit_res, mult_res)
