"""Finite-dimensional C*-algebras as concrete *-subalgebras of a matrix algebra.

An :class:`FdAlgebra` is a *-closed unital span inside some M_N.  Block
structure (the abstract (+) M_{d_i} decomposition together with ambient
multiplicities) is derived from the center; traces are stored per block and
realized as density matrices on the ambient so that tr(x) = Tr(rho x).

The Jones basic construction is realized explicitly on the GNS space of
(M, tr); the Markov check is construction-and-verify: the extension trace is
solved for block weights and the four characterizing conditions of a basic
construction are evaluated as residuals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import Config, DEFAULT
from .tensorkit import (SubspaceBasis, algebra_closure, dagger, nullspace_rows,
                        orthonormal_rows)


class AlgebraIntegrityError(ValueError):
    pass


class MarkovFailure(ValueError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _cluster(evals: np.ndarray, tol: float) -> list[list[int]]:
    clusters = [[0]]
    for i in range(1, len(evals)):
        if abs(evals[i] - evals[clusters[-1][-1]]) < tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


class FdAlgebra:
    """A unital *-subalgebra of M_N given by an orthonormal basis."""

    def __init__(self, basis: SubspaceBasis, check: bool = True, cfg: Config = DEFAULT,
                 block_data: list[tuple[int, int, np.ndarray]] | None = None):
        self.basis = basis
        self.ambient = basis.ambient
        self.cfg = cfg
        self._block_data = block_data
        if check:
            self._check_integrity()

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_generators(cls, generators: Sequence[np.ndarray], ambient: int,
                        cfg: Config = DEFAULT) -> "FdAlgebra":
        return cls(algebra_closure(generators, ambient, cfg), check=False, cfg=cfg)

    @classmethod
    def scalars(cls, ambient: int, cfg: Config = DEFAULT) -> "FdAlgebra":
        return cls.from_generators([], ambient, cfg)

    @classmethod
    def full(cls, ambient: int, cfg: Config = DEFAULT) -> "FdAlgebra":
        vecs = np.eye(ambient * ambient, dtype=complex)
        return cls(SubspaceBasis(ambient, vecs), check=False, cfg=cfg)

    @classmethod
    def diagonal(cls, ambient: int, cfg: Config = DEFAULT) -> "FdAlgebra":
        mats = [np.diag(np.eye(ambient)[i]).astype(complex) for i in range(ambient)]
        return cls(SubspaceBasis.from_matrices(mats, ambient, cfg), check=False, cfg=cfg)

    # -- basic queries -----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.basis.dim

    def matrices(self) -> np.ndarray:
        return self.basis.matrices()

    def contains_matrix(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return self.basis.contains_matrix(x, tol)

    def contains_algebra(self, other: "FdAlgebra", tol: float = 1e-9) -> bool:
        return self.basis.contains(other.basis, tol)

    def _check_integrity(self) -> None:
        N = self.ambient
        if not self.basis.contains_matrix(np.eye(N, dtype=complex), 1e-8):
            raise AlgebraIntegrityError("basis does not contain the identity")
        mats = self.matrices()
        worst = 0.0
        for m in mats:
            worst = max(worst, self.basis.residual(dagger(m)))
        prods = np.einsum("aij,bjk->abik", mats, mats, optimize=True)
        for p in prods.reshape(-1, N, N):
            worst = max(worst, self.basis.residual(p))
        if worst > 1e-8 * max(1.0, float(np.max(np.abs(mats)))):
            raise AlgebraIntegrityError(f"basis not closed (residual {worst:.2e})")

    # -- structure ---------------------------------------------------------

    @property
    def center_basis(self) -> SubspaceBasis:
        """Basis of the center, solved from [x, b_j] = 0 within the span."""
        mats = self.matrices()
        d, N = self.dim, self.ambient
        normal = np.zeros((d, d), dtype=complex)
        for b in mats:
            comm = (np.einsum("aij,jk->aik", mats, b, optimize=True)
                    - np.einsum("ij,ajk->aik", b, mats, optimize=True))
            rows = comm.reshape(d, N * N)
            normal += rows @ rows.conj().T
        evals, evecs = np.linalg.eigh((normal + dagger(normal)) / 2)
        # eigenvalues are summed squared commutator norms; O(N)-scaled basis
        # elements make a genuinely non-central direction >> this floor
        cutoff = max(float(evals[-1]) * self.cfg.rank_rtol ** 2, (1e-8 * N) ** 2)
        coeffs = evecs[:, evals < cutoff].T
        vecs = coeffs.conj() @ self.basis.onb if coeffs.size else np.zeros((0, N * N))
        return SubspaceBasis(N, orthonormal_rows(vecs, cfg=self.cfg))

    @property
    def block_data(self) -> list[tuple[int, int, np.ndarray]]:
        """[(d_i, m_i, p_i)] with p_i the minimal central projections.

        Derived by eigenvalue clustering (tolerance 1e-7) of a generic
        self-adjoint central element; output sorted by block dim descending
        then multiplicity ascending for determinism.
        """
        if self._block_data is None:
            self._block_data = self._compute_block_data()
        return self._block_data

    def _compute_block_data(self) -> list[tuple[int, int, np.ndarray]]:
        zmats = self.center_basis.matrices()
        if zmats.shape[0] == 0:
            raise AlgebraIntegrityError("empty center")
        nblk = zmats.shape[0]
        for salt in (101, 9173):
            rng = self.cfg.rng(salt=salt)
            z = np.tensordot(rng.standard_normal(nblk), zmats, axes=(0, 0))
            z = z + dagger(z)
            evals, evecs = np.linalg.eigh(z)
            clusters = _cluster(evals, 1e-7 * max(1.0, float(abs(evals[-1]))))
            if len(clusters) == nblk:
                break
        if len(clusters) != nblk:
            raise AlgebraIntegrityError("could not separate central spectrum")
        out = []
        mats = self.matrices()
        for cl in clusters:
            v = evecs[:, cl]
            p = v @ v.conj().T
            if not self.contains_matrix(p, 1e-6):
                raise AlgebraIntegrityError("central projection escaped the algebra")
            red = np.einsum("ij,ajk->aik", p, mats, optimize=True)
            dsq = int(np.linalg.matrix_rank(red.reshape(self.dim, -1), tol=1e-7))
            d = int(np.round(np.sqrt(dsq)))
            if d * d != dsq:
                raise AlgebraIntegrityError(f"block dimension {dsq} is not a square")
            rank = int(np.round(np.real(np.trace(p))))
            if rank % d != 0:
                raise AlgebraIntegrityError("block rank not divisible by block dim")
            out.append((d, rank // d, p))
        out.sort(key=lambda t: (-t[0], t[1]))
        return out

    @property
    def blocks(self) -> list[tuple[int, int]]:
        return [(d, m) for d, m, _ in self.block_data]


def block_structure(a: FdAlgebra) -> list[tuple[int, int]]:
    """Abstract multi-matrix decomposition (+) M_{d_i} with multiplicities."""
    blocks = a.blocks
    if sum(d * d for d, _ in blocks) != a.dim:
        raise AlgebraIntegrityError("sum d_i^2 != dim, basis not an algebra")
    return blocks


def matrix_units(alg: FdAlgebra, block_index: int, salt: int = 23) -> np.ndarray:
    """Matrix units f_pq (p,q < d) of one M_d block of alg, each of ambient
    rank m; f_00 is a minimal projection of the block."""
    d, m, p = alg.block_data[block_index]
    rng = alg.cfg.rng(salt=salt + 57 * block_index)
    mats = alg.matrices()
    c = rng.standard_normal(mats.shape[0])
    x = np.tensordot(c, mats, axes=(0, 0))
    x = p @ (x + dagger(x)) @ p
    evals, evecs = np.linalg.eigh(x)
    sel = np.argsort(np.abs(evals))[::-1][: d * m]
    sel = sel[np.argsort(evals[sel])]
    groups = [sel[i * m:(i + 1) * m] for i in range(d)]
    projs = [evecs[:, g] @ dagger(evecs[:, g]) for g in groups]
    c2 = rng.standard_normal(mats.shape[0])
    y = np.tensordot(c2, mats, axes=(0, 0))
    vs = [projs[0]]
    for q in range(1, d):
        z = projs[q] @ y @ projs[0]
        uu, ss, vvh = np.linalg.svd(z)
        if ss[m - 1] < 1e-10:
            raise AlgebraIntegrityError("degenerate partial isometry in unit build")
        vs.append(uu[:, :m] @ vvh[:m])
    units = np.zeros((d, d, alg.ambient, alg.ambient), dtype=complex)
    for pi in range(d):
        for qi in range(d):
            units[pi, qi] = vs[pi] @ dagger(vs[qi])
    return units


def inclusion_matrix(n_alg: FdAlgebra, m_alg: FdAlgebra) -> np.ndarray:
    """Bratteli multiplicities: entry (i, j) counts the copies of N-block i
    inside M-block j.  Entries must land within 0.01 of integers."""
    out = np.zeros((len(n_alg.block_data), len(m_alg.block_data)), dtype=int)
    for i in range(len(n_alg.block_data)):
        f = matrix_units(n_alg, i)[0, 0]
        for j, (_, m_j, p_j) in enumerate(m_alg.block_data):
            val = float(np.real(np.trace(f @ p_j))) / m_j
            if abs(val - round(val)) > 0.01:
                raise AlgebraIntegrityError(
                    f"inclusion multiplicity {val} is not an integer")
            out[i, j] = int(round(val))
    return out


def canonical_onb(alg: FdAlgebra, tr: TraceVector) -> np.ndarray:
    """tr-orthonormal basis of alg built from block matrix units.

    Unlike ``TraceVector.gram_onb`` (whose output is only fixed up to a
    rotation inside degenerate Gram eigenspaces) this basis is a stable
    function of the algebra and the trace weights, so independently
    constructed callers agree on it.
    """
    out = []
    for i, (d, m, p) in enumerate(alg.block_data):
        w = float(np.real(np.trace(tr.density @ p))) / d
        if w <= 0:
            raise MarkovFailure("trace not faithful on a block", w)
        units = matrix_units(alg, i)
        for pi in range(d):
            for qi in range(d):
                out.append(units[pi, qi] / np.sqrt(w))
    return np.stack(out)


def commutant_in(host: FdAlgebra, constraints: Sequence[np.ndarray],
                 cfg: Config = DEFAULT) -> FdAlgebra:
    """{y in host : [y, c] = 0 for all constraints}, as an FdAlgebra.

    The host must contain the identity and be *-closed; the constraint set
    must be *-closed as a span for the result to be an algebra.
    """
    mats = host.matrices()
    d, N = host.dim, host.ambient
    normal = np.zeros((d, d), dtype=complex)
    for c in constraints:
        comm = (np.einsum("aij,jk->aik", mats, c, optimize=True)
                - np.einsum("ij,ajk->aik", c, mats, optimize=True))
        rows = comm.reshape(d, N * N)
        normal += rows @ rows.conj().T
    evals, evecs = np.linalg.eigh((normal + dagger(normal)) / 2)
    scale = max(1.0, float(max(np.linalg.norm(np.asarray(c)) for c in constraints)))
    cutoff = max(float(evals[-1]) * cfg.rank_rtol ** 2, (1e-8 * N * scale) ** 2)
    coeffs = evecs[:, evals < cutoff].T
    vecs = coeffs.conj() @ host.basis.onb if coeffs.size else np.zeros((0, N * N))
    return FdAlgebra(SubspaceBasis(N, orthonormal_rows(vecs, cfg=cfg)),
                     check=False, cfg=cfg)


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class TraceVector:
    """Faithful normalized trace on an FdAlgebra, one weight per block.

    weights[i] is the trace of a minimal projection of block i (block order
    as in ``algebra.block_data``); density realizes the functional on the
    ambient: tr(x) = Tr(density @ x).
    """

    algebra: FdAlgebra
    weights: tuple[float, ...]
    density: np.ndarray

    def __call__(self, x: np.ndarray) -> complex:
        return complex(np.trace(self.density @ x))

    def is_faithful(self, tol: float = 1e-12) -> bool:
        return all(w > tol for w in self.weights)

    def normalization_defect(self) -> float:
        return abs(sum(d * w for (d, _), w in zip(self.algebra.blocks, self.weights)) - 1.0)

    def gram_onb(self, sub: FdAlgebra | None = None) -> np.ndarray:
        """Matrices of a basis of ``sub`` orthonormal under <x,y> = tr(x*y)."""
        alg = sub if sub is not None else self.algebra
        mats = alg.matrices()
        g = np.einsum("ij,akj,bki->ab", self.density, mats.conj(), mats, optimize=True)
        evals, evecs = np.linalg.eigh((g + g.conj().T) / 2)
        if np.min(evals) < 1e-12:
            raise MarkovFailure("trace not faithful on subalgebra", float(np.min(evals)))
        t = evecs @ np.diag(evals ** -0.5)
        return np.einsum("ab,aij->bij", t, mats, optimize=True)

    def restrict(self, sub: FdAlgebra) -> "TraceVector":
        """Restriction to a subalgebra, re-expressed per sub-block."""
        weights = []
        dens = np.zeros_like(self.density)
        for d, m, p in sub.block_data:
            w = float(np.real(np.trace(self.density @ p))) / d
            weights.append(w)
            dens += (w / m) * p
        return TraceVector(sub, tuple(weights), dens)


def trace_from_weights(alg: FdAlgebra, weights: Sequence[float]) -> TraceVector:
    dens = np.zeros((alg.ambient, alg.ambient), dtype=complex)
    for (d, m, p), w in zip(alg.block_data, weights):
        dens += (w / m) * p
    return TraceVector(alg, tuple(float(w) for w in weights), dens)


def canonical_trace(b: FdAlgebra) -> TraceVector:
    """The trace restricting the normalized trace of the left regular
    representation: weight_i = d_i / sum_j d_j^2."""
    blocks = b.blocks
    s = sum(d * d for d, _ in blocks)
    return trace_from_weights(b, [d / s for d, _ in blocks])


def matrix_trace(n: int, cfg: Config = DEFAULT) -> TraceVector:
    """Normalized matrix trace as a TraceVector on the full algebra M_n."""
    full = FdAlgebra.full(n, cfg)
    full._block_data = [(n, 1, np.eye(n, dtype=complex))]
    return TraceVector(full, (1.0 / n,), np.eye(n, dtype=complex) / n)


def conditional_expectation(x: np.ndarray, onto: FdAlgebra, tr: TraceVector) -> np.ndarray:
    """Trace-orthogonal projection onto the subalgebra.

    tr must be a faithful trace on an algebra containing ``onto``; the
    result is the unique E with tr(E(x) y) = tr(x y) for y in the target.
    """
    onb = tr.gram_onb(onto)
    coeff = np.einsum("ij,akj,ki->a", tr.density, onb.conj(), x, optimize=True)
    return np.tensordot(coeff, onb, axes=(0, 0))


class ExpectationOperator:
    """Cached E as a linear map on vec(M_N) for repeated use."""

    def __init__(self, onto: FdAlgebra, tr: TraceVector):
        self.onto = onto
        onb = tr.gram_onb(onto)
        N = onto.ambient
        # tr(onb_a^* x) = sum_{k,i} F_a[k,i] x[k,i]
        bras = np.einsum("ij,akj->aki", tr.density, onb.conj(), optimize=True)
        self.mat = np.einsum("aq,ap->qp", onb.reshape(-1, N * N),
                             bras.reshape(-1, N * N), optimize=True)
        self.N = N

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return (self.mat @ x.reshape(-1)).reshape(self.N, self.N)


# ---------------------------------------------------------------------------
# GNS + basic construction


class GnsMap:
    """Left regular representation of (M, tr) on the GNS space C^{dim M}."""

    def __init__(self, m_alg: FdAlgebra, tr: TraceVector):
        self.alg = m_alg
        self.tr = tr
        self.onb = tr.gram_onb(m_alg)          # (D, N, N), tr-orthonormal
        self.dim = self.onb.shape[0]
        prod = np.einsum("aij,sjk->asik", self.onb, self.onb, optimize=True)
        # lambda(b_a)[r, s] = tr(b_r^* b_a b_s)
        self.lam_onb = np.einsum("ij,rkj,aski->ars", tr.density,
                                 self.onb.conj(), prod, optimize=True)

    def coeffs(self, x: np.ndarray) -> np.ndarray:
        """Coefficients of x in the tr-orthonormal basis (x must lie in M)."""
        return np.einsum("ij,akj,ki->a", self.tr.density,
                         self.onb.conj(), x, optimize=True)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """lambda(x) for x in M."""
        return np.tensordot(self.coeffs(x), self.lam_onb, axes=(0, 0))

    def rho(self, x: np.ndarray) -> np.ndarray:
        """Right multiplication rho(x)[r,s] = tr(b_r^* b_s x)."""
        prod = np.einsum("sij,jk->sik", self.onb, x, optimize=True)
        return np.einsum("ij,rkj,ski->rs", self.tr.density,
                         self.onb.conj(), prod, optimize=True)

    def vector(self, x: np.ndarray) -> np.ndarray:
        """The GNS vector of x in C^D coordinates."""
        return self.coeffs(x)


@dataclass
class ConditionReport:
    """Residuals of the four basic-construction conditions."""

    span_residual: float         # (1) P = sp{M e M} closure sanity
    commutation_residual: float  # (2) [e, N] = 0
    expectation_residual: float  # (3) e x e = E_N(x) e
    markov_residual: float       # (4) tr(x e) = lambda tr(x)
    lam: float

    def max_residual(self) -> float:
        return max(self.span_residual, self.commutation_residual,
                   self.expectation_residual, self.markov_residual)


@dataclass
class BasicConstructionResult:
    extended: FdAlgebra          # P = <M, e> on the GNS space
    jones_projection: np.ndarray
    lam: float
    trace: TraceVector           # Markov extension trace on P
    gns: GnsMap
    m_image: FdAlgebra           # lambda(M) inside the new ambient
    conditions: ConditionReport


def _p_block_data(n_alg: FdAlgebra, gns: GnsMap,
                  cfg: Config) -> list[tuple[int, int, np.ndarray]]:
    """Block data of P = <M, e_N>: central projections are the right
    multiplications by the minimal central projections of N, the block of
    P over N-block i is M_{t_i} with t_i = rank(q_i) / n_i and ambient
    multiplicity n_i."""
    out = []
    for (n_i, _, p) in n_alg.block_data:
        q = gns.rho(p)
        q = (q + dagger(q)) / 2
        rank = int(np.round(np.real(np.trace(q))))
        if rank % n_i != 0:
            raise AlgebraIntegrityError("inconsistent extension block rank")
        out.append((rank // n_i, n_i, q))
    out.sort(key=lambda tpl: (-tpl[0], tpl[1]))
    return out


def _solve_extension_trace(p_alg: FdAlgebra, gns: GnsMap, e: np.ndarray,
                           tr_m: TraceVector) -> tuple[TraceVector, float, float]:
    """Solve block weights of a trace T on P with T|M = tr and T(xe) = lam tr(x)."""
    lam_m = gns.lam_onb
    bd = p_alg.block_data
    nblk = len(bd)
    trm_vals = np.array([tr_m(x) for x in gns.onb])
    feats = np.stack([np.einsum("ij,aji->a", q, lam_m, optimize=True) / m
                      for (_, m, q) in bd], axis=1)
    lam_e = np.einsum("aij,jk->aik", lam_m, e, optimize=True)
    feats_e = np.stack([np.einsum("ij,aji->a", q, lam_e, optimize=True) / m
                        for (_, m, q) in bd], axis=1)
    a_top = np.concatenate([feats, np.zeros((feats.shape[0], 1))], axis=1)
    a_bot = np.concatenate([feats_e, -trm_vals[:, None]], axis=1)
    a = np.concatenate([a_top, a_bot], axis=0)
    b = np.concatenate([trm_vals, np.zeros_like(trm_vals)])
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    resid = float(np.linalg.norm(a @ sol - b))
    weights = np.real(sol[:nblk])
    lam = float(np.real(sol[nblk]))
    tv = trace_from_weights(p_alg, list(weights))
    return tv, lam, resid


def _span_meM(lam_mats: np.ndarray, e: np.ndarray, expected_dim: int,
              cfg: Config) -> SubspaceBasis:
    """Span of lambda(M) e lambda(M) on the GNS space.

    Built from random x e y combinations (the span is reached with
    probability one); the rank is checked against the Bratteli prediction
    and topped up with structured products if a draw happens to be thin.
    """
    D = lam_mats.shape[1]
    dimM = lam_mats.shape[0]
    rng = cfg.rng(salt=313)
    n_cand = expected_dim + max(8, expected_dim // 8)
    cx = rng.standard_normal((n_cand, dimM)) + 1j * rng.standard_normal((n_cand, dimM))
    cy = rng.standard_normal((n_cand, dimM)) + 1j * rng.standard_normal((n_cand, dimM))
    xs = np.tensordot(cx, lam_mats, axes=(1, 0))
    ys = np.tensordot(cy, lam_mats, axes=(1, 0))
    cand = np.einsum("aij,jk,akl->ail", xs, e, ys, optimize=True).reshape(-1, D * D)
    basis = orthonormal_rows(cand / np.sqrt(D), cfg=cfg)
    if basis.shape[0] != expected_dim:
        # top up with exhaustive pair products (small cases / bad luck)
        left = np.einsum("aij,jk->aik", lam_mats, e, optimize=True)
        prods = np.einsum("aij,bjk->abik", left, lam_mats,
                          optimize=True).reshape(-1, D * D)
        basis = orthonormal_rows(
            np.concatenate([basis, prods / np.sqrt(D)]), cfg=cfg)
    return SubspaceBasis(D, basis)


def basic_construction(n_alg: FdAlgebra, m_alg: FdAlgebra, tr: TraceVector,
                       cfg: Config = DEFAULT,
                       require_markov: bool = True) -> BasicConstructionResult:
    """Jones basic construction of n_alg <= m_alg on the GNS space of (M, tr).

    Raises MarkovFailure when no trace on P extends tr with the Markov
    property (the defect is carried on the exception).
    """
    if not m_alg.contains_algebra(n_alg, 1e-8):
        raise ValueError("N is not contained in M")
    gns = GnsMap(m_alg, tr)
    D = gns.dim
    if D > cfg.ambient_budget:
        raise MarkovFailure(f"GNS dimension {D} exceeds budget {cfg.ambient_budget}", 0.0)
    nvecs = np.stack([gns.vector(x) for x in n_alg.matrices()])
    nonb = orthonormal_rows(nvecs, cfg=cfg)
    e = nonb.T @ nonb.conj()
    lam_mats = gns.lam_onb
    p_blocks = _p_block_data(n_alg, gns, cfg)
    expected_dim = sum(t * t for t, _, _ in p_blocks)
    p_basis = _span_meM(lam_mats, e, expected_dim, cfg)
    if p_basis.dim != expected_dim:
        raise AlgebraIntegrityError(
            f"span of MeM has dim {p_basis.dim}, Bratteli predicts {expected_dim}")
    p_alg = FdAlgebra(p_basis, check=False, cfg=cfg, block_data=p_blocks)
    trace_p, lam, tr_resid = _solve_extension_trace(p_alg, gns, e, tr)
    if require_markov and (tr_resid > 1e-7 or not trace_p.is_faithful() or lam <= 0):
        raise MarkovFailure("trace is not Markov for the inclusion", tr_resid)

    m_blocks = [(d, int(np.round(np.real(np.trace(gns.apply(p))))) // d, gns.apply(p))
                for d, _, p in m_alg.block_data]
    m_image = FdAlgebra(SubspaceBasis.from_matrices(lam_mats, D, cfg),
                        check=False, cfg=cfg, block_data=m_blocks)
    exp_n = ExpectationOperator(n_alg, tr)
    cond = _verify_conditions(n_alg, m_alg, gns, e, p_alg, trace_p, lam, exp_n, tr)
    return BasicConstructionResult(p_alg, e, lam, trace_p, gns, m_image, cond)


def _verify_conditions(n_alg, m_alg, gns: GnsMap, e, p_alg: FdAlgebra,
                       trace_p: TraceVector, lam: float,
                       exp_n: ExpectationOperator, tr_m: TraceVector) -> ConditionReport:
    mats = p_alg.matrices()
    rng = np.random.default_rng(11)
    worst1 = 0.0
    for _ in range(20):
        i, j = rng.integers(0, mats.shape[0], 2)
        worst1 = max(worst1, p_alg.basis.residual(mats[i] @ mats[j]),
                     p_alg.basis.residual(dagger(mats[i])))
    worst2 = 0.0
    for x in n_alg.matrices():
        ln = gns.apply(x)
        worst2 = max(worst2, float(np.linalg.norm(e @ ln - ln @ e, 2)))
    worst3 = 0.0
    for x in m_alg.matrices():
        lx = gns.apply(x)
        lex = gns.apply(exp_n(x))
        worst3 = max(worst3, float(np.linalg.norm(e @ lx @ e - lex @ e, 2)))
    worst4 = 0.0
    for x in m_alg.matrices():
        lx = gns.apply(x)
        worst4 = max(worst4, abs(complex(np.trace(trace_p.density @ (lx @ e)))
                                 - lam * tr_m(x)))
    return ConditionReport(worst1, worst2, worst3, worst4, lam)


@dataclass
class MarkovResult:
    ok: bool
    lam: float | None
    residual: float


def is_markov(n_alg: FdAlgebra, m_alg: FdAlgebra, tr: TraceVector,
              cfg: Config = DEFAULT) -> MarkovResult:
    """Succeeds iff tr extends through the basic construction with
    tr(xe) = lam tr(x); verified by constructing the extension."""
    try:
        res = basic_construction(n_alg, m_alg, tr, cfg)
    except MarkovFailure as exc:
        return MarkovResult(False, None, exc.residual)
    return MarkovResult(True, res.lam, res.conditions.markov_residual)
