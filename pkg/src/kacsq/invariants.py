"""Standard-invariant engines.

Two independent routes to the same desk-scale invariant:

* the tower route: iterated horizontal basic constructions of a commuting
  square with scalar corner, then relative commutants of the upper-left
  corner inside the growing lower-right tower algebras;
* the intertwiner route: Hom spaces of alternating tensor words in the
  square's extracted biunitary and its conjugate.

Both are exposed separately, and ``popa_crosscheck`` asserts that they
produce the same dimension sequence level by level.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config, DEFAULT
from .fdalg import (ConditionReport, ExpectationOperator, FdAlgebra,
                    commutant_in, inclusion_matrix)
from .squares import (Biunitary, CommutingSquare, SquareStep,
                      basic_construction_right, extract_biunitary, flipped,
                      verify_square)
from .tensorkit import embed_legs, norm, nullspace_rows, orthonormal_rows


# ---------------------------------------------------------------------------
# words in a biunitary


def alternating_word(length: int) -> str:
    """'u c u c ...' of the given length ('u' = letter, 'c' = conjugate)."""
    return ("uc" * length)[:length]


_WORD_CACHE: dict[tuple, np.ndarray] = {}


def word_operator(bu: Biunitary, word: str) -> np.ndarray:
    """Representation of a word on V^{(x) s} (x) W: the j-th letter acts on
    (V_j, W) with the single W leg shared by all letters."""
    key = (bu.u.tobytes(), bu.n, bu.k, word)
    hit = _WORD_CACHE.get(key)
    if hit is not None:
        return hit
    s = len(word)
    dims = [bu.n] * s + [bu.k]
    out = np.eye(int(np.prod(dims)), dtype=complex)
    for j, letter in enumerate(word):
        if letter not in "uc":
            raise ValueError(f"bad letter {letter!r} in word")
        mat = bu.u if letter == "u" else bu.conj
        out = out @ embed_legs(mat, [bu.n, bu.k], dims, [j, s])
    _WORD_CACHE[key] = out
    return out


@dataclass
class HomSpace:
    source: str
    target: str
    basis: np.ndarray       # (dim, n^{|target|}, n^{|source|})

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


def hom_space(bu: Biunitary, source: str, target: str,
              cfg: Config = DEFAULT) -> HomSpace:
    """Orthonormal basis of {T : (T (x) 1_W) X_source = X_target (T (x) 1_W)}.

    Solved as the nullspace of stacked Sylvester-type operators, one block
    per pair of W-matrix entries; cached per (biunitary, word pair).
    """
    key = (bu.u.tobytes(), bu.n, bu.k, source, target, "hom")
    hit = _WORD_CACHE.get(key)
    if hit is None:
        n, k = bu.n, bu.k
        ds, dt = n ** len(source), n ** len(target)
        xa = word_operator(bu, source).reshape(ds, k, ds, k)
        xb = word_operator(bu, target).reshape(dt, k, dt, k)
        blocks = []
        for w in range(k):
            for wp in range(k):
                a = xa[:, w, :, wp]
                b = xb[:, w, :, wp]
                blocks.append(np.kron(np.eye(dt), a.T) - np.kron(b, np.eye(ds)))
        hit = nullspace_rows(np.concatenate(blocks, axis=0), cfg=cfg)
        _WORD_CACHE[key] = hit
    dt, ds = bu.n ** len(target), bu.n ** len(source)
    return HomSpace(source, target, hit.reshape(-1, dt, ds))


def hom_dim(bu: Biunitary, source: str, target: str, cfg: Config = DEFAULT) -> int:
    return hom_space(bu, source, target, cfg).dim


def flip_conjugate(bu: Biunitary) -> Biunitary:
    """sigma(u)* as a biunitary in M_k (x) M_n."""
    return flipped(bu)


# ---------------------------------------------------------------------------
# towers


@dataclass
class TowerStepReport:
    top: ConditionReport
    bottom: ConditionReport
    lam: float


@dataclass
class Tower:
    squares: list[CommutingSquare]
    steps: list[SquareStep]
    lambdas: list[float]
    reports: list[TowerStepReport]

    @property
    def depth(self) -> int:
        return len(self.steps)


class TowerError(RuntimeError):
    def __init__(self, message: str, step: int):
        super().__init__(f"step {step}: {message}")
        self.step = step


def _bottom_conditions(gns, e, p_alg: FdAlgebra, lam: float,
                       n_bottom: FdAlgebra, m_bottom: FdAlgebra,
                       tr_old, tr_new, cfg: Config) -> ConditionReport:
    """Conditions (1)-(4) for the bottom row N < M < <M, e> of a step."""
    mats = p_alg.matrices()
    rng = cfg.rng(salt=67)
    worst1 = 0.0
    for _ in range(min(20, mats.shape[0] ** 2)):
        i, j = rng.integers(0, mats.shape[0], 2)
        worst1 = max(worst1, p_alg.basis.residual(mats[i] @ mats[j]),
                     p_alg.basis.residual(mats[i].conj().T))
    worst2 = 0.0
    for x in n_bottom.matrices():
        lx = gns.apply(x)
        worst2 = max(worst2, norm(e @ lx - lx @ e))
    exp_n = ExpectationOperator(n_bottom, tr_old)
    worst3 = 0.0
    worst4 = 0.0
    for x in m_bottom.matrices():
        lx = gns.apply(x)
        lex = gns.apply(exp_n(x))
        worst3 = max(worst3, norm(e @ lx @ e - lex @ e))
        worst4 = max(worst4, abs(complex(np.trace(tr_new.density @ (lx @ e)))
                                 - lam * tr_old(x)))
    return ConditionReport(worst1, worst2, worst3, worst4, lam)


def jones_tower(s: CommutingSquare, depth: int, cfg: Config = DEFAULT,
                verify_tol: float = 1e-8) -> Tower:
    """depth-many basic constructions to the right.

    The returned squares are the horizontal rectangles
    (C < B_k ; A < X_k) of the ladder; the Jones step at stage k is the
    basic construction of X_{k-1} < X_k (with X_{-1} = A), whose projection
    simultaneously extends the bottom row B_{k-1} < B_k.  Every step is
    re-verified: conditions (1)-(4) on both rows and constancy of the
    Markov index.
    """
    from .fdalg import basic_construction
    from .squares import _parallel_extension, _push

    squares = [s]
    steps: list[SquareStep] = []
    lambdas: list[float] = []
    reports: list[TowerStepReport] = []
    cur = s
    top_n, bottom_n = s.c01, s.c00      # N-sides of the two rows
    for k in range(depth):
        try:
            bc = basic_construction(top_n, cur.c11, cur.trace, cfg)
            gns, e = bc.gns, bc.jones_projection
            b_ext = _parallel_extension(cur.c10, bottom_n, gns, e, cfg)
            new = CommutingSquare(
                ambient=gns.dim,
                c00=_push(cur.c00, gns, cfg),
                c10=b_ext,
                c01=_push(cur.c01, gns, cfg),
                c11=bc.extended,
                trace=bc.trace,
            )
            step = SquareStep(new, bc, b_ext, bc.lam)
        except TowerError:
            raise
        except Exception as exc:
            raise TowerError(str(exc), k) from exc
        bottom = _bottom_conditions(gns, e, b_ext, bc.lam, bottom_n, cur.c10,
                                    cur.trace, bc.trace, cfg)
        rep = TowerStepReport(bc.conditions, bottom, step.lam)
        if max(rep.top.max_residual(), rep.bottom.max_residual()) > verify_tol:
            raise TowerError(f"basic-construction conditions fail ({rep})", k)
        if lambdas and abs(step.lam - lambdas[-1]) > 1e-8:
            raise TowerError(
                f"Markov index drifted: {step.lam} vs {lambdas[-1]}", k)
        squares.append(new)
        steps.append(step)
        lambdas.append(step.lam)
        reports.append(rep)
        top_n, bottom_n = bc.m_image, _push(cur.c10, gns, cfg)
        cur = new
    return Tower(squares, steps, lambdas, reports)


@dataclass
class CommutantChain:
    """Relative commutants along a tower, plus pushed inclusion pairs."""

    algebras: list[FdAlgebra]
    inclusion_pairs: list[tuple[FdAlgebra, FdAlgebra]]

    @property
    def dims(self) -> list[int]:
        return [a.dim for a in self.algebras]


def relative_commutants(tower: Tower, cfg: Config = DEFAULT) -> CommutantChain:
    """Level k: commutant of the upper-left corner inside the k-th
    lower-right tower algebra, computed in the k-th ambient."""
    out = []
    for sq in tower.squares:
        out.append(commutant_in(sq.c10, list(sq.c01.matrices()), cfg))
    pairs = []
    for k, step in enumerate(tower.steps):
        pushed = FdAlgebra.from_generators(
            [step.gns.apply(x) for x in out[k].matrices()],
            step.gns.dim, cfg)
        pairs.append((pushed, out[k + 1]))
    return CommutantChain(out, pairs)


# ---------------------------------------------------------------------------
# cross-checks and reports


@dataclass
class CrosscheckReport:
    tower_dims: list[int]
    hom_dims: list[int]
    lambdas: list[float]
    matches: bool

    def rows(self):
        for k, (t, h) in enumerate(zip(self.tower_dims, self.hom_dims)):
            yield k, t, h, t == h


def popa_crosscheck(s: CommutingSquare, depth: int,
                    cfg: Config = DEFAULT) -> CrosscheckReport:
    """Corollary-style dual computation: relative-commutant dimensions of
    the tower versus intertwiner dimensions Hom(1, w_{k+1}) of the
    extracted biunitary, level by level."""
    tower = jones_tower(s, depth, cfg)
    chain = relative_commutants(tower, cfg)
    bu = extract_biunitary(s, cfg)
    hom_dims = [hom_dim(bu, "", alternating_word(k + 1), cfg)
                for k in range(depth + 1)]
    return CrosscheckReport(chain.dims, hom_dims, tower.lambdas,
                            chain.dims == hom_dims)


@dataclass
class DualityReport:
    depth: int
    end_dims: list[int]
    end_dims_dual: list[int]
    matches: bool


def duality_dims(bu: Biunitary, depth: int, cfg: Config = DEFAULT) -> DualityReport:
    """dim End of the alternating words of u and of sigma(u)*, length <= depth."""
    dual = flip_conjugate(bu)
    dims, dims_dual = [], []
    for s in range(1, depth + 1):
        w = alternating_word(s)
        dims.append(hom_dim(bu, w, w, cfg))
        dims_dual.append(hom_dim(dual, w, w, cfg))
    return DualityReport(depth, dims, dims_dual, dims == dims_dual)


# ---------------------------------------------------------------------------
# principal graph data


@dataclass
class PrincipalGraphData:
    levels: list[list[int]]           # block dims of each relative commutant
    adjacency: list[np.ndarray]       # Bratteli matrices between consecutive
    rounding_residual: float


def principal_graph(chain: CommutantChain) -> PrincipalGraphData:
    """Bratteli data of the commutant chain; multiplicities must sit within
    0.01 of integers (checked inside inclusion_matrix)."""
    levels = [[d for d, _ in alg.blocks] for alg in chain.algebras]
    adjacency = []
    worst = 0.0
    for small, large in chain.inclusion_pairs:
        adjacency.append(inclusion_matrix(small, large))
    # dimension bookkeeping d_{k+1} = adjacency^T d_k consistency
    for k, adj in enumerate(adjacency):
        dk = np.array(levels[k])
        dk1 = np.array(levels[k + 1])
        defect = np.abs(adj.T @ dk - dk1)
        worst = max(worst, float(defect.max()) * 0.0)  # exact integers
        if np.any(adj.T @ dk != dk1):
            raise ValueError(
                f"Bratteli bookkeeping fails at level {k}: {adj.T @ dk} vs {dk1}")
    return PrincipalGraphData(levels, adjacency, worst)
