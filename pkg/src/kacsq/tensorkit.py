"""Dense complex matrix/tensor kernel.

Everything downstream works with plain ``numpy`` complex arrays.  A "matrix"
is a 2-d array; subspaces of the N x N matrices are stored through
:class:`SubspaceBasis`, orthonormal under the normalized trace pairing

    <x, y> = tr(x* y) / N

so the identity always has norm one regardless of the ambient size.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import Config, DEFAULT


# ---------------------------------------------------------------------------
# basic matrix helpers


def dagger(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def norm(x: np.ndarray) -> float:
    """Spectral norm for 2-d input, Euclidean norm otherwise."""
    if x.ndim == 2:
        return float(np.linalg.norm(x, 2))
    return float(np.linalg.norm(x))


def svec(x: np.ndarray, ambient: int) -> np.ndarray:
    """Row-major vectorization scaled so standard dot = tr(x* y)/N."""
    return x.reshape(-1) / np.sqrt(ambient)

def smat(v: np.ndarray, ambient: int) -> np.ndarray:
    return (v * np.sqrt(ambient)).reshape(ambient, ambient)


def check_finite(x: np.ndarray) -> None:
    if not (np.all(np.isfinite(x.real)) and np.all(np.isfinite(x.imag))):
        raise ValueError("matrix entries must be finite")


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


# ---------------------------------------------------------------------------
# leg bookkeeping


def partial_transpose(u: np.ndarray, n: int, k: int) -> np.ndarray:
    """Transpose the first tensor factor of an operator on C^n (x) C^k."""
    if u.shape != (n * k, n * k):
        raise ValueError(f"shape {u.shape} does not factor as ({n}*{k})^2")
    t = u.reshape(n, k, n, k)
    return t.transpose(2, 1, 0, 3).reshape(n * k, n * k)


def flip_sigma(u: np.ndarray, n: int, k: int) -> np.ndarray:
    """Swap the tensor factors: a (x) b -> b (x) a."""
    if u.shape != (n * k, n * k):
        raise ValueError(f"shape {u.shape} does not factor as ({n}*{k})^2")
    t = u.reshape(n, k, n, k)
    return t.transpose(1, 0, 3, 2).reshape(n * k, n * k)


def embed_legs(op: np.ndarray, op_dims: Sequence[int], dims: Sequence[int],
               positions: Sequence[int]) -> np.ndarray:
    """Place ``op`` (acting on the factors ``op_dims``) at ``positions`` of
    the tensor product with factor sizes ``dims``; identity elsewhere.

    ``positions[i]`` is the leg of the big product carrying the i-th factor
    of ``op``.
    """
    L = len(dims)
    if sorted(set(positions)) != sorted(positions):
        raise ValueError("positions must be distinct")
    for p, d in zip(positions, op_dims):
        if dims[p] != d:
            raise ValueError(f"leg {p} has dim {dims[p]}, operator factor {d}")
    total = int(np.prod(dims))
    rest = [j for j in range(L) if j not in positions]
    rest_dim = int(np.prod([dims[j] for j in rest])) if rest else 1
    big = np.kron(op.reshape(int(np.prod(op_dims)), -1), np.eye(rest_dim, dtype=complex))
    # current leg order: positions..., rest...; permute back to 0..L-1
    order = list(positions) + rest
    tens = big.reshape([dims[j] for j in order] * 2)
    inv = np.argsort(order)
    perm = list(inv) + [L + j for j in inv]
    return tens.transpose(perm).reshape(total, total)


@dataclass(frozen=True)
class LeggedTensor:
    """Complex tensor with named legs, row-major entry layout."""

    legs: tuple[tuple[int, str], ...]
    data: np.ndarray

    def __post_init__(self):
        dims = tuple(d for d, _ in self.legs)
        if self.data.shape != dims:
            object.__setattr__(self, "data", self.data.reshape(dims))
        check_finite(self.data)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for _, lab in self.legs)

    def permute(self, new_labels: Sequence[str]) -> "LeggedTensor":
        if sorted(new_labels) != sorted(self.labels):
            raise ValueError("permutation must use the same labels")
        idx = [self.labels.index(lab) for lab in new_labels]
        return LeggedTensor(tuple(self.legs[i] for i in idx), self.data.transpose(idx))

    def as_matrix(self, row_labels: Sequence[str]) -> np.ndarray:
        cols = [lab for lab in self.labels if lab not in row_labels]
        t = self.permute(list(row_labels) + cols)
        r = int(np.prod([d for d, lab in t.legs if lab in row_labels])) if row_labels else 1
        return t.data.reshape(r, -1)


# ---------------------------------------------------------------------------
# rank / span machinery


def numeric_rank(m: np.ndarray, rtol: float | None = None, cfg: Config = DEFAULT) -> int:
    """Number of singular values above rtol * s_max."""
    if rtol is None:
        rtol = cfg.rank_rtol
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def orthonormal_rows(rows: np.ndarray, rtol: float | None = None,
                     cfg: Config = DEFAULT) -> np.ndarray:
    """Orthonormal basis (as rows) of the row span, via SVD."""
    if rtol is None:
        rtol = cfg.rank_rtol
    if rows.size == 0:
        return rows.reshape(0, rows.shape[-1] if rows.ndim == 2 else 0)
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return vh[:0]
    return vh[s > rtol * s[0]]


def nullspace_rows(m: np.ndarray, rtol: float | None = None,
                   cfg: Config = DEFAULT) -> np.ndarray:
    """Orthonormal rows v with m @ v = 0 (each row is a null vector)."""
    if rtol is None:
        rtol = cfg.rank_rtol
    if m.shape[0] == 0:
        return np.eye(m.shape[1], dtype=complex)
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return vh.conj()
    r = int(np.sum(s > rtol * s[0]))
    return vh[r:].conj()


class SubspaceBasis:
    """Orthonormal basis of a subspace of M_N under <x,y> = tr(x*y)/N."""

    def __init__(self, ambient: int, onb: np.ndarray):
        self.ambient = int(ambient)
        onb = np.asarray(onb, dtype=complex).reshape(-1, ambient * ambient)
        onb.setflags(write=False)
        self.onb = onb

    @classmethod
    def from_matrices(cls, mats: Iterable[np.ndarray], ambient: int,
                      cfg: Config = DEFAULT) -> "SubspaceBasis":
        rows = np.array([svec(np.asarray(m, dtype=complex), ambient) for m in mats])
        return cls(ambient, orthonormal_rows(rows, cfg=cfg))

    @property
    def dim(self) -> int:
        return self.onb.shape[0]

    def matrices(self) -> np.ndarray:
        """(dim, N, N) array of basis matrices."""
        N = self.ambient
        return (self.onb * np.sqrt(N)).reshape(-1, N, N)

    def coeffs(self, x: np.ndarray) -> np.ndarray:
        return self.onb.conj() @ svec(x, self.ambient)

    def project(self, x: np.ndarray) -> np.ndarray:
        return smat(self.onb.T @ self.coeffs(x), self.ambient)

    def residual(self, x: np.ndarray) -> float:
        """Distance of x to the span, in the normalized trace norm."""
        v = svec(x, self.ambient)
        return float(np.linalg.norm(v - self.onb.T @ (self.onb.conj() @ v)))

    def contains_matrix(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        scale = max(1.0, float(np.linalg.norm(svec(x, self.ambient))))
        return self.residual(x) <= tol * scale

    def contains(self, other: "SubspaceBasis", tol: float = 1e-9) -> bool:
        return self.containment_residual(other) <= tol

    def containment_residual(self, other: "SubspaceBasis") -> float:
        """max residual of other's basis vectors against this span."""
        if other.dim == 0:
            return 0.0
        proj = other.onb - (other.onb @ self.onb.conj().T) @ self.onb
        return float(np.max(np.linalg.norm(proj, axis=1)))

    def equals(self, other: "SubspaceBasis", tol: float = 1e-9) -> bool:
        return (self.dim == other.dim and self.contains(other, tol)
                and other.contains(self, tol))


def _pair_products(a: np.ndarray, b: np.ndarray, chunk: int = 256) -> np.ndarray:
    """All products a_i @ b_j, returned as (len(a)*len(b), N, N)."""
    out = []
    for i in range(0, a.shape[0], chunk):
        blk = np.einsum("aij,bjk->abik", a[i:i + chunk], b, optimize=True)
        out.append(blk.reshape(-1, a.shape[1], a.shape[2]))
    return np.concatenate(out, axis=0) if out else np.zeros((0,) + a.shape[1:], dtype=complex)


def algebra_closure(generators: Sequence[np.ndarray], ambient: int,
                    cfg: Config = DEFAULT) -> SubspaceBasis:
    """Smallest unital *-closed, product-closed span containing the generators.

    Alternates (multiply all pairs, adjoin adjoints, re-orthonormalize) until
    the dimension stabilizes; capped at ambient^2 steps so it always stops.
    """
    N = ambient
    seed = [np.eye(N, dtype=complex)]
    for g in generators:
        g = np.asarray(g, dtype=complex)
        if g.shape != (N, N):
            raise ValueError(f"generator shape {g.shape} != ({N},{N})")
        check_finite(g)
        seed.append(g)
        seed.append(dagger(g))
    basis = SubspaceBasis.from_matrices(seed, N, cfg)
    for _ in range(N * N):
        mats = basis.matrices()
        prods = _pair_products(mats, mats)
        rows = np.concatenate([basis.onb, prods.reshape(-1, N * N) / np.sqrt(N)])
        new = SubspaceBasis(N, orthonormal_rows(rows, cfg=cfg))
        if new.dim == basis.dim:
            return new
        basis = new
    return basis


@dataclass
class SubspaceRelation:
    """Containment/equality report plus intersection and product span."""

    x_in_y_residual: float
    y_in_x_residual: float
    equal: bool
    x_contained: bool
    y_contained: bool
    intersection: SubspaceBasis
    product_span: SubspaceBasis


def intersect_spans(x: SubspaceBasis, y: SubspaceBasis,
                    cfg: Config = DEFAULT) -> SubspaceBasis:
    """Intersection via principal vectors (singular values ~ 1 of X Y*)."""
    if x.dim == 0 or y.dim == 0:
        return SubspaceBasis(x.ambient, np.zeros((0, x.ambient ** 2)))
    m = x.onb @ y.onb.conj().T
    u, s, vh = np.linalg.svd(m)
    keep = s > 1.0 - 1e-9
    vec = (u[:, keep].conj().T @ x.onb)
    return SubspaceBasis(x.ambient, orthonormal_rows(vec, cfg=cfg))


def product_span(x: SubspaceBasis, y: SubspaceBasis,
                 cfg: Config = DEFAULT) -> SubspaceBasis:
    prods = _pair_products(x.matrices(), y.matrices())
    N = x.ambient
    return SubspaceBasis(N, orthonormal_rows(prods.reshape(-1, N * N) / np.sqrt(N), cfg=cfg))


def subspace_relate(x: SubspaceBasis, y: SubspaceBasis,
                    tol: float | None = None, cfg: Config = DEFAULT) -> SubspaceRelation:
    if x.ambient != y.ambient:
        raise ValueError("ambient mismatch")
    if tol is None:
        tol = cfg.residual_tol
    rx = y.containment_residual(x)
    ry = x.containment_residual(y)
    return SubspaceRelation(
        x_in_y_residual=rx,
        y_in_x_residual=ry,
        equal=(rx <= tol and ry <= tol and x.dim == y.dim),
        x_contained=rx <= tol,
        y_contained=ry <= tol,
        intersection=intersect_spans(x, y, cfg),
        product_span=product_span(x, y, cfg),
    )
