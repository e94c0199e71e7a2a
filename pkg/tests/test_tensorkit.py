import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kacsq import tensorkit as tk


def rand_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


RNG = np.random.default_rng(0)


class TestPartialTranspose:
    def test_identity(self):
        u = np.eye(4, dtype=complex)
        assert np.array_equal(tk.partial_transpose(u, 2, 2), u)

    def test_elementary_tensor(self):
        a, b = rand_unitary(2, RNG), rand_unitary(3, RNG)
        got = tk.partial_transpose(np.kron(a, b), 2, 3)
        assert np.allclose(got, np.kron(a.T, b), atol=1e-13)

    def test_involution_exact(self):
        u = RNG.standard_normal((6, 6)) + 1j * RNG.standard_normal((6, 6))
        twice = tk.partial_transpose(tk.partial_transpose(u, 2, 3), 2, 3)
        assert np.array_equal(twice, u)

    def test_shape_error(self):
        with pytest.raises(ValueError):
            tk.partial_transpose(np.eye(5, dtype=complex), 2, 2)


class TestFlipSigma:
    def test_elementary_tensor(self):
        a, b = rand_unitary(2, RNG), rand_unitary(3, RNG)
        got = tk.flip_sigma(np.kron(a, b), 2, 3)
        assert np.allclose(got, np.kron(b, a), atol=1e-13)

    def test_involution(self):
        u = RNG.standard_normal((6, 6)) + 1j * RNG.standard_normal((6, 6))
        assert np.array_equal(tk.flip_sigma(tk.flip_sigma(u, 2, 3), 3, 2), u)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3), st.integers(2, 3), st.integers(0, 2 ** 31 - 1))
def test_leg_permutations_are_linear_bijections(n, k, seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n * k, n * k)) + 1j * rng.standard_normal((n * k, n * k))
    v = rng.standard_normal((n * k, n * k))
    # linearity and exact involutions, entrywise
    assert np.array_equal(tk.partial_transpose(u + v, n, k),
                          tk.partial_transpose(u, n, k) + tk.partial_transpose(v, n, k))
    assert np.array_equal(tk.partial_transpose(tk.partial_transpose(u, n, k), n, k), u)
    assert np.array_equal(tk.flip_sigma(tk.flip_sigma(u, n, k), k, n), u)


class TestNumericRank:
    def test_zero(self):
        assert tk.numeric_rank(np.zeros((4, 4), dtype=complex)) == 0

    def test_identity(self):
        assert tk.numeric_rank(np.eye(7, dtype=complex)) == 7

    def test_rank_one_projection(self):
        v = RNG.standard_normal(4) + 1j * RNG.standard_normal(4)
        v /= np.linalg.norm(v)
        assert tk.numeric_rank(np.outer(v, v.conj())) == 1

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2 ** 31 - 1))
    def test_unitary_conjugation_invariance(self, n, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        m[:, -1] = m[:, 0]  # force a rank drop
        u = rand_unitary(n, rng)
        assert tk.numeric_rank(u @ m @ u.conj().T) == tk.numeric_rank(m)


class TestEmbedLegs:
    def test_matches_kron_on_adjacent_legs(self):
        a = RNG.standard_normal((2, 2)) + 1j * RNG.standard_normal((2, 2))
        got = tk.embed_legs(a, [2], [2, 3], [0])
        assert np.allclose(got, np.kron(a, np.eye(3)), atol=1e-14)
        got = tk.embed_legs(a, [2], [3, 2], [1])
        assert np.allclose(got, np.kron(np.eye(3), a), atol=1e-14)

    def test_two_factor_placement(self):
        a = RNG.standard_normal((2, 2)) + 1j * RNG.standard_normal((2, 2))
        b = RNG.standard_normal((3, 3)) + 1j * RNG.standard_normal((3, 3))
        ab = np.kron(a, b)
        # place (a on leg 2, b on leg 0) of a 3-leg space
        got = tk.embed_legs(ab, [2, 3], [3, 2, 2], [2, 0])
        want = np.kron(b, np.kron(np.eye(2), a))
        assert np.allclose(got, want, atol=1e-14)

    def test_swapped_positions_equal_flip(self):
        a = RNG.standard_normal((2, 2)) + 1j * RNG.standard_normal((2, 2))
        b = RNG.standard_normal((3, 3)) + 1j * RNG.standard_normal((3, 3))
        got = tk.embed_legs(np.kron(a, b), [2, 3], [3, 2], [1, 0])
        assert np.allclose(got, np.kron(b, a), atol=1e-14)


class TestLeggedTensor:
    def test_permutation_roundtrip(self):
        data = RNG.standard_normal((2, 3, 4))
        t = tk.LeggedTensor(((2, "a"), (3, "b"), (4, "c")), data)
        p = t.permute(["c", "a", "b"]).permute(["a", "b", "c"])
        assert np.array_equal(p.data, data)

    def test_entry_count_invariant(self):
        with pytest.raises(ValueError):
            tk.LeggedTensor(((2, "a"), (3, "b")), np.zeros((2, 2)))

    def test_as_matrix(self):
        data = RNG.standard_normal((2, 3))
        t = tk.LeggedTensor(((2, "a"), (3, "b")), data)
        assert np.array_equal(t.as_matrix(["b"]), data.T)


def su_words(gens, length):
    """Brute-force span of all words in the generators up to given length."""
    words = [np.eye(gens[0].shape[0], dtype=complex)]
    frontier = [np.eye(gens[0].shape[0], dtype=complex)]
    for _ in range(length):
        frontier = [w @ g for w in frontier for g in gens]
        words.extend(frontier)
    return words


class TestAlgebraClosure:
    def test_single_projection_in_m3(self):
        p = np.diag([1.0, 0, 0]).astype(complex)
        basis = tk.algebra_closure([p], 3)
        assert basis.dim == 2

    def test_matrix_units_m2(self):
        gens = [np.zeros((2, 2), dtype=complex) for _ in range(4)]
        for idx, (i, j) in enumerate(itertools.product(range(2), range(2))):
            gens[idx][i, j] = 1.0
        assert tk.algebra_closure(gens, 2).dim == 4

    def test_s3_permutation_representation(self):
        # oracle: enumerate all words up to length 6 and orthonormalize
        s = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex)
        c = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=complex)
        oracle_rows = np.array([tk.svec(w, 3) for w in su_words([s, c], 6)])
        oracle_dim = tk.numeric_rank(oracle_rows)
        assert oracle_dim == 5
        assert tk.algebra_closure([s, c], 3).dim == oracle_dim

    def test_closure_is_closed_and_idempotent(self):
        rng = np.random.default_rng(3)
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        basis = tk.algebra_closure([g], 3)
        mats = basis.matrices()
        for a in mats:
            assert basis.residual(a.conj().T) < 1e-10
            for b in mats:
                assert basis.residual(a @ b) < 1e-10
        again = tk.algebra_closure(list(mats), 3)
        assert again.dim == basis.dim


class TestSubspaceRelate:
    def test_equality(self):
        x = tk.SubspaceBasis.from_matrices([np.eye(2, dtype=complex)], 2)
        rel = tk.subspace_relate(x, x)
        assert rel.equal and rel.x_in_y_residual < 1e-14

    def test_strict_containment(self):
        one = tk.SubspaceBasis.from_matrices([np.eye(3, dtype=complex)], 3)
        full = tk.SubspaceBasis(3, np.eye(9, dtype=complex))
        rel = tk.subspace_relate(one, full)
        assert rel.x_contained and not rel.y_contained and not rel.equal

    def test_intersection_and_product(self):
        diag = tk.SubspaceBasis.from_matrices(
            [np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)], 2)
        x_span = tk.SubspaceBasis.from_matrices(
            [np.eye(2, dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex)], 2)
        rel = tk.subspace_relate(diag, x_span)
        assert rel.intersection.dim == 1  # scalars
        assert rel.product_span.dim == 4  # diag * circulant spans M_2

    def test_ambient_mismatch(self):
        a = tk.SubspaceBasis.from_matrices([np.eye(2, dtype=complex)], 2)
        b = tk.SubspaceBasis.from_matrices([np.eye(3, dtype=complex)], 3)
        with pytest.raises(ValueError):
            tk.subspace_relate(a, b)
