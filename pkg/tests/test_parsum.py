import numpy as np
import pytest
from hypothesis import given, strategies as st

from varpole.numla import ann_row, numerical_rank, orth_complement, pinv, range_basis
from varpole.parsum import (
    NotIdempotentError,
    ProjectorPair,
    bordered_parallel_sum,
    combined_projector,
    parallel_sum,
    parsum_rank,
    parsum_rank_simplified,
)

TOL = 1e-9
D10 = np.diag([1.0, 0.0])
D110 = np.diag([1.0, 1.0, 0.0])
D011 = np.diag([0.0, 1.0, 1.0])


def orth_projector(G):
    return G @ pinv(G)


def subspaces(seed, n, dims, common):
    """Random bases of given dimensions sharing a ``common``-dimensional part."""
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((n, common))
    return [np.hstack([C, rng.standard_normal((n, max(d - common, 0)))]) for d in dims]


def intersection_projector(*bases):
    # x in every span  <=>  x orthogonal to every complement
    n = bases[0].shape[0]
    comp = np.hstack([orth_complement(B) for B in bases])
    return np.eye(n) - orth_projector(comp) if comp.size else np.eye(n)


pairs = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.integers(0, 10_000), st.just(n), st.integers(0, n), st.integers(0, n), st.integers(0, n)))


def _pair(seed, n, a, b, c):
    c = min(c, a, b)
    Ga, Gb = subspaces(seed, n, (a, b), c)
    return orth_projector(Ga), orth_projector(Gb), Ga, Gb


# -- examples -----------------------------------------------------------------

def test_parallel_sum_examples():
    assert np.allclose(parallel_sum(D10, D10), 0.5 * D10)
    assert np.allclose(parallel_sum(D10, np.diag([0.0, 1.0])), 0)
    assert np.allclose(parallel_sum(D110, D011), np.diag([0.0, 0.5, 0.0]))


def test_parallel_sum_shape_error():
    with pytest.raises(ValueError):
        parallel_sum(np.eye(2), np.eye(3))


def test_combined_projector_examples():
    assert np.allclose(combined_projector(ProjectorPair(D10, D10)), D10)
    assert np.allclose(combined_projector(ProjectorPair(D110, D011)), np.diag([0.0, 1.0, 0.0]))
    assert np.allclose(combined_projector(ProjectorPair(np.eye(2), np.zeros((2, 2)))), 0)


def test_projector_pair_rejects_non_idempotent():
    with pytest.raises(NotIdempotentError):
        ProjectorPair(2 * np.eye(2), np.eye(2))


def test_bordered_examples():
    assert np.allclose(bordered_parallel_sum(D10, D10), 0.5 * D10)
    assert np.allclose(bordered_parallel_sum(D110, D011), np.diag([0.0, 0.5, 0.0]))
    assert np.allclose(bordered_parallel_sum(np.eye(2), np.eye(2)), 0.5 * np.eye(2))


def test_parsum_rank_examples():
    assert parsum_rank(D10, D10) == 1
    assert parsum_rank(D110, D011) == 1
    assert parsum_rank(np.eye(2), np.zeros((2, 2))) == 0


def test_parsum_rank_simplified_precondition():
    # B (I - A A^+) = I - A A^+ holds for A = diag(1,1,0), B = diag(0,1,1)
    assert parsum_rank_simplified(D110, D011) == 1
    # fails for A = diag(1,0,0), B = diag(1,0,0)
    assert parsum_rank_simplified(np.diag([1.0, 0, 0]), np.diag([1.0, 0, 0])) is None


# -- properties ---------------------------------------------------------------

@given(pairs)
def test_commutativity(args):
    A, B, _, _ = _pair(*args)
    assert np.abs(parallel_sum(A, B) - parallel_sum(B, A)).max(initial=0) <= TOL


@given(pairs, st.sampled_from([0.5, 2.0, 7.0]))
def test_positive_scaling(args, alpha):
    A, B, _, _ = _pair(*args)
    assert np.abs(alpha * parallel_sum(A, B) - parallel_sum(alpha * A, alpha * B)).max(initial=0) <= TOL


@given(pairs)
def test_combined_projector_is_intersection(args):
    A, B, Ga, Gb = _pair(*args)
    Pc = combined_projector(ProjectorPair(A, B))
    assert np.abs(Pc @ Pc - Pc).max(initial=0) <= TOL
    # oracle: orthogonal projector onto span(Ga) & span(Gb)
    assert np.abs(Pc - intersection_projector(Ga, Gb)).max(initial=0) <= 1e-8


@given(pairs)
def test_bordered_matches_definition(args):
    A, B, _, _ = _pair(*args)
    assert np.abs(bordered_parallel_sum(A, B) - parallel_sum(A, B)).max(initial=0) <= TOL


@given(st.integers(0, 10_000), st.integers(1, 6), st.data())
def test_associativity(seed, n, data):
    dims = [data.draw(st.integers(0, n)) for _ in range(3)]
    common = data.draw(st.integers(0, min(dims)))
    A, B, C = (orth_projector(G) for G in subspaces(seed, n, dims, common))
    left = parallel_sum(parallel_sum(A, B), C)
    right = parallel_sum(A, parallel_sum(B, C))
    assert np.abs(left - right).max(initial=0) <= TOL


@given(pairs)
def test_rank_identity(args):
    A, B, _, _ = _pair(*args)
    r = numerical_rank(parallel_sum(A, B), scale=1.0)
    assert r == parsum_rank(A, B)
    simple = parsum_rank_simplified(A, B)
    if simple is not None:
        assert simple == r


@given(pairs)
def test_rank_identity_complements(args):
    # r(A^T : B^T) = n - r([Gamma, Xi]) with A = Gamma Gamma^+, B = Xi Xi^+
    A, B, Ga, Gb = _pair(*args)
    n = A.shape[0]
    Gam, Xi = range_basis(A, scale=1.0), range_basis(B, scale=1.0)
    lhs = numerical_rank(parallel_sum(ann_row(A), ann_row(B)), scale=1.0)
    assert lhs == n - numerical_rank(np.hstack([Gam, Xi]), scale=1.0)


@given(st.integers(0, 10_000), st.integers(2, 6), st.data())
def test_annihilation(seed, n, data):
    k = data.draw(st.integers(1, n - 1))
    l = data.draw(st.integers(1, n - 1))
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, k))
    S = rng.standard_normal((n, l))
    pair = ProjectorPair.from_annihilators(R, S)
    Pc = combined_projector(pair)
    V = orth_complement(R) @ rng.standard_normal((n - k, 3))  # R^T V = 0
    W = orth_complement(S) @ rng.standard_normal((n - l, 3))  # S^T W = 0
    assert np.abs(Pc @ np.hstack([V, W])).max() <= 1e-8
    assert np.abs(Pc @ (0.3 * V + 1.7 * W)).max() <= 1e-8
