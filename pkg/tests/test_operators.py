"""
Tests for the dense operator algebra.

Verifies:
- Kronecker products and partial traces
- Principal square roots of density operators
- Rank-1 projections of M_2(C) and their error paths
- The [re, im] matrix codec
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import BadPhase, DimensionMismatch, InvalidParameter, NotAProjection, NotPSD
from app.linalg.operators import (
    check_density,
    check_projection,
    complement,
    decode_matrix,
    encode_matrix,
    is_psd,
    kron,
    kron_all,
    op_norm,
    partial_trace,
    partial_trace_first,
    principal_sqrt,
    projector,
    rank1_projection,
)
from app.walk.factory import ginibre, random_density


def test_kron_shapes_and_mixed_product(rng):
    a, b = ginibre(rng, 2, 2), ginibre(rng, 3, 3)
    c, d = ginibre(rng, 2, 2), ginibre(rng, 3, 3)
    assert kron(a, b).shape == (6, 6)
    assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-12)
    assert_allclose(kron_all([a, b, c]), np.kron(np.kron(a, b), c))


def test_kron_all_needs_a_factor():
    with pytest.raises(DimensionMismatch):
        kron_all([])


def test_principal_sqrt_squares_back(rng):
    for dim in (1, 2, 3, 5):
        rho = random_density(rng, dim)
        s = principal_sqrt(rho)
        assert_allclose(s @ s, rho, atol=1e-10)
        assert_allclose(s, s.conj().T, atol=1e-12)
        assert is_psd(s)


def test_principal_sqrt_rank_deficient():
    rho = np.diag([0.25, 0.0]).astype(complex)
    assert_allclose(principal_sqrt(rho), np.diag([0.5, 0.0]), atol=1e-12)


def test_principal_sqrt_clips_tiny_negative_eigenvalues():
    rho = np.diag([1.0, -1e-12]).astype(complex)
    assert_allclose(principal_sqrt(rho), np.diag([1.0, 0.0]), atol=1e-12)


def test_principal_sqrt_rejects_negative_operator():
    with pytest.raises(NotPSD):
        principal_sqrt(np.diag([1.0, -0.1]))
    with pytest.raises(NotPSD):
        check_density(np.diag([1.0, -0.1]))


def test_partial_trace_first_of_product(rng):
    a, b = ginibre(rng, 2, 2), ginibre(rng, 3, 3)
    assert_allclose(partial_trace_first(np.kron(a, b), 2, 3), np.trace(a) * b, atol=1e-12)


def test_partial_trace_keeps_requested_factors_in_order(rng):
    a, b, c = ginibre(rng, 2, 2), ginibre(rng, 3, 3), ginibre(rng, 2, 2)
    full = kron_all([a, b, c])
    assert_allclose(partial_trace(full, [2, 3, 2], keep=[0, 2]), np.trace(b) * np.kron(a, c), atol=1e-11)
    assert_allclose(partial_trace(full, [2, 3, 2], keep=[]), [[np.trace(full)]], atol=1e-11)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        partial_trace_first(np.eye(5), 2, 3)


@pytest.mark.parametrize("eps", [0.0, 0.25, 0.5, 1.0])
def test_rank1_projection_is_a_rank_one_projection(eps):
    z = np.exp(0.7j)
    p = rank1_projection(eps, z)
    assert_allclose(p @ p, p, atol=1e-12)
    assert_allclose(p, p.conj().T, atol=1e-12)
    assert np.trace(p).real == pytest.approx(1.0)
    assert p[0, 0].real == pytest.approx(eps)


def test_rank1_projection_edges():
    assert_allclose(rank1_projection(1.0, 1.0), np.diag([1.0, 0.0]))
    assert_allclose(rank1_projection(0.0, -1j), np.diag([0.0, 1.0]))


def test_rank1_projection_errors():
    with pytest.raises(BadPhase):
        rank1_projection(0.5, 0.9)
    with pytest.raises(InvalidParameter):
        rank1_projection(1.5, 1.0)


def test_projection_helpers(rng):
    xi = np.array([1.0, 1.0j]) / np.sqrt(2)
    p = projector(xi)
    assert_allclose(check_projection(p), p)
    assert_allclose(complement(p) @ p, np.zeros((2, 2)), atol=1e-12)
    with pytest.raises(InvalidParameter):
        projector([1.0, 1.0])
    with pytest.raises(NotAProjection):
        check_projection(ginibre(rng, 2, 2))


def test_op_norm_is_largest_singular_value():
    assert op_norm(np.diag([0.3, -2.0])) == pytest.approx(2.0)


def test_matrix_codec(rng):
    m = ginibre(rng, 2, 3)
    assert_allclose(decode_matrix(encode_matrix(m)), m)
    assert_allclose(decode_matrix([[1, [0, 2]], [0.5, [1, -1]]]), [[1, 2j], [0.5, 1 - 1j]])
