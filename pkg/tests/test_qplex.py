import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from qplexkit import qplex as Q
from qplexkit.operator_core import projector, random_density, random_orthogonal_pair, random_povm, random_pure_state
from qplexkit.sic import triple_products


def lower_by_root_finding(d, q):
    """Independent oracle: root of the MMD-bound condition, bracketed by a grid scan."""
    N = d + q * d * (d - 1) // 2
    if N == d:
        return 0.0

    def g(L):
        U = 1 + L * (N - 1) * (N * L - 2)
        return 1 + (U - 1 / N) / (1 / N - L) - d

    grid = np.linspace(0, 1 / N, 2001)[:-1]
    vals = [g(x) for x in grid]
    i = next(k for k, v in enumerate(vals) if v < 0)
    return brentq(g, grid[i - 1], grid[i], xtol=1e-16, rtol=1e-15)


def test_make_params_examples():
    p = Q.make_params(2, 2)
    assert (p.N, p.L, p.U) == (4, 1 / 6, 1 / 3)
    assert Q.make_params(3, 1).N == 6
    assert Q.make_params(3, 2).N == 9
    assert Q.make_params(3, 4).N == 15
    assert Q.make_params(2, 1).N == 3
    flat = Q.make_params(4, 0)
    assert (flat.N, flat.L, flat.U) == (4, 0.0, 1.0)


@pytest.mark.parametrize("q", [0, 1, 2, 4])
@pytest.mark.parametrize("d", range(2, 9))
def test_lower_bound_matches_root_finding(d, q):
    p = Q.make_params(d, q)
    assert p.L == pytest.approx(lower_by_root_finding(d, q), abs=1e-14)
    assert p.U == pytest.approx(Q.upper_from_lower(p.N, p.L), abs=1e-14)
    assert Q.mmd_bound(p) == d


@pytest.mark.parametrize("d", range(2, 9))
def test_q2_constants_exact(d):
    p = Q.make_params(d, 2)
    assert p.L == 1 / (d * (d + 1))
    assert abs(p.U - 2 * p.L) < 1e-15
    assert abs(Q.upper_from_lower(p.N, p.L) - p.U) < 1e-14


def test_make_params_rejects():
    with pytest.raises(ValueError):
        Q.make_params(1, 2)
    with pytest.raises(ValueError):
        Q.make_params(3, -1)


def test_params_round_trip():
    p = Q.make_params(3, 4)
    assert Q.QplexParams.from_dict(p.to_dict()) == p


def test_basis_distribution_examples():
    p = Q.make_params(2, 2)
    e0 = Q.basis_distribution(p, 0)
    np.testing.assert_allclose(e0, [1 / 2, 1 / 6, 1 / 6, 1 / 6], atol=1e-15)
    assert e0 @ e0 == pytest.approx(1 / 3, abs=1e-15)
    assert e0 @ Q.basis_distribution(p, 1) == pytest.approx(2 / 9, abs=1e-15)
    with pytest.raises(IndexError):
        Q.basis_distribution(p, 4)


@pytest.mark.parametrize("q", [1, 2, 4])
def test_basis_self_product_is_upper(q):
    p = Q.make_params(4, q)
    for k in range(p.N):
        e = Q.basis_distribution(p, k)
        assert e @ e == pytest.approx(p.U, abs=1e-14)
        assert e.sum() == pytest.approx(1, abs=1e-14)


def test_phi_examples():
    p = Q.make_params(2, 2)
    phi = Q.phi_matrix(p)
    np.testing.assert_allclose(np.diag(phi), 5 / 2, atol=1e-14)
    np.testing.assert_allclose(phi[~np.eye(4, dtype=bool)], -1 / 2, atol=1e-14)
    np.testing.assert_allclose(phi @ p.flat, p.flat, atol=1e-14)


@pytest.mark.parametrize("q", [0, 1, 2, 4])
@pytest.mark.parametrize("d", range(2, 9))
def test_phi_inverts_basis_matrix(d, q):
    p = Q.make_params(d, q)
    assert np.max(np.abs(Q.phi_matrix(p) @ Q.basis_matrix(p) - np.eye(p.N))) <= 1e-12


@pytest.mark.parametrize("d", range(2, 7))
def test_phi_q2_form(d):
    p = Q.make_params(d, 2)
    np.testing.assert_allclose(Q.phi_matrix(p), (d + 1) * np.eye(d * d) - 1 / d, atol=1e-12)


def test_consistency_cases():
    p = Q.make_params(2, 2)
    delta = np.eye(4)[0]
    assert Q.consistency(p.flat, p.flat, p) is Q.Consistency.IN_BAND
    assert Q.consistency(delta, delta, p) is Q.Consistency.ABOVE_U
    e0, e1 = Q.basis_distribution(p, 0), Q.basis_distribution(p, 1)
    assert Q.consistency(e0, e1, p) is Q.Consistency.IN_BAND
    assert Q.consistency(np.eye(4)[0], np.eye(4)[1], p) is Q.Consistency.BELOW_L
    # the boundary itself counts as consistent
    assert Q.consistency(e0, e0, p) is Q.Consistency.IN_BAND
    with pytest.raises(ValueError):
        Q.consistency(np.ones(3) / 3, p.flat, p)


def test_urgleichung_reference_measurement_returns_p(rng):
    for d, q in [(2, 2), (3, 2), (3, 1), (2, 4)]:
        params = Q.make_params(d, q)
        p = rng.dirichlet(np.ones(params.N))
        out = Q.urgleichung(Q.basis_matrix(params), p, params)
        assert np.max(np.abs(out - p)) < 1e-12


def test_urgleichung_flat_prior_gives_gamma(rng):
    params = Q.make_params(3, 2)
    r = rng.dirichlet(np.ones(5), size=params.N).T
    out = Q.urgleichung(r, params.flat, params)
    np.testing.assert_allclose(out, r.mean(axis=1), atol=1e-12)


def test_urgleichung_flat_measurement(rng):
    params = Q.make_params(2, 2)
    r = np.full((3, 4), 1 / 3)
    p = rng.dirichlet(np.ones(4))
    np.testing.assert_allclose(Q.urgleichung(r, p, params), 1 / 3, atol=1e-15)


def test_urgleichung_q0_is_total_probability(rng):
    params = Q.make_params(4, 0)
    np.testing.assert_array_equal(Q.phi_matrix(params), np.eye(4))
    r = rng.dirichlet(np.ones(3), size=4).T
    p = rng.dirichlet(np.ones(4))
    expected = [sum(p[i] * r[j, i] for i in range(4)) for j in range(3)]
    np.testing.assert_allclose(Q.urgleichung(r, p, params), expected, atol=1e-15)


def test_urgleichung_flags_negative_output():
    params = Q.make_params(2, 2)
    delta = np.eye(4)[0]
    with pytest.warns(Q.NonRealizableWarning):
        out = Q.urgleichung(np.eye(4), delta, params)
    assert out.min() < 0
    assert out.sum() == pytest.approx(1)


def test_urgleichung_input_validation():
    params = Q.make_params(2, 2)
    with pytest.raises(ValueError):
        Q.urgleichung(np.eye(3), np.ones(3) / 3, params)
    with pytest.raises(ValueError):
        Q.urgleichung(np.eye(4) * 2, params.flat, params)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2), (3, 1), (3, 2), (2, 4)]))
def test_urgleichung_output_sums_to_one(seed, dq):
    params = Q.make_params(*dq)
    rng = np.random.default_rng(seed)
    r = rng.dirichlet(np.ones(6), size=params.N).T
    p = rng.dirichlet(np.ones(params.N))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", Q.NonRealizableWarning)
        out = Q.urgleichung(r, p, params)
    assert abs(out.sum() - 1) <= 1e-12


def test_state_to_probs_examples(small_sic, rng):
    d = small_sic.dim
    params = Q.make_params(d, 2)
    np.testing.assert_allclose(Q.state_to_probs(np.eye(d) / d, small_sic), 1 / d**2, atol=1e-14)
    p = Q.state_to_probs(projector(random_pure_state(d, rng)), small_sic)
    assert p @ p == pytest.approx(params.U, abs=1e-10)
    a, b = random_orthogonal_pair(d, rng)
    pa = Q.state_to_probs(projector(a), small_sic)
    pb = Q.state_to_probs(projector(b), small_sic)
    assert pa @ pb == pytest.approx(params.L, abs=1e-10)


def test_probs_to_state(small_sic, rng):
    d = small_sic.dim
    rho, psd = Q.probs_to_state(np.full(d * d, 1 / d**2), small_sic)
    np.testing.assert_allclose(rho, np.eye(d) / d, atol=1e-12)
    assert psd
    for _ in range(5):
        sigma = random_density(d, rng)
        back, psd = Q.probs_to_state(Q.state_to_probs(sigma, small_sic), small_sic)
        assert psd
        assert np.max(np.abs(back - sigma)) < 1e-10
    rho, psd = Q.probs_to_state(np.eye(d * d)[0], small_sic)
    assert not psd
    assert np.trace(rho).real == pytest.approx(1)


def test_inner_product_dictionary(small_sic, rng):
    d = small_sic.dim
    for _ in range(20):
        rho, sigma = random_density(d, rng), random_density(d, rng)
        lhs = d * (d + 1) * Q.state_to_probs(rho, small_sic) @ Q.state_to_probs(sigma, small_sic) - 1
        assert abs(lhs - np.trace(rho @ sigma).real) < 1e-10


def test_born_rule_equivalence(small_sic, rng):
    d = small_sic.dim
    params = Q.make_params(d, 2)
    for _ in range(10):
        rho = random_density(d, rng)
        povm = random_povm(d, 3, rng)
        r = Q.measurement_matrix(povm, small_sic)
        out = Q.urgleichung(r, Q.state_to_probs(rho, small_sic), params)
        born = np.einsum("ab,jba->j", rho, povm).real
        assert np.max(np.abs(out - born)) < 1e-10


def basis_images(sic, u=None):
    d = sic.dim
    u = np.eye(d) if u is None else u
    return np.array([Q.state_to_probs(projector(u[:, k]), sic) for k in range(d)])


def test_mmd_bound_examples():
    assert Q.mmd_bound(Q.make_params(2, 2)) == 2
    assert Q.mmd_bound(Q.make_params(5, 2)) == 5
    for d in range(2, 7):
        assert Q.mmd_bound(Q.make_params(d, 0)) == d


def test_mmd_from_orthonormal_basis(small_sic):
    from qplexkit.operator_core import random_unitary

    d = small_sic.dim
    params = Q.make_params(d, 2)
    P = basis_images(small_sic, random_unitary(d, 7))
    report = Q.mmd_verify(P, params)
    assert report and report.saturated and report.m == d
    np.testing.assert_allclose(report.gram, (1 + np.eye(d)) / (d * (d + 1)), atol=1e-9)
    np.testing.assert_allclose(P.sum(axis=0), d * params.flat, atol=1e-10)


def test_mmd_measurement_d2(sic2):
    params = Q.make_params(2, 2)
    P = basis_images(sic2)
    r = Q.mmd_to_measurement(P, params)
    assert r.shape == (2, 4)
    np.testing.assert_allclose(r, 2 * P)
    np.testing.assert_allclose(r.sum(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(Q.urgleichung(r, params.flat, params), [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(Q.urgleichung(r, P[0], params), [1, 0], atol=1e-10)


def test_mmd_rejects(sic3):
    params = Q.make_params(3, 2)
    P = basis_images(sic3)
    with pytest.raises(ValueError):
        Q.mmd_to_measurement(P[:2], params)
    bad = np.array([params.flat, params.flat, params.flat])
    assert not Q.mmd_verify(bad, params)
    with pytest.raises(ValueError):
        Q.mmd_to_measurement(bad, params)


def test_zeros_bound():
    assert Q.zeros_bound(Q.make_params(2, 2)) == 1
    assert Q.zeros_bound(Q.make_params(3, 2)) == 3
    assert Q.count_zeros([0, 0.5, 1e-14, 0.5]) == 2


def test_qubit_images_respect_zeros_bound(sic2, rng):
    bound = Q.zeros_bound(Q.make_params(2, 2))
    for _ in range(1000):
        p = Q.state_to_probs(projector(random_pure_state(2, rng)), sic2)
        assert Q.count_zeros(p) <= bound
    # the state orthogonal to a SIC vector has exactly one zero
    v = sic2.vectors[0]
    perp = np.array([-np.conj(v[1]), np.conj(v[0])])
    assert Q.count_zeros(Q.state_to_probs(projector(perp), sic2), tol=1e-12) == 1


def test_qbic_examples(small_sic, rng):
    d = small_sic.dim
    trip = triple_products(small_sic)
    assert Q.qbic_rhs(2) == 1 / 3
    p = Q.state_to_probs(projector(random_pure_state(d, rng)), small_sic)
    quad, cubic = Q.qbic_residuals(p, trip, d)
    assert quad < 1e-10 and cubic < 1e-10
    quad, _ = Q.qbic_residuals(np.full(d * d, 1 / d**2), trip, d)
    assert quad == pytest.approx(abs(1 / d**2 - 2 / (d * (d + 1))))
    assert quad > 0
    e0 = Q.state_to_probs(small_sic.projectors[0], small_sic)
    np.testing.assert_allclose(e0, Q.basis_distribution(Q.make_params(d, 2), 0), atol=1e-12)
    assert Q.qbic_residuals(e0, trip, d)[1] < 1e-10


def test_qbic_rejects_mixed(sic3, rng):
    trip = triple_products(sic3)
    p = Q.state_to_probs(random_density(3, rng), sic3)
    quad, cubic = Q.qbic_residuals(p, trip, 3)
    assert quad > 1e-6


def test_basis_simplex_membership(sic3, rng):
    params = Q.make_params(3, 2)
    ok, lam = Q.basis_simplex_membership(params.flat, params)
    assert ok
    np.testing.assert_allclose(lam, params.flat, atol=1e-14)
    ok, lam = Q.basis_simplex_membership(Q.basis_distribution(params, 0), params)
    assert ok
    np.testing.assert_allclose(lam, np.eye(9)[0], atol=1e-14)
    p = Q.state_to_probs(projector(random_pure_state(3, rng)), sic3)
    ok, lam = Q.basis_simplex_membership(p, params)
    assert not ok
    assert lam.sum() == pytest.approx(1, abs=1e-12)
