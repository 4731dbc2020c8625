"""Tests for the matrix-algebra kernel."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mucogarch import kronalg as ka
from mucogarch.exceptions import NonDiagonalizableError, NotPositiveSemidefiniteError


def rng_for(seed):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# vec calculus


def test_vec_definition():
    x = np.array([[1.0, 3.0], [2.0, 4.0]])
    assert np.array_equal(ka.vec(x), [1.0, 2.0, 3.0, 4.0])


def test_vec_of_rank_one_outer():
    v = np.array([1.0, 1.0])
    assert np.array_equal(ka.vec(np.outer(v, v)), np.ones(4))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=10**6))
def test_unvec_vec_round_trip(d, seed):
    x = rng_for(seed).standard_normal((d, d))
    assert np.array_equal(ka.unvec(ka.vec(x)), x)


def test_vec_rejects_non_square():
    with pytest.raises(ValueError):
        ka.vec(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        ka.unvec(np.zeros(5))


def test_vech_ordering():
    x = np.array([[1.0, 2.0], [2.0, 5.0]])
    assert np.array_equal(ka.vech(x), [1.0, 2.0, 5.0])
    assert ka.vech_labels("Y", 2) == ["Y_11", "Y_21", "Y_22"]


# ---------------------------------------------------------------------------
# Kronecker identities


def test_kron_identity_blocks():
    assert np.array_equal(ka.kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_mixed_product_and_vec_identity():
    rng = rng_for(3)
    a, b, c, d = (rng.standard_normal((3, 3)) for _ in range(4))
    assert np.allclose(ka.kron(a, b) @ ka.kron(c, d), ka.kron(a @ c, b @ d))
    x = rng.standard_normal((3, 3))
    assert np.abs(ka.vec(a @ x @ b) - ka.kron(b.T, a) @ ka.vec(x)).max() < 1e-12


def test_kron_operator_norm_squares():
    rng = rng_for(4)
    a = rng.standard_normal((3, 3))
    assert np.isclose(np.linalg.norm(ka.kron(a, a), 2), np.linalg.norm(a, 2) ** 2)


# ---------------------------------------------------------------------------
# commutation and reshuffle permutations


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_commutation_transposes_vec(d):
    rng = rng_for(10 + d)
    k = ka.commutation_matrix(d)
    a = rng.standard_normal((d, d))
    assert np.allclose(k @ ka.vec(a), ka.vec(a.T))
    assert np.allclose(k @ k, np.eye(d * d))


def _q_index_oracle(x, d):
    out = np.empty_like(x)
    for k in range(d):
        for l in range(d):
            for p in range(d):
                for q in range(d):
                    out[k * d + l, p * d + q] = x[k * d + p, l * d + q]
    return out


@pytest.mark.parametrize("d", [1, 2, 3])
def test_reshuffle_matches_index_oracle(d):
    rng = rng_for(20 + d)
    m = rng.standard_normal((d * d, d * d))
    assert np.array_equal(ka.q_reshuffle(m), _q_index_oracle(m, d))
    assert np.array_equal(ka.q_reshuffle(ka.q_reshuffle(m)), m)


def test_reshuffle_sends_vec_outer_to_kron():
    rng = rng_for(21)
    for d in (1, 2, 3):
        x = rng.standard_normal((d, d))
        x = x + x.T
        z = rng.standard_normal((d, d))
        z = z + z.T
        got = ka.q_reshuffle(np.outer(ka.vec(x), ka.vec(z)))
        assert np.abs(got - ka.kron(x, z)).max() < 1e-12


def test_reshuffle_identity_example():
    got = ka.q_reshuffle(np.outer(ka.vec(np.eye(2)), ka.vec(np.eye(2))))
    assert np.array_equal(got, np.eye(4))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_big_permutations_are_permutations(d):
    q4 = ka.reshuffle_matrix(d)
    k4 = np.kron(np.eye(d * d), ka.commutation_matrix(d))
    for mat in (q4, k4):
        assert ((mat == 0) | (mat == 1)).all()
        assert (mat.sum(axis=0) == 1).all() and (mat.sum(axis=1) == 1).all()
        assert np.isclose(np.linalg.norm(mat, 2), 1.0)
    rng = rng_for(30 + d)
    m = rng.standard_normal((d * d, d * d))
    assert np.allclose(q4 @ ka.vec(m), ka.vec(ka.q_reshuffle(m)))
    assert np.allclose(q4 @ q4, np.eye(d**4))


# ---------------------------------------------------------------------------
# matrix exponential


def test_matrix_exp_zero_time_is_identity():
    m = rng_for(5).standard_normal((4, 4))
    assert np.array_equal(ka.matrix_exp(m, 0.0), np.eye(4))


def test_matrix_exp_known_nilpotent_shift():
    b = np.array([[-0.5 * np.log(10 / 9), 0.0], [1.0, -0.5 * np.log(10 / 9)]])
    target = np.sqrt(9 / 10) * np.array([[1.0, 0.0], [1.0, 1.0]])
    assert np.abs(ka.matrix_exp(b, 1.0) - target).max() < 1e-13


def test_matrix_exp_diagonal():
    out = ka.matrix_exp(np.diag([-1.0, 2.0]), 0.7)
    assert np.allclose(out, np.diag([np.exp(-0.7), np.exp(1.4)]))


def test_matrix_exp_against_high_precision():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    rng = rng_for(6)
    for _ in range(3):
        m = rng.standard_normal((3, 3))
        ref = mpmath.expm(mpmath.matrix(m.tolist()))
        ref = np.array([[float(ref[i, j]) for j in range(3)] for i in range(3)])
        got = ka.matrix_exp(m, 1.0)
        assert np.abs(got - ref).max() < 1e-10 * max(1.0, np.abs(ref).max())


def test_matrix_exp_rejects_non_finite():
    with pytest.raises(ValueError):
        ka.matrix_exp(np.array([[np.nan, 0.0], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# spectral data


def test_diagonalize_negative_identity():
    sd = ka.diagonalize(-np.eye(2))
    assert sd.lam == -1.0
    assert np.abs(sd.s - np.eye(2)).max() == 0.0


def test_diagonalize_sorts_by_real_part():
    sd = ka.diagonalize(np.diag([-2.0, -1.0]))
    assert sd.lam == -1.0
    assert sd.eigenvalues[0].real == -1.0


def test_diagonalize_rejects_defective():
    b = np.array([[-0.5 * np.log(10 / 9), 0.0], [1.0, -0.5 * np.log(10 / 9)]])
    with pytest.raises(NonDiagonalizableError):
        ka.diagonalize(b)


def test_diagonalize_reconstruction():
    rng = rng_for(7)
    b = rng.standard_normal((4, 4))
    sd = ka.diagonalize(b)
    recon = (sd.s @ np.diag(sd.eigenvalues) @ sd.s_inv).real
    assert np.abs(recon - b).max() < 1e-10 * max(1.0, np.abs(b).max())


# ---------------------------------------------------------------------------
# twisted norms


def test_bs_norm_unitary_is_euclidean():
    rng = rng_for(8)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    x = rng.standard_normal(9)
    assert np.isclose(ka.bs_norm_vec(x, q), np.linalg.norm(x))
    m = rng.standard_normal((9, 9))
    assert np.isclose(ka.bs_norm_mat(m, q), np.linalg.norm(m, 2))


def test_bs_norm_scalar_is_absolute_value():
    assert np.isclose(ka.bs_norm_vec(np.array([-2.0]), np.array([[1.0]])), 2.0)


def test_bs_norm_flow_semigroup_value():
    b = np.array([[-1.0, 2.0], [0.0, -3.0]])
    sd = ka.diagonalize(b)
    two_sided = np.kron(b, np.eye(2)) + np.kron(np.eye(2), b)
    for t in (0.25, 1.0, 2.0):
        val = ka.bs_norm_mat(ka.matrix_exp(two_sided, t), sd)
        assert np.isclose(val, np.exp(2 * sd.lam * t), rtol=1e-9)


def test_bs_norm_sandwich_inequalities():
    rng = rng_for(9)
    b = rng.standard_normal((3, 3))
    sd = ka.diagonalize(b)
    sn = np.linalg.norm(sd.s, 2)
    sin = np.linalg.norm(sd.s_inv, 2)
    for _ in range(20):
        x = rng.standard_normal(9)
        v = ka.bs_norm_vec(x, sd)
        assert v <= sin**2 * np.linalg.norm(x) + 1e-12
        assert np.linalg.norm(x) <= sn**2 * v + 1e-12


def test_bs_norm_axioms_sampled():
    rng = rng_for(12)
    b = rng.standard_normal((2, 2))
    sd = ka.diagonalize(b)
    x, y = rng.standard_normal(4), rng.standard_normal(4)
    assert ka.bs_norm_vec(x + y, sd) <= ka.bs_norm_vec(x, sd) + ka.bs_norm_vec(y, sd) + 1e-12
    assert np.isclose(ka.bs_norm_vec(2.5 * x, sd), 2.5 * ka.bs_norm_vec(x, sd))
    assert ka.bs_norm_vec(x, sd) > 0


# ---------------------------------------------------------------------------
# worst-case ratio constant


def test_k2b_unitary_is_one():
    rng = rng_for(13)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    assert abs(ka.k2b(q, n_samples=2000) - 1.0) < 1e-9


def test_k2b_scalar_formula():
    assert np.isclose(ka.k2b(np.array([[2.5]])), 2.5**2)


def test_k2b_bounded_by_squared_norm():
    rng = rng_for(14)
    for seed in range(3):
        b = rng.standard_normal((2, 2))
        try:
            sd = ka.diagonalize(b)
        except NonDiagonalizableError:
            continue
        k = ka.k2b(sd, n_samples=2000, seed=seed)
        assert k <= np.linalg.norm(sd.s, 2) ** 2 * (1 + 1e-9)
        assert k >= 1.0 - 1e-9


def test_k2b_safe_substitute():
    b = np.array([[-1.0, 2.0], [0.0, -3.0]])
    sd = ka.diagonalize(b)
    assert np.isclose(ka.k2b(sd, use_upper_bound=True), np.linalg.norm(sd.s, 2))


# ---------------------------------------------------------------------------
# PSD square root


def test_psd_sqrt_diagonal():
    assert np.allclose(ka.psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(ka.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_psd_sqrt_squares_back():
    rng = rng_for(15)
    a = rng.standard_normal((4, 4))
    p = a @ a.T
    r = ka.psd_sqrt(p)
    assert np.abs(r @ r - p).max() < 1e-10 * np.abs(p).max()
    assert np.abs(r - r.T).max() < 1e-12


def test_psd_sqrt_kron_norm_identity():
    rng = rng_for(16)
    a = rng.standard_normal((3, 3))
    p = a @ a.T
    r = ka.psd_sqrt(p)
    assert np.isclose(np.linalg.norm(np.kron(r, r), 2), np.linalg.norm(p, 2))


def test_psd_sqrt_clamps_rounding_negatives():
    p = np.diag([1.0, -1e-14])
    r = ka.psd_sqrt(p)
    assert r[1, 1] == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=10**6))
def test_psd_sqrt_round_trip_property(d, seed):
    z = rng_for(seed).standard_normal((d, d))
    p = z @ z.T
    r = ka.psd_sqrt(p)
    assert np.abs(r @ r - p).max() <= 1e-10 * (1 + np.abs(p).max())
    assert np.linalg.eigvalsh(r)[0] >= -1e-12


def test_psd_sqrt_rejects_negative():
    with pytest.raises(NotPositiveSemidefiniteError):
        ka.psd_sqrt(np.diag([1.0, -0.5]))


# ---------------------------------------------------------------------------
# Lipschitz facts used as numeric sanity properties


def test_kron_difference_lipschitz():
    rng = rng_for(17)
    for _ in range(20):
        a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        lhs = np.linalg.norm(np.kron(a, a) - np.kron(b, b), 2)
        rhs = 2 * max(np.linalg.norm(a, 2), np.linalg.norm(b, 2)) * np.linalg.norm(a - b, 2)
        assert lhs <= rhs + 1e-10


def test_sqrt_lipschitz_on_floored_cone():
    rng = rng_for(18)
    floor = 0.5
    for _ in range(20):
        za, zb = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        a = za @ za.T + floor * np.eye(3)
        b = zb @ zb.T + floor * np.eye(3)
        lhs = np.linalg.norm(ka.psd_sqrt(a) - ka.psd_sqrt(b), 2)
        assert lhs <= np.linalg.norm(a - b, 2) / (2 * np.sqrt(floor)) + 1e-10


# ---------------------------------------------------------------------------
# operator assembly


class _P:
    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)


def test_build_operators_scalar_reduction():
    a, b, sl, rl = 0.7, -1.0, 1.1, 1.7
    ops = ka.build_operators(_P([[a]], [[b]]), sl, rl)
    assert np.isclose(ops.mean_gen[0, 0], 2 * b + sl * a**2)
    assert np.isclose(ops.mix4[0, 0], 3 * rl)
    assert np.isclose(ops.second_gen[0, 0], 4 * b + 2 * sl * a**2 + 3 * rl * a**4)


def test_build_operators_zero_jump_loading():
    b = np.array([[-1.0, 0.0], [0.5, -2.0]])
    ops = ka.build_operators(_P(np.zeros((2, 2)), b), 1.0, 0.7)
    bb = np.kron(b, np.eye(2)) + np.kron(np.eye(2), b)
    assert np.allclose(ops.mean_gen, bb)
    assert np.allclose(ops.second_gen, np.kron(bb, np.eye(4)) + np.kron(np.eye(4), bb))


def test_build_operators_shapes():
    ops = ka.build_operators(_P(0.1 * np.eye(2), -np.eye(2)), 1.0, 1.0)
    assert ops.mean_gen.shape == (4, 4)
    assert ops.second_gen.shape == (16, 16)
    assert ops.mix4.shape == (16, 16)


def test_quartic_mix_operator_vs_matrix_form():
    rng = rng_for(19)
    ops = ka.build_operators(_P(rng.standard_normal((2, 2)), rng.standard_normal((2, 2))), 0.8, 1.3)
    x = rng.standard_normal((4, 4))
    assert np.allclose(ka.vec(ops.apply_quartic_mix(x)), ops.mix4 @ ka.vec(x), atol=1e-12)


def test_build_operators_rejects_negative_constants():
    with pytest.raises(ValueError):
        ka.build_operators(_P(np.eye(2), -np.eye(2)), -1.0, 0.0)


def test_reshuffle_sum_norm_bound_for_unitary_basis():
    # operator-norm side never exceeds 3; the structural vec side reaches d and sqrt(12) at d=2
    for d in (1, 2, 3):
        q4 = ka.reshuffle_matrix(d)
        k4 = np.kron(np.eye(d * d), ka.commutation_matrix(d))
        lhs = np.linalg.norm(q4 + k4 @ q4 + np.eye(d**4), 2)
        v = ka.vec(np.eye(d))
        rhs = np.linalg.norm(ka.vec(np.eye(d * d) + ka.commutation_matrix(d) + np.outer(v, v)))
        assert lhs <= rhs + 1e-12
        if d == 1:
            assert np.isclose(lhs, 3.0) and np.isclose(rhs, 3.0)
        if d == 2:
            assert rhs >= np.sqrt(12) - 1e-12
        if d == 3:
            assert rhs >= 3.0 - 1e-12
