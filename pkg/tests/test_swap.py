import numpy as np
import pytest

from qpurify import linalg, swap
from qpurify.errors import ShapeError, UnsupportedDegeneracyError
from qpurify.oracle import haar_unitary
from qpurify.states import diagonal, maximally_mixed, purity, random_density, random_pure, validate
from qpurify.subsystems import VirtualDecomposition, build_from_spectrum, is_purely_initialized, split_dimensions

from conftest import random_hermitian

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])


def ket(dim, i):
    v = np.zeros(dim)
    v[i] = 1
    return v


def expected_output(rho_S, rho_E, d_S):
    """Block-weight bookkeeping: sum_j w_j |j><j| + w_R rho_S, w_j the eigenvalue mass of block H_j."""
    split = split_dimensions(d_S, rho_E.shape[0])
    lam = np.sort(np.linalg.eigvalsh(rho_E))[::-1]
    w = [lam[j * split.d_F:(j + 1) * split.d_F].sum() for j in range(d_S)]
    w_R = lam[d_S * split.d_F:].sum()
    return np.diag(w) + w_R * np.asarray(rho_S)


def test_two_qubit_swap_is_swap_gate():
    dec = VirtualDecomposition(split_dimensions(2, 2), np.eye(2))
    assert np.array_equal(swap.build_generalized_swap(dec, 2).real, SWAP)


def test_swap_action_on_basis_d2_d4():
    dec = VirtualDecomposition(split_dimensions(2, 4), np.eye(4))
    w = swap.build_generalized_swap(dec, 2)
    assert set(np.unique(w)) <= {0, 1}
    assert np.all(np.sum(w != 0, axis=1) == 1)
    # |psi_j> (x) |phi_k>|xi_l>  ->  |psi_k> (x) |phi_j>|xi_l>
    for j in range(2):
        for k in range(2):
            for l in range(2):
                src = np.kron(ket(2, j), ket(4, 2 * k + l))
                dst = np.kron(ket(2, k), ket(4, 2 * j + l))
                assert np.array_equal(w @ src, dst)


def test_swap_fixes_remainder():
    dec = VirtualDecomposition(split_dimensions(2, 5), np.eye(5))
    w = swap.build_generalized_swap(dec, 2)
    for j in range(2):
        v = np.kron(ket(2, j), ket(5, 4))
        assert np.array_equal(w @ v, v)


def test_swap_unitarity_and_involution():
    rng = np.random.default_rng(3)
    for d_S in (2, 3, 4):
        for d_E in range(d_S, 13):
            rho = random_density(d_E, int(rng.integers(1, d_E + 1)), int(rng.integers(2**31)))
            dec = build_from_spectrum(rho, d_S)
            w = swap.build_generalized_swap(dec, d_S)
            assert np.max(np.abs(w.conj().T @ w - np.eye(d_S * d_E))) <= 1e-10
            assert np.max(np.abs(w @ w - np.eye(d_S * d_E))) <= 1e-10


def test_swap_shape_error():
    dec = build_from_spectrum(diagonal([0.5, 0.5, 0, 0]), 2)
    with pytest.raises(ShapeError):
        swap.build_generalized_swap(dec, 3)


def test_thresholds_examples():
    assert swap.thresholds(diagonal([0.5, 0.3, 0.15, 0.05]), 2) == pytest.approx((0.2, 0, 0.2), abs=1e-15)
    assert swap.thresholds(diagonal([0.4, 0.3, 0.15, 0.1, 0.05]), 2) == pytest.approx((0.3, 0.075, 0.225), abs=1e-15)
    assert swap.thresholds(random_density(5, 1, 0), 3) == pytest.approx((0, 0, 0), abs=1e-12)
    assert swap.thresholds(random_density(3, 3, 0), 1) == (0.0, 0.0, 0.0)


def test_thresholds_epsilon_zero_relation():
    for seed in range(200):
        d_S = 2 + seed % 3
        d_E = d_S + seed % 7
        e_t, e_r, e_0 = swap.thresholds(random_density(d_E, 1 + seed % d_E, seed), d_S)
        assert abs(e_0 - (e_t - e_r)) <= 1e-12
        assert e_0 >= -1e-15


def test_purify_example_one():
    out, rep = swap.purify(diagonal([0.6, 0.4]), diagonal([0.9, 0.1]), 2)
    assert np.allclose(out.matrix, np.diag([0.9, 0.1]), atol=1e-15)
    assert rep.achieved_distance == pytest.approx(0.1, abs=1e-12)
    assert rep.epsilon_tilde == pytest.approx(0.1, abs=1e-15)
    assert not rep.exact_possible


def test_purify_pure_environment():
    for seed in range(10):
        out, rep = swap.purify(random_density(3, 3, seed), random_density(7, 1, seed + 100), 3)
        assert purity(out) >= 1 - 1e-10
        assert rep.achieved_distance <= 1e-10
        assert rep.exact_possible


def test_purify_against_block_weights():
    out, rep = swap.purify(maximally_mixed(2), diagonal([0.5, 0.3, 0.15, 0.05]), 2)
    assert rep.achieved_distance <= 0.2 + 1e-12
    assert np.allclose(out.matrix, np.diag([0.8, 0.2]), atol=1e-14)
    rng = np.random.default_rng(11)
    for _ in range(60):
        d_S = int(rng.integers(2, 4))
        d_E = int(rng.integers(d_S, 10))
        rs = random_density(d_S, d_S, int(rng.integers(2**31)))
        re = random_density(d_E, int(rng.integers(1, d_E + 1)), int(rng.integers(2**31)))
        out, _ = swap.purify(rs, re, d_S)
        assert np.max(np.abs(out.matrix - expected_output(rs.matrix, re.matrix, d_S))) <= 1e-10


def test_purify_to_arbitrary_target():
    for seed in range(20):
        psi = random_pure(3, seed)
        re = random_density(8, 8, seed)
        out, rep = swap.purify(random_density(3, 2, seed), re, 3, target=psi)
        assert np.allclose(rep.target_state.amplitudes, psi.amplitudes)
        assert rep.achieved_distance <= rep.epsilon_tilde + 1e-10


def test_contraction_for_fixed_swap():
    rng = np.random.default_rng(5)
    for i in range(200):
        d_S = int(rng.integers(2, 4))
        d_E = int(rng.integers(d_S, 9))
        re = random_density(d_E, d_E, 7 * i)
        w = swap.build_generalized_swap(build_from_spectrum(re, d_S), d_S)
        r1 = random_density(d_S, int(rng.integers(1, d_S + 1)), 7 * i + 1).matrix
        r2 = random_density(d_S, int(rng.integers(1, d_S + 1)), 7 * i + 2).matrix
        o1, o2 = swap.reduced_output(w, r1, re), swap.reduced_output(w, r2, re)
        assert linalg.trace_distance(o1, o2) <= linalg.trace_distance(r1, r2) + 1e-10


def test_projector_weight_on_worst_case_input():
    rng = np.random.default_rng(9)
    for _ in range(50):
        d_S = int(rng.integers(2, 5))
        d_E = int(rng.integers(d_S, 13))
        re = random_density(d_E, d_E, int(rng.integers(2**31)))
        dec = build_from_spectrum(re, d_S)
        h1 = dec.block(0)
        pi1 = h1 @ h1.conj().T
        pi0 = np.kron(np.eye(d_S), pi1)
        joint = np.kron(np.eye(d_S) / d_S, re.matrix)
        e_t, _, _ = swap.thresholds(re, d_S)
        assert abs(np.trace(pi0 @ joint).real - (1 - e_t)) <= 1e-12


def test_exact_purification_iff_rank_condition():
    for d_S in (2, 3):
        for d_E in range(d_S, 8):
            for r in range(1, d_E + 1):
                re = random_density(d_E, r, 100 * d_E + r)
                exact = all(
                    purity(swap.purify(random_density(d_S, d_S, s), re, d_S)[0]) >= 1 - 1e-9 for s in range(5)
                )
                assert exact == (r <= d_E // d_S) == is_purely_initialized(re, d_S)


def test_cool_examples():
    out, rep = swap.cool(maximally_mixed(2), random_density(4, 1, 2), np.diag([0.0, 1.0]))
    assert abs(rep.final_energy) <= 1e-10

    out, rep = swap.cool(maximally_mixed(2), diagonal([0.5, 0.3, 0.15, 0.05]), np.diag([0.0, 1.0]))
    assert rep.bound == pytest.approx(0.2, abs=1e-15)
    assert rep.final_energy <= 0.2 + 1e-9
    assert rep.final_energy == pytest.approx(0.2, abs=1e-12)

    out, rep = swap.cool(diagonal([0.6, 0.4]), diagonal([0.9, 0.1]), np.diag([-1.0, 1.0]))
    assert rep.bound == pytest.approx(-0.8, abs=1e-15)
    assert rep.final_energy <= -0.8 + 1e-9
    assert rep.initial_energy == pytest.approx(-0.2, abs=1e-15)


def test_cool_targets_ground_state_of_rotated_hamiltonian():
    u = haar_unitary(3, 4)
    h = u @ np.diag([-2.0, 0.5, 1.0]) @ u.conj().T
    out, rep = swap.cool(random_density(3, 3, 1), random_density(9, 3, 1), h)
    assert abs(abs(np.vdot(rep.ground_state.amplitudes, u[:, 0])) - 1) <= 1e-10
    assert rep.final_energy == pytest.approx(-2.0, abs=1e-9)
    assert rep.e_min == pytest.approx(-2.0) and rep.e_max == pytest.approx(1.0)


def test_cool_energy_bound_random():
    rng = np.random.default_rng(21)
    for i in range(100):
        d_S = int(rng.integers(2, 4))
        d_E = int(rng.integers(d_S, 10))
        h = random_hermitian(d_S, rng)
        out, rep = swap.cool(random_density(d_S, d_S, i), random_density(d_E, d_E, 500 + i), h)
        assert rep.e_min - 1e-12 <= rep.final_energy <= rep.bound + 1e-9


def test_cool_rejects_degenerate_ground():
    with pytest.raises(UnsupportedDegeneracyError):
        swap.cool(maximally_mixed(3), diagonal([0.5, 0.5, 0, 0, 0, 0]), np.diag([0.0, 0.0, 1.0]))


def test_unitary_with_first_column():
    for seed in range(20):
        psi = random_pure(4, seed).amplitudes
        v = swap.unitary_with_first_column(psi)
        assert linalg.is_unitary(v, 1e-12)
        assert np.allclose(v[:, 0], psi, atol=1e-12)


def test_report_serialises():
    _, rep = swap.purify(maximally_mixed(2), validate(np.diag([0.4, 0.3, 0.15, 0.1, 0.05])), 2)
    d = rep.to_dict()
    assert d["split"] == {"d_S": 2, "d_E": 5, "d_F": 2, "d_R": 1}
    assert d["epsilon_zero"] == pytest.approx(0.225)
