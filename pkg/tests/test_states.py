import json

import numpy as np
import pytest

from qpurify import states
from qpurify.errors import DomainError, ValidationError


def test_validate_accepts_clean_state():
    rho = states.validate(np.diag([0.5, 0.5]))
    assert np.array_equal(rho.matrix, np.diag([0.5, 0.5]))
    assert rho.correction == 0


def test_validate_clips_tiny_negative_eigenvalue():
    rho = states.validate(np.diag([1.0, -1e-12]))
    assert np.allclose(rho.matrix, np.diag([1.0, 0.0]), atol=1e-15)
    assert np.min(np.linalg.eigvalsh(rho.matrix)) >= 0
    assert 0 < rho.correction < 1e-10


@pytest.mark.parametrize(
    "m, word",
    [
        (np.diag([0.7, 0.7]), "trace"),
        (np.diag([1.2, -0.2]), "positivity"),
        (np.array([[0.5, 0.1], [0.0, 0.5]]), "hermiticity"),
    ],
)
def test_validate_names_violated_invariant(m, word):
    with pytest.raises(ValidationError, match=word):
        states.validate(m)


def test_entropy_examples():
    assert states.von_neumann_entropy(np.diag([1.0, 0.0])) == 0
    assert states.von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1, abs=1e-15)
    # binary entropy by direct formula
    h = -(0.9 * np.log2(0.9) + 0.1 * np.log2(0.1))
    assert states.von_neumann_entropy(np.diag([0.9, 0.1])) == pytest.approx(h, abs=1e-14)
    assert h == pytest.approx(0.4690, abs=5e-5)
    assert states.binary_entropy(0.9) == pytest.approx(h, abs=1e-15)


def test_entropy_bounds():
    for seed in range(1000):
        d = 2 + seed % 5
        rho = states.random_density(d, 1 + seed % d, seed)
        s = states.von_neumann_entropy(rho)
        assert -1e-12 <= s <= np.log2(d) + 1e-12


def test_purity_examples():
    assert states.purity(states.pure([1, 1j, 0])) == pytest.approx(1, abs=1e-14)
    assert states.purity(np.eye(5) / 5) == pytest.approx(0.2, abs=1e-15)
    assert states.purity(np.diag([0.9, 0.1])) == pytest.approx(0.82, abs=1e-15)


def test_purity_one_iff_top_eigenvalue_one():
    for seed in range(100):
        for rank in (1, 2):
            rho = states.random_density(4, rank, seed)
            is_pure = states.purity(rho) >= 1 - 1e-9
            assert is_pure == (rho.eigenvalues()[0] >= 1 - 1e-9)
            assert is_pure == (rank == 1)


def test_random_density_properties():
    for seed in range(200):
        d = 1 + seed % 6
        r = 1 + (seed // 6) % d
        rho = states.random_density(d, r, seed)
        lam = rho.eigenvalues()
        assert abs(lam.sum() - 1) <= 1e-10
        assert int(np.sum(lam > 1e-9)) == r
        assert np.min(lam) >= -1e-10


def test_random_density_examples():
    assert states.purity(states.random_density(4, 1, 3)) == pytest.approx(1, abs=1e-10)
    assert np.all(states.random_density(4, 4, 3).eigenvalues() > 0)
    a, b = states.random_density(5, 3, 42), states.random_density(5, 3, 42)
    assert a.matrix.tobytes() == b.matrix.tobytes()
    with pytest.raises(DomainError):
        states.random_density(3, 4, 0)
    with pytest.raises(DomainError):
        states.random_density(3, 0, 0)


def test_gibbs_state():
    h = np.diag([0.0, 1.0, 2.5])
    rho = states.gibbs(h, 2.0)
    w = np.exp(-2.0 * np.diag(h))
    assert np.allclose(np.diag(rho.matrix).real, w / w.sum(), atol=1e-14)
    assert np.allclose(states.gibbs(h, 0.0).matrix, np.eye(3) / 3, atol=1e-15)


def test_json_round_trip():
    rho = states.random_density(3, 2, 11)
    data = json.loads(states.dumps(rho))
    assert data["dim"] == 3 and len(data["entries"]) == 9
    back = states.loads(json.dumps(data))
    assert np.max(np.abs(back.matrix - rho.matrix)) <= 1e-12


def test_json_deserialisation_revalidates():
    bad = {"dim": 2, "entries": [[0.7, 0], [0, 0], [0, 0], [0.7, 0]]}
    with pytest.raises(ValidationError):
        states.DensityOperator.from_dict(bad)


def test_pure_state_norm_invariant():
    with pytest.raises(ValidationError):
        states.PureState(np.array([1.0, 1.0]))
    psi = states.PureState.normalized([3, 4j])
    assert abs(np.linalg.norm(psi.amplitudes) - 1) <= 1e-12
