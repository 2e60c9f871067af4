import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from photonic_qgan import qcore, tomography


def ket_density(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj()) / np.vdot(v, v).real


PLUS = ket_density([1, 1])


@pytest.mark.parametrize("rho, basis, expected", [
    (ket_density([1, 0]), "Z", 1.0),
    (np.eye(2) / 2, "X", 0.0),
    (np.eye(2) / 2, "Y", 0.0),
    (np.eye(2) / 2, "Z", 0.0),
    (PLUS, "X", 1.0),
])
def test_exact_expectations(rho, basis, expected):
    assert tomography.measure_expectation(rho, basis) == pytest.approx(expected, abs=1e-15)


def test_shot_expectation_bound():
    est = tomography.measure_expectation(PLUS, "X", shots=10**5, seed=3)
    assert abs(est - 1) <= 0.02


def test_bad_basis():
    with pytest.raises(ValueError):
        tomography.measure_expectation(PLUS, "W")


@pytest.mark.parametrize("r, rho", [
    ((0, 0, 1), np.diag([1, 0])),
    ((0, 0, 0.4), np.diag([0.7, 0.3])),
])
def test_reconstruct_examples(r, rho):
    assert np.allclose(tomography.reconstruct(r), rho, atol=1e-15)


def test_overshoot_projected_to_ball_surface():
    r = np.array([1.05, 0.0, 0.1])
    est = tomography.reconstruct(r)
    # oracle: brute-force the closest point of the unit ball on a fine sphere grid
    th, ph = np.meshgrid(np.linspace(0, np.pi, 721), np.linspace(-np.pi, np.pi, 1441))
    pts = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1).reshape(-1, 3)
    best = pts[np.argmin(np.linalg.norm(pts - r, axis=1))]
    assert qcore.fidelity(est, tomography.bloch_density(best)) >= 0.999
    qcore.check_density(est)


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_reconstruct_always_physical(r):
    qcore.check_density(tomography.reconstruct(r), atol=1e-12)


def test_projection_idempotent():
    rho = tomography.reconstruct([0.9, 0.5, 0.3])
    again = tomography.reconstruct(tomography.measure_all(rho))
    assert np.abs(again - rho).max() < 1e-12


def test_exact_roundtrip_many_states():
    for seed in range(1000):
        rho = qcore.random_density(seed, rank=1 + seed % 2)
        assert tomography.tomography_roundtrip(rho) >= 1 - 1e-10


def test_shot_roundtrip_pure_states():
    fids = [tomography.tomography_roundtrip(qcore.density(qcore.random_pure(s)), 10**4, s)
            for s in range(50)]
    assert np.median(fids) >= 0.995


def test_shot_roundtrip_maximally_mixed():
    for seed in range(10):
        assert tomography.tomography_roundtrip(np.eye(2) / 2, 10**4, seed) >= 0.99


def test_two_qubit_reconstruction(rng):
    rho = qcore.random_density(4, dim=4)
    assert np.allclose(tomography.reconstruct_two_qubit(tomography.measure_two_qubit(rho)), rho)
    noisy = tomography.reconstruct_two_qubit(tomography.measure_two_qubit(rho, 200, 1))
    qcore.check_density(noisy, atol=1e-10)


def test_json_roundtrip():
    rho = qcore.random_density(8)
    text = tomography.to_json(rho, epoch=3)
    assert json.loads(text)["epoch"] == 3
    assert np.allclose(tomography.from_json(text), rho)
