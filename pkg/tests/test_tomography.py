import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsymm.channels import (
    KrausChannel,
    conjugated,
    depolarizing_channel,
    identity_channel,
    kraus_to_ptm,
    transpose_channel,
    unot_channel,
)
from qsymm.qcore import PureState, bell_state, from_bloch, haar_unitary, ket, state_fidelity
from qsymm.tomography import (
    CorrelationMatrix,
    ReconstructionError,
    TomographyRun,
    bloch_fidelity,
    correlation_matrix,
    eaqpt_reconstruct,
    map_fidelity,
    run_eaqpt,
    sphere_samples,
)

M_TR = np.diag([1, 1 / 3, -1 / 3, 1 / 3])


def singlet():
    return bell_state("psi-").density()


# -- correlation matrices


def test_correlations_of_singlet():
    np.testing.assert_allclose(correlation_matrix(singlet()).c, np.diag([1, -1, -1, -1]), atol=1e-15)


def test_correlations_of_product():
    c = correlation_matrix(ket("00")).c
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[0, 3] = expected[3, 0] = expected[3, 3] = 1
    np.testing.assert_allclose(c, expected, atol=1e-15)


def test_sampled_correlations_within_binomial_bound():
    shots = 10_000
    exact = correlation_matrix(singlet()).c
    for seed in range(5):
        c = correlation_matrix(singlet(), shots, seed).c
        # binomial sd of a +/-1 mean is at most 1/sqrt(shots); fixed seeds
        assert np.max(np.abs(c - exact)) <= 3 / math.sqrt(shots)
        assert c[0, 0] == 1


def test_correlation_matrix_validation():
    with pytest.raises(ValueError):
        CorrelationMatrix(np.eye(3))
    with pytest.raises(ValueError):
        CorrelationMatrix(2 * np.eye(4))
    with pytest.raises(ValueError):
        correlation_matrix(ket("0"))
    with pytest.raises(ValueError):
        correlation_matrix(singlet(), shots=0)


# -- reconstruction


@pytest.mark.parametrize(
    "ch, m",
    [
        (transpose_channel(), M_TR),
        (identity_channel(), np.eye(4)),
        (depolarizing_channel(), np.diag([1.0, 0, 0, 0])),
    ],
)
def test_exact_reconstruction(ch, m):
    res = run_eaqpt(TomographyRun(singlet(), ch, target=ch, fidelity_samples=2000))
    np.testing.assert_allclose(res.ptm.m, m, atol=1e-9)
    assert res.fidelity.value == pytest.approx(1, abs=1e-9)
    assert res.condition_number == pytest.approx(1)


def test_hand_derived_correlations():
    res = run_eaqpt(TomographyRun(singlet(), transpose_channel()))
    np.testing.assert_allclose(res.c_prime.c, np.diag([1, -1 / 3, 1 / 3, -1 / 3]), atol=1e-15)
    assert res.fidelity is None


def test_reconstruction_is_probe_independent(rng):
    probe = PureState([math.cos(0.4), 0, 0, math.sin(0.4)], ("A", "B")).density()
    for _ in range(10):
        ch = conjugated(unot_channel(), haar_unitary(rng)).then(conjugated(transpose_channel(), haar_unitary(rng)))
        truth = kraus_to_ptm(ch).m
        a = run_eaqpt(TomographyRun(singlet(), ch)).ptm.m
        b = run_eaqpt(TomographyRun(probe, ch)).ptm.m
        np.testing.assert_allclose(a, truth, atol=1e-9)
        np.testing.assert_allclose(b, truth, atol=1e-9)


def test_non_unital_channel_reconstructed():
    g = 0.3  # amplitude damping
    k0 = np.array([[1, 0], [0, math.sqrt(1 - g)]])
    k1 = np.array([[0, math.sqrt(g)], [0, 0]])
    ch = KrausChannel(((1.0, k0), (1.0, k1)))
    res = run_eaqpt(TomographyRun(singlet(), ch))
    np.testing.assert_allclose(res.ptm.m, kraus_to_ptm(ch).m, atol=1e-9)
    assert res.ptm.shift[2] == pytest.approx(g)


def test_product_probe_is_singular():
    with pytest.raises(ReconstructionError, match="singular"):
        run_eaqpt(TomographyRun(ket("00", ("A", "B")).density(), transpose_channel()))
    with pytest.raises(ReconstructionError):
        eaqpt_reconstruct(correlation_matrix(ket("00")), correlation_matrix(ket("00")))


def test_shot_noise_bound():
    shots = 10_000
    ok = 0
    for seed in range(20):
        res = run_eaqpt(TomographyRun(singlet(), transpose_channel(), shots=shots, seed=seed))
        ok += np.max(np.abs(res.ptm.m - M_TR)) < 5 / math.sqrt(shots)
    assert ok >= 19


def test_run_validation():
    with pytest.raises(ValueError):
        TomographyRun(singlet(), transpose_channel(), shots=0)
    with pytest.raises(ValueError):
        TomographyRun(ket("0").density(), transpose_channel())


def test_serialization():
    res = run_eaqpt(TomographyRun(singlet(), transpose_channel(), target=transpose_channel(), fidelity_samples=100))
    d = json.loads(res.to_json())
    np.testing.assert_allclose(d["ptm"], M_TR, atol=1e-12)
    assert set(d) == {"ptm", "condition_number", "fidelity", "fidelity_stderr"}
    lines = res.to_csv().splitlines()
    assert lines[0] == "row,c0,c1,c2,c3" and lines[-1].startswith("fidelity")


def test_sampled_pipeline_deterministic():
    run = TomographyRun(singlet(), transpose_channel(), shots=1000, seed=5, target=transpose_channel(), fidelity_samples=500)
    assert run_eaqpt(run).to_json() == run_eaqpt(run).to_json()


# -- map fidelity


def test_map_fidelity_identical_maps():
    f = map_fidelity(transpose_channel(), transpose_channel(), 5000, seed=1)
    assert f.value == pytest.approx(1, abs=1e-12)


def test_map_fidelity_identity_vs_transpose():
    f = map_fidelity(identity_channel(), kraus_to_ptm(transpose_channel()), 100_000, seed=2)
    assert abs(f.value - 5 / 9) < 3 * f.stderr


def test_map_fidelity_analytic_sphere_average():
    """Quadrature oracle: average of (1 + (x^2 - y^2 + z^2)/3)/2 over the sphere."""
    n = 400
    th = (np.arange(n) + 0.5) * np.pi / n
    ph = (np.arange(2 * n) + 0.5) * np.pi / n
    T, P = np.meshgrid(th, ph, indexing="ij")
    x, y, z = np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)
    f = (1 + (x**2 - y**2 + z**2) / 3) / 2
    avg = np.sum(f * np.sin(T)) * (np.pi / n) ** 2 / (4 * np.pi)
    assert avg == pytest.approx(5 / 9, abs=1e-4)


def test_map_fidelity_validation():
    with pytest.raises(ValueError):
        map_fidelity(identity_channel(), identity_channel(), samples=1)


def test_sphere_samples_uniform():
    v = sphere_samples(50_000, seed=3)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1)
    np.testing.assert_allclose(v.mean(axis=0), 0, atol=0.02)
    np.testing.assert_allclose((v**2).mean(axis=0), 1 / 3, atol=0.01)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_bloch_fidelity_matches_uhlmann(xs):
    r, s = np.array(xs[:3]), np.array(xs[3:])
    r, s = r / max(1, np.linalg.norm(r)), s / max(1, np.linalg.norm(s))
    ref = state_fidelity(from_bloch(r), from_bloch(s))
    assert bloch_fidelity(r, s)[0] == pytest.approx(ref, abs=1e-7)


def test_bloch_fidelity_clips_outside_ball():
    assert bloch_fidelity(np.array([0, 0, 1.001]), np.array([0, 0, 1.0]))[0] == pytest.approx(1.0005)
