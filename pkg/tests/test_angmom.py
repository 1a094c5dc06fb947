import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsymm.angmom import (
    CloningSpec,
    SpinState,
    apply_collective,
    b_vector,
    bk_coefficient,
    bk_from_cg,
    clebsch_gordan,
    closed_form_fidelities,
    dicke_state,
    expected_post_state,
    expected_reduced,
    initial_register,
    project_symmetric,
    project_symmetric_last,
    reduced_mixture,
    run_nm_protocol,
    symmetric_projector_m,
    symmetric_projector_perm,
)
from qsymm.qcore import (
    DensityMatrix,
    PureState,
    bell_state,
    canonical_phase,
    conjugate,
    haar_state,
    haar_su2,
    ket,
    orthogonal,
    partial_trace,
)
from qsymm.symmproto import run_cloning_teleunot, symmetric_projector_2q

H = Fraction(1, 2)


# -- independent CG oracle: lowering operators plus Gram-Schmidt


def _jminus(j):
    ms = [j - k for k in range(int(2 * j) + 1)]
    d = len(ms)
    op = np.zeros((d, d))
    for i, m in enumerate(ms[:-1]):
        op[i + 1, i] = math.sqrt(j * (j + 1) - m * (m - 1))
    return op, ms


def coupled_states(j1, j2):
    """``{(J, M): vector}`` in the product basis ``|j1 m1> |j2 m2>`` (m descending)."""
    l1, ms1 = _jminus(j1)
    l2, ms2 = _jminus(j2)
    lower = np.kron(l1, np.eye(len(ms2))) + np.kron(np.eye(len(ms1)), l2)
    mtot = np.array([a + b for a in ms1 for b in ms2])
    states = {}
    J = j1 + j2
    while J >= abs(j1 - j2) - 1e-9:
        # top state: the one direction of the M = J sector not used by larger J
        sector = np.diag(np.isclose(mtot, J).astype(float))
        for (J2, M2), w in states.items():
            if np.isclose(M2, J):
                sector -= np.outer(w, w)
        evals, evecs = np.linalg.eigh(sector)
        assert np.isclose(evals[-1], 1) and (len(evals) < 2 or evals[-2] < 0.5)
        v = evecs[:, -1]
        v = v / np.linalg.norm(v)
        i1 = ms1.index(j1)
        lead = i1 * len(ms2) + ms2.index(J - j1)
        if v[lead] < 0:
            v = -v
        M = J
        states[(J, M)] = v
        while M > -J + 1e-9:
            v = lower @ v
            v = v / np.linalg.norm(v)
            M -= 1
            states[(J, M)] = v
        J -= 1
    return states, ms1, ms2


def cg_oracle(j1, m1, j2, m2, J, M):
    states, ms1, ms2 = coupled_states(float(j1), float(j2))
    v = states[(float(J), float(M))]
    return v[ms1.index(float(m1)) * len(ms2) + ms2.index(float(m2))]


# -- spins and CG


def test_spin_state_validation():
    SpinState(H, -H)
    with pytest.raises(ValueError):
        SpinState(1, H)
    with pytest.raises(ValueError):
        SpinState(H, 3 * H)


def test_cg_examples():
    assert clebsch_gordan(H, H, H, -H, 1, 0) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert clebsch_gordan(H, H, H, H, 1, 1) == pytest.approx(1, abs=1e-15)
    assert clebsch_gordan(H, H, H, -H, 0, 0) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert clebsch_gordan(H, -H, H, H, 0, 0) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)


def test_cg_domain_errors():
    with pytest.raises(ValueError):
        clebsch_gordan(H, H, H, H, 2, 1)  # triangle
    with pytest.raises(ValueError):
        clebsch_gordan(H, H, H, H, 1, 0)  # m1 + m2 != M


@pytest.mark.parametrize("j1, j2", [(H, H), (1, H), (3 * H, 1), (2, 3 * H), (5 * H, 2), (3, 3 * H)])
def test_cg_matches_lowering_operator_oracle(j1, j2):
    states, ms1, ms2 = coupled_states(float(j1), float(j2))
    for (J, M), v in states.items():
        for a, m1 in enumerate(ms1):
            for b, m2 in enumerate(ms2):
                if not math.isclose(m1 + m2, M):
                    continue
                got = clebsch_gordan(j1, Fraction(m1).limit_denominator(2), j2,
                                     Fraction(m2).limit_denominator(2),
                                     Fraction(J).limit_denominator(2), Fraction(M).limit_denominator(2))
                assert got == pytest.approx(v[a * len(ms2) + b], abs=1e-12)


@pytest.mark.parametrize("j1, j2", [(1, H), (2, 1), (5 * H, 3 * H)])
def test_cg_orthonormality(j1, j2):
    Js = [abs(j1 - j2) + k for k in range(int(j1 + j2 - abs(j1 - j2)) + 1)]
    m1s = [j1 - k for k in range(int(2 * j1) + 1)]
    m2s = [j2 - k for k in range(int(2 * j2) + 1)]
    for J, Jp in itertools.product(Js, Js):
        for M in [J - k for k in range(int(2 * J) + 1)]:
            if abs(M) > Jp:
                continue
            s = sum(
                clebsch_gordan(j1, m1, j2, M - m1, J, M) * clebsch_gordan(j1, m1, j2, M - m1, Jp, M)
                for m1 in m1s
                if (M - m1) in m2s
            )
            assert s == pytest.approx(1.0 if J == Jp else 0.0, abs=1e-12)


# -- b_k


def test_bk_examples():
    s12 = CloningSpec(1, 2)
    np.testing.assert_allclose(b_vector(s12), [math.sqrt(2 / 3), -math.sqrt(1 / 3)], atol=1e-15)
    # b_1 spread over the two orderings of the flipped pair gives sqrt(1/6) each
    assert b_vector(s12)[1] / math.sqrt(2) == pytest.approx(-math.sqrt(1 / 6))
    np.testing.assert_allclose(b_vector(CloningSpec(2, 3)), [math.sqrt(3) / 2, -0.5], atol=1e-15)


def test_bk_normalized_and_matches_cg():
    for M in range(2, 11):
        for N in range(1, M):
            spec = CloningSpec(N, M)
            assert np.sum(b_vector(spec) ** 2) == pytest.approx(1, abs=1e-12)
            for k in range(M - N + 1):
                assert bk_coefficient(spec, k) == pytest.approx(bk_from_cg(spec, k), abs=1e-12)


def test_bk_oracle_against_lowering_operators():
    for N, M in [(1, 2), (1, 3), (2, 4), (3, 5)]:
        spec = CloningSpec(N, M)
        for k in range(M - N + 1):
            ref = cg_oracle(M / 2, M / 2 - k, (M - N) / 2, -(M - N) / 2 + k, N / 2, N / 2)
            assert bk_coefficient(spec, k) == pytest.approx(ref, abs=1e-12)


def test_bk_range_and_spec_validation():
    with pytest.raises(ValueError):
        bk_coefficient(CloningSpec(1, 2), 2)
    with pytest.raises(ValueError):
        CloningSpec(3, 2)
    with pytest.raises(ValueError):
        CloningSpec(0, 2)


# -- closed forms


def test_closed_form_sums_agree():
    for M in range(2, 9):
        for N in range(1, M):
            cf = closed_form_fidelities(CloningSpec(N, M))
            assert cf.clone_sum == pytest.approx(cf.clone, abs=1e-12)
            assert cf.unot_sum == pytest.approx(cf.unot, abs=1e-12)


def test_closed_form_examples():
    cf = closed_form_fidelities(CloningSpec(3, 5))
    assert cf.clone == pytest.approx(0.92)
    assert cf.unot == pytest.approx(4 / 5)
    assert closed_form_fidelities(CloningSpec(2, 2)).clone == 1
    assert math.isnan(closed_form_fidelities(CloningSpec(2, 2)).unot)


def test_closed_form_large_M_tends_to_measure_and_prepare():
    cf = closed_form_fidelities(CloningSpec(1, 64))
    assert cf.clone_sum == pytest.approx(2 / 3 + 1 / (3 * 64), abs=1e-12)
    assert cf.clone_sum - 2 / 3 < 0.006


# -- Dicke states and projectors


def test_dicke_examples():
    np.testing.assert_allclose(
        dicke_state(2, 1, ket("0")).amplitudes, np.array([0, 1, 1, 0]) / math.sqrt(2), atol=1e-15
    )
    with pytest.raises(ValueError):
        dicke_state(2, 3, ket("0"))


def test_dicke_reduction(rng):
    phi = haar_state(rng)
    s = dicke_state(3, 2, phi, ("a", "b", "c"))
    for lab in "abc":
        rho = partial_trace(s, [lab]).matrix
        np.testing.assert_allclose(rho, reduced_mixture(2, 1, phi), atol=1e-12)


def test_dicke_permutation_invariant(rng):
    v = dicke_state(3, 1, haar_state(rng)).amplitudes.reshape(2, 2, 2)
    for perm in itertools.permutations(range(3)):
        np.testing.assert_allclose(v.transpose(perm), v, atol=1e-15)


def test_projector_M2_is_two_qubit_projector():
    np.testing.assert_allclose(symmetric_projector_m(2), symmetric_projector_2q(), atol=1e-15)


@pytest.mark.parametrize("M", range(1, 7))
def test_projector_two_constructions(M):
    a, b = symmetric_projector_m(M), symmetric_projector_perm(M)
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(a @ a, a, atol=1e-12)
    assert round(np.trace(a)) == M + 1


def test_projector_limits():
    assert np.linalg.matrix_rank(symmetric_projector_m(3)) == 4
    with pytest.raises(ValueError):
        symmetric_projector_m(11)


def test_factored_projection_equals_dense(rng):
    v = rng.normal(size=32) + 1j * rng.normal(size=32)
    dense = np.kron(symmetric_projector_m(3), np.eye(4)) @ v
    np.testing.assert_allclose(project_symmetric(v, 3, 5), dense, atol=1e-12)
    dense = np.kron(np.eye(8), symmetric_projector_m(2)) @ v
    np.testing.assert_allclose(project_symmetric_last(v, 2, 5), dense, atol=1e-12)


# -- brute force


def test_nm_reduces_to_one_to_two(rng):
    phi = haar_state(rng)
    out = run_nm_protocol(CloningSpec(1, 2), phi)
    ref = run_cloning_teleunot(phi)
    assert out.success_probability == pytest.approx(3 / 4, abs=1e-12)
    assert out.clone_fidelity == pytest.approx(5 / 6, abs=1e-12)
    assert out.unot_fidelity == pytest.approx(2 / 3, abs=1e-12)
    np.testing.assert_allclose(out.post_state.amplitudes, ref.post_state.amplitudes, atol=1e-12)


@pytest.mark.parametrize("N, M, p, fc, fu", [(2, 3, 2 / 3, 11 / 12, 3 / 4), (1, 3, 1 / 2, 7 / 9, 2 / 3)])
def test_nm_examples(rng, N, M, p, fc, fu):
    out = run_nm_protocol(CloningSpec(N, M), haar_state(rng))
    assert out.success_probability == pytest.approx(p, abs=1e-12)
    assert out.clone_fidelity == pytest.approx(fc, abs=1e-12)
    assert out.unot_fidelity == pytest.approx(fu, abs=1e-12)
    assert np.sum(out.b**2) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("N, M", [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5), (1, 4)])
def test_nm_reduced_states_are_bk_mixtures(rng, N, M):
    spec, phi = CloningSpec(N, M), haar_state(rng)
    out = run_nm_protocol(spec, phi)
    clone, anti = expected_reduced(spec, phi)
    np.testing.assert_allclose(out.reduced_clone.matrix, clone, atol=1e-12)
    np.testing.assert_allclose(out.reduced_anticlone.matrix, anti, atol=1e-12)
    np.testing.assert_allclose(out.post_state.amplitudes, expected_post_state(spec, phi), atol=1e-12)


@pytest.mark.parametrize("N, M", [(1, 3), (2, 4), (1, 4)])
def test_anticlones_are_symmetric(rng, N, M):
    spec = CloningSpec(N, M)
    out = run_nm_protocol(spec, haar_state(rng))
    n = N + 2 * spec.pairs
    v = out.post_state.amplitudes
    np.testing.assert_allclose(project_symmetric_last(v, spec.pairs, n), v, atol=1e-12)


@pytest.mark.parametrize("N, M", [(1, 2), (1, 3), (2, 3)])
def test_covariance(rng, N, M):
    spec = CloningSpec(N, M)
    n = N + 2 * spec.pairs
    phi = haar_state(rng)
    base = run_nm_protocol(spec, phi).post_state.amplitudes
    for _ in range(10):
        u = haar_su2(rng)
        rotated = run_nm_protocol(spec, PureState(u @ phi.amplitudes)).post_state.amplitudes
        np.testing.assert_allclose(
            canonical_phase(apply_collective(u, base, n)), rotated, atol=1e-12
        )


def test_triplet_program_transposes(rng):
    for N, M in [(1, 2), (1, 3), (2, 3)]:
        phi = haar_state(rng)
        out = run_nm_protocol(CloningSpec(N, M), phi, "triplet")
        assert out.unot_fidelity == pytest.approx((N + 1) / (N + 2), abs=1e-12)
        assert out.clone_fidelity == pytest.approx((N + 1 + N / M) / (N + 2), abs=1e-12)
        target = conjugate(phi).amplitudes
        flip = orthogonal(conjugate(phi)).amplitudes
        p = out.unot_fidelity
        expected = p * np.outer(target, target.conj()) + (1 - p) * np.outer(flip, flip.conj())
        np.testing.assert_allclose(out.reduced_anticlone.matrix, expected, atol=1e-12)


def test_initial_register_layout():
    spec = CloningSpec(1, 2)
    v = initial_register(spec, ket("0"))
    # [S, A, B] = |0> (|01> - |10>)/sqrt 2
    np.testing.assert_allclose(v, np.kron(ket("0").amplitudes, bell_state("psi-").amplitudes))
    with pytest.raises(ValueError):
        initial_register(spec, ket("0"), "bogus")


def test_nm_errors():
    with pytest.raises(ValueError, match="nothing"):
        run_nm_protocol(CloningSpec(2, 2), ket("0"))
    with pytest.raises(ValueError, match="exceeds"):
        run_nm_protocol(CloningSpec(1, 8), ket("0"))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_brute_force_matches_closed_forms(N, d, theta, ph):
    M = N + d
    if 2 * M - N > 12:
        return
    spec = CloningSpec(N, M)
    phi = PureState([math.cos(theta / 2), np.exp(1j * ph) * math.sin(theta / 2)])
    out = run_nm_protocol(spec, phi)
    cf = closed_form_fidelities(spec)
    assert abs(out.success_probability - cf.success_probability) < 1e-10
    assert abs(out.clone_fidelity - cf.clone) < 1e-10
    assert abs(out.unot_fidelity - cf.unot) < 1e-10
    assert isinstance(out.reduced_clone, DensityMatrix)
