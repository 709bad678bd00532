import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from qfeedback.cloning import (
    clone,
    monte_carlo_copy_fidelity,
    no_cloning_witness,
    optimal_fidelity,
    permutation_operator,
    shrink_factor,
    split_copies,
    symmetric_projector,
)
from qfeedback.core import PureState, RngStream, bloch_vector, fidelity, haar_random_state
from strategies import kets

R2 = 1 / np.sqrt(2)


def dicke_projector(n):
    """Independent route to the symmetric projector: sum of Dicke projectors."""
    d = 2**n
    out = np.zeros((d, d))
    for w in range(n + 1):
        v = np.zeros(d)
        for ones in itertools.combinations(range(n), w):
            v[sum(1 << (n - 1 - q) for q in ones)] = 1
        v /= np.linalg.norm(v)
        out += np.outer(v, v)
    return out


def dicke_cloner_output(psi, k):
    """Optimal cloner output built without the permutation sum.

    For input |up>, the padded input projected onto the symmetric subspace is
    diagonal in the Dicke basis with weight (k - w)/k on the w-down state.
    A general input follows by rotating every qubit (covariance).
    """
    d = 2**k
    rho = np.zeros((d, d))
    for w in range(k + 1):
        v = np.zeros(d)
        for ones in itertools.combinations(range(k), w):
            v[sum(1 << (k - 1 - q) for q in ones)] = 1
        v /= np.linalg.norm(v)
        rho += (k - w) / k * np.outer(v, v)
    rho /= np.trace(rho)
    a, b = psi.amplitudes
    u = np.array([[a, -np.conj(b)], [b, np.conj(a)]])
    uk = u
    for _ in range(k - 1):
        uk = np.kron(uk, u)
    return uk @ rho @ uk.conj().T


class TestSymmetricProjector:
    def test_single_qubit(self):
        s = symmetric_projector(1)
        np.testing.assert_allclose(s.matrix, np.eye(2))
        assert np.trace(s.matrix) == pytest.approx(2)

    def test_two_qubits(self):
        swap = permutation_operator((1, 0), 2)
        np.testing.assert_allclose(symmetric_projector(2).matrix, (np.eye(4) + swap) / 2)
        assert np.trace(symmetric_projector(2).matrix) == pytest.approx(3)

    def test_three_qubits_trace(self):
        perms = [permutation_operator(p, 3) for p in itertools.permutations(range(3))]
        avg = sum(perms) / 6
        assert np.trace(avg) == pytest.approx(4)
        np.testing.assert_allclose(symmetric_projector(3).matrix, avg, atol=1e-12)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_idempotent_trace_and_dicke_agreement(self, n):
        s = symmetric_projector(n).matrix
        np.testing.assert_allclose(s @ s, s, atol=1e-9)
        assert np.trace(s) == pytest.approx(n + 1, abs=1e-9)
        np.testing.assert_allclose(s, dicke_projector(n), atol=1e-9)

    @pytest.mark.parametrize("n", [3, 4])
    def test_commutes_with_permutations(self, n):
        s = symmetric_projector(n).matrix
        for p in itertools.permutations(range(n)):
            op = permutation_operator(p, n)
            np.testing.assert_allclose(op @ s, s @ op, atol=1e-9)

    @pytest.mark.parametrize("n", [0, 9, 2.0, True])
    def test_out_of_range(self, n):
        with pytest.raises(ValueError):
            symmetric_projector(n)


class TestClone:
    @pytest.mark.parametrize("k", range(2, 9))
    def test_matches_dicke_construction(self, k, rng):
        psi = haar_random_state(1, rng)
        batch = clone(psi, k)
        np.testing.assert_allclose(batch.joint_state.matrix, dicke_cloner_output(psi, k),
                                   atol=1e-9)

    @pytest.mark.parametrize("k", range(2, 9))
    def test_copy_fidelity(self, k, rng):
        psi = haar_random_state(1, rng)
        np.testing.assert_allclose(clone(psi, k).copy_fidelities(), optimal_fidelity(k),
                                   atol=1e-9)

    def test_closed_form_values(self):
        assert optimal_fidelity(2) == pytest.approx(5 / 6)
        assert optimal_fidelity(3) == pytest.approx(7 / 9)
        # Dicke-weight sum: sum_w p_w (k-w)/k with p_w = 2(k-w)/(k(k+1))
        for k in range(2, 9):
            f = sum(2 * (k - w) / (k * (k + 1)) * (k - w) / k for w in range(k + 1))
            assert f == pytest.approx(optimal_fidelity(k), abs=1e-12)

    def test_shrink_for_up(self):
        r = bloch_vector(clone(PureState([1, 0]), 2).copies[0]).as_array()
        np.testing.assert_allclose(r, [0, 0, 2 / 3], atol=1e-9)

    @pytest.mark.parametrize("k", range(2, 9))
    def test_batch_invariants(self, k, rng):
        batch = clone(haar_random_state(1, rng), k)
        for c in batch.copies[1:]:
            np.testing.assert_allclose(c.matrix, batch.copies[0].matrix, atol=1e-9)
        s = symmetric_projector(k).matrix
        rho = batch.joint_state.matrix
        np.testing.assert_allclose(s @ rho @ s, rho, atol=1e-9)

    def test_joint_state_permutation_invariant(self, rng):
        rho = clone(haar_random_state(1, rng), 4).joint_state.matrix
        for p in itertools.permutations(range(4)):
            op = permutation_operator(p, 4)
            np.testing.assert_allclose(op @ rho @ op.T, rho, atol=1e-9)

    def test_universality(self, random_qubits):
        for k in (2, 3):
            f = [clone(psi, k).copy_fidelities()[0] for psi in random_qubits]
            assert np.ptp(f) < 1e-9

    @settings(max_examples=30, deadline=None)
    @given(kets(1))
    def test_direction_preserved(self, psi):
        for k in (2, 3, 5):
            r_in = bloch_vector(psi).as_array()
            r_out = bloch_vector(clone(psi, k).copies[-1]).as_array()
            np.testing.assert_allclose(r_out, shrink_factor(k) * r_in, atol=1e-9)

    def test_imperfect(self, random_qubits):
        for k in range(2, 9):
            assert clone(random_qubits[0], k).copy_fidelities().max() < 1

    @pytest.mark.parametrize("k", [1, 9])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            clone(PureState([1, 0]), k)


class TestMonteCarlo:
    def test_two_copies(self):
        f = monte_carlo_copy_fidelity(2, 10000, RngStream(5))
        assert abs(f - 5 / 6) < 1e-3

    def test_three_copies(self):
        f = monte_carlo_copy_fidelity(3, 2000, RngStream(6))
        assert abs(f - 7 / 9) < 1e-3

    def test_deterministic(self):
        assert monte_carlo_copy_fidelity(2, 50, RngStream(1)) == monte_carlo_copy_fidelity(
            2, 50, RngStream(1))


class TestSplit:
    def test_index_convention(self):
        split = split_copies(clone(PureState([1, 0]), 4), 2, 1)
        assert split.recognizer == (0, 1) and split.feedback == (2,) and split.output == 3

    def test_minimal(self):
        split = split_copies(clone(PureState([1, 0]), 3), 1, 1)
        assert (split.recognizer, split.feedback, split.output) == ((0,), (1,), 2)
        assert len(split.recognizer_copies()) == 1
        assert split.output_copy() is split.batch.copies[2]

    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            split_copies(clone(PureState([1, 0]), 4), 3, 1)

    def test_zero_counts(self):
        with pytest.raises(ValueError):
            split_copies(clone(PureState([1, 0]), 3), 0, 2)


class TestNoCloningWitness:
    def test_identical(self):
        psi = PureState([0.6, 0.8j])
        assert no_cloning_witness(psi, psi) == pytest.approx(0, abs=1e-12)

    def test_orthogonal(self):
        assert no_cloning_witness(PureState([1, 0]), PureState([0, 1])) == 0

    def test_up_and_plus(self):
        w = no_cloning_witness(PureState([1, 0]), PureState([R2, R2]))
        assert w == pytest.approx(abs(R2 - 0.5), abs=1e-12)
        assert w == pytest.approx(0.207107, abs=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(kets(1), kets(1))
    def test_positive_for_nonorthogonal_distinct(self, psi, phi):
        s = abs(np.vdot(psi.amplitudes, phi.amplitudes))
        w = no_cloning_witness(psi, phi)
        assert w >= 0
        if 1e-3 < s < 1 - 1e-3:
            assert w > 0

