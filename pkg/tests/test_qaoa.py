import io

import numpy as np
import pytest

from qtabu.qaoa import (
    PenaltySpec,
    QaoaParams,
    QaoaState,
    TooManyQubits,
    apply_layer,
    diagonal_energies,
    dump_state_csv,
    evolve,
    exact_expectation,
    improvement_probability,
    index_to_bits,
    penalty_diagonal,
    sample,
    sample_indices,
    shot_expectation,
)
from qtabu.qubo import Qubo, clamp

from conftest import brute_evaluate, random_qubo


def dense_qaoa(energies, gammas, betas, penalty=None):
    """Reference built from explicit 2^k x 2^k Kronecker-product matrices."""
    k = int(np.log2(len(energies)))
    diag = energies + (0 if penalty is None else penalty)
    psi = np.full(2**k, 2 ** (-k / 2), dtype=complex)
    for g, b in zip(gammas, betas):
        rx = np.array([[np.cos(b), -1j * np.sin(b)], [-1j * np.sin(b), np.cos(b)]])
        mixer = np.eye(1)
        for _ in range(k):
            mixer = np.kron(mixer, rx)
        psi = mixer @ (np.diag(np.exp(-1j * g * diag)) @ psi)
    return psi


def random_state(rng, k):
    amp = rng.normal(size=2**k) + 1j * rng.normal(size=2**k)
    return amp / np.linalg.norm(amp)


class TestDiagonalEnergies:
    def test_single_variable(self):
        np.testing.assert_array_equal(diagonal_energies(Qubo(np.array([[4.5]]))), [0, 4.5])

    def test_zero_with_offset(self):
        np.testing.assert_array_equal(diagonal_energies(Qubo(np.zeros((3, 3)), 2.0)), np.full(8, 2.0))

    @pytest.mark.parametrize("k", [1, 4, 7])
    def test_matches_direct_evaluation(self, rng, k):
        q = random_qubo(rng, k, 0.8, integer=True, offset=3)
        e = diagonal_energies(q)
        for b in range(2**k):
            assert e[b] == brute_evaluate(q, index_to_bits(b, k))

    def test_subproblem_input(self, rng):
        q = random_qubo(rng, 8)
        sub = clamp(q, rng.integers(0, 2, 8), [1, 3, 4, 6])
        e = diagonal_energies(sub)
        for b in range(16):
            assert e[b] == pytest.approx(brute_evaluate(q, sub.embed(index_to_bits(b, 4))), abs=1e-9)

    def test_guard(self):
        with pytest.raises(TooManyQubits):
            diagonal_energies(Qubo.zeros(25))


class TestPenalty:
    def test_zero_scale(self, rng):
        spec = PenaltySpec(rng.normal(size=4), rng.integers(0, 2, 4), 0.0)
        assert not np.any(penalty_diagonal(spec))

    def test_single_spin(self):
        d = 3.0
        np.testing.assert_array_equal(penalty_diagonal(PenaltySpec([d], [0], 1.0)), [-d / 2, d / 2])
        np.testing.assert_array_equal(penalty_diagonal(PenaltySpec([d], [1], 1.0)), [d / 2, -d / 2])

    @pytest.mark.parametrize("k", [1, 3, 6])
    def test_difference_identity(self, rng, k):
        w = rng.normal(size=k)
        ref = rng.integers(0, 2, k)
        A = 1.7
        pen = penalty_diagonal(PenaltySpec(w, ref, A))
        b_ts = sum(int(r) << j for j, r in enumerate(ref))
        for b in range(2**k):
            bits = index_to_bits(b, k)
            assert pen[b] - pen[b_ts] == pytest.approx(A * w[bits != ref].sum(), abs=1e-12)

    def test_uniform_weights_hamming(self):
        k, A = 5, 2.0
        ref = np.array([1, 0, 0, 1, 1])
        pen = penalty_diagonal(PenaltySpec(np.ones(k), ref, A))
        b_ts = 1 + 8 + 16
        for b in range(2**k):
            assert pen[b] - pen[b_ts] == A * np.count_nonzero(index_to_bits(b, k) != ref)


class TestEvolve:
    def test_identity_circuit(self, rng):
        q = random_qubo(rng, 5)
        st = evolve(q, QaoaParams([0, 0, 0], [0, 0, 0]))
        np.testing.assert_allclose(st.probabilities, 1 / 32, rtol=0, atol=1e-15)

    @pytest.mark.parametrize("gamma, beta, c", [(0.3, 0.7, 2.0), (1.9, 2.8, -3.0), (0.0, 0.4, 5.0), (4.0, 0.1, 0.5)])
    def test_single_qubit_closed_form(self, gamma, beta, c):
        st = evolve(Qubo(np.array([[c]])), QaoaParams([gamma], [beta]))
        z = st.probabilities[0] - st.probabilities[1]
        # 2x2 oracle: mixer exp(-i beta X) after the phase separator
        rx = np.array([[np.cos(beta), -1j * np.sin(beta)], [-1j * np.sin(beta), np.cos(beta)]])
        U = rx @ np.diag([1, np.exp(-1j * gamma * c)])
        psi = U @ (np.ones(2) / np.sqrt(2))
        assert z == pytest.approx(abs(psi[0]) ** 2 - abs(psi[1]) ** 2, abs=1e-10)
        assert z == pytest.approx(-np.sin(2 * beta) * np.sin(gamma * c), abs=1e-10)

    @pytest.mark.parametrize("k, p", [(2, 1), (3, 2), (4, 3)])
    def test_matches_dense_reference(self, rng, k, p):
        q = random_qubo(rng, k, 1.0)
        g, b = rng.uniform(0, 2 * np.pi, p), rng.uniform(0, np.pi, p)
        spec = PenaltySpec(rng.normal(size=k), rng.integers(0, 2, k), 0.8)
        st = evolve(q, QaoaParams(g, b, penalty=spec))
        ref = dense_qaoa(diagonal_energies(q), g, b, penalty_diagonal(spec))
        # global phase is free: compare up to a phase
        phase = np.vdot(ref, st.amplitudes)
        assert abs(phase) == pytest.approx(1, abs=1e-10)
        np.testing.assert_allclose(st.amplitudes, ref * phase / abs(phase), atol=1e-10)

    def test_normalization(self, rng):
        for _ in range(50):
            k, p = rng.integers(1, 9), rng.integers(1, 5)
            st = evolve(random_qubo(rng, k), QaoaParams(rng.uniform(-7, 7, p), rng.uniform(-4, 4, p)))
            assert abs(1 - st.probabilities.sum()) < 1e-10

    def test_zero_penalty_is_identity(self, rng):
        q = random_qubo(rng, 5)
        spec = PenaltySpec(rng.normal(size=5), rng.integers(0, 2, 5), 0.0)
        a = evolve(q, QaoaParams([0.4, 1.1], [0.2, 0.9]))
        b = evolve(q, QaoaParams([0.4, 1.1], [0.2, 0.9], penalty=spec))
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, rtol=0, atol=1e-12)

    def test_layers_compose(self, rng):
        q = random_qubo(rng, 6)
        g, b = rng.normal(size=3), rng.normal(size=3)
        full = evolve(q, QaoaParams(g, b))
        st = QaoaState.uniform(diagonal_energies(q))
        for gi, bi in zip(g, b):
            st = apply_layer(st, gi, bi)
        np.testing.assert_allclose(full.amplitudes, st.amplitudes, atol=1e-13)

    def test_diagonal_layers_commute(self, rng):
        q = random_qubo(rng, 5)
        e = diagonal_energies(q)
        pen = penalty_diagonal(PenaltySpec(rng.normal(size=5), rng.integers(0, 2, 5), 1.3))
        amp = random_state(rng, 5)
        g = 0.77
        one = (amp * np.exp(-1j * g * e)) * np.exp(-1j * g * pen)
        two = (amp * np.exp(-1j * g * pen)) * np.exp(-1j * g * e)
        np.testing.assert_allclose(one, two, rtol=0, atol=1e-12)


class TestExpectationAndSampling:
    def test_uniform_mean(self, rng):
        q = random_qubo(rng, 4)
        st = evolve(q, QaoaParams([0], [0]))
        assert exact_expectation(st) == pytest.approx(diagonal_energies(q).mean(), abs=1e-12)

    def test_basis_state(self):
        e = np.array([3.0, -1.0, 2.0, 7.0])
        st = QaoaState.basis(e, 2)
        assert exact_expectation(st) == 2.0
        rng = np.random.default_rng(0)
        assert all(en == 2.0 and list(bits) == [0, 1] for bits, en in sample(st, 50, rng))
        assert shot_expectation(st, 17, rng) == 2.0

    def test_weighted_sum_oracle(self, rng):
        e = rng.normal(size=8)
        amp = random_state(rng, 3)
        expected = sum(abs(a) ** 2 * x for a, x in zip(amp, e))
        assert exact_expectation(QaoaState(amp, e)) == pytest.approx(expected, abs=1e-10)

    def test_uniform_frequencies(self):
        st = QaoaState.uniform(np.arange(4.0))
        idx = sample_indices(st, 100_000, np.random.default_rng(1))
        counts = np.bincount(idx, minlength=4)
        sigma = np.sqrt(100_000 * 0.25 * 0.75)
        assert np.all(np.abs(counts - 25_000) < 5 * sigma)

    def test_shot_mean_clt(self, rng):
        q = random_qubo(rng, 5)
        st = evolve(q, QaoaParams([0.6], [0.3]))
        mu = exact_expectation(st)
        var = st.probabilities @ (st.energies - mu) ** 2
        m = 100_000
        est = shot_expectation(st, m, np.random.default_rng(3))
        assert abs(est - mu) < 5 * np.sqrt(var / m)

    def test_seed_reproducible(self, rng):
        st = evolve(random_qubo(rng, 4), QaoaParams([1.0], [0.5]))
        assert shot_expectation(st, 100, np.random.default_rng(5)) == shot_expectation(st, 100, np.random.default_rng(5))

    def test_improvement_probability(self):
        e = np.arange(16.0)
        st = QaoaState.uniform(e)
        assert improvement_probability(st, -1) == 0
        assert improvement_probability(st, 100) == pytest.approx(1)
        assert improvement_probability(st, 8) == pytest.approx(8 / 16)

    def test_dump_csv(self):
        st = QaoaState.uniform(np.array([0.0, 1.0]))
        buf = io.StringIO()
        dump_state_csv(st, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "index,re,im,energy"
        assert len(lines) == 3
