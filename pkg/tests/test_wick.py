import itertools

import numpy as np
import pytest

from conftest import bell_pair_covariance, random_operator_string
from ngfermi import oracle
from ngfermi.errors import ParityError, SingularContractionError, ValidationError
from ngfermi.gaussian import (
    covariance_from_xi,
    random_generator,
    random_pure_covariance,
    upsilon,
)
from ngfermi.linalg import BlockContractionKind, block_contract
from ngfermi.wick import (
    OperatorString,
    PairKind,
    PhaseVector,
    a_coeff,
    contract,
    enumerate_pairings,
    expectation,
    expectation_from,
    g_matrix,
    gamma_F,
    l_matrix,
    pair_expectation,
    q_matrix,
    wrap_angles,
)


def permutation_parity(seq):
    seen = [False] * len(seq)
    parity = 1
    for start in range(len(seq)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = seq[j]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


class TestPhaseVector:
    def test_wrapping_range(self):
        vec = PhaseVector(np.array([3.5 * np.pi, -np.pi, np.pi, 0.0]))
        assert np.all(vec.alpha > -np.pi) and np.all(vec.alpha <= np.pi)
        assert vec.alpha[1] == pytest.approx(np.pi)  # -pi wraps to +pi

    def test_wrap_preserves_phase_factor(self, rng):
        raw = rng.uniform(-10, 10, size=6)
        np.testing.assert_allclose(
            np.exp(1j * wrap_angles(raw)), np.exp(1j * raw), atol=1e-12
        )


class TestOperatorString:
    def test_odd_length_rejected(self):
        with pytest.raises(ParityError):
            OperatorString(((0, True),))

    def test_too_long_rejected(self):
        with pytest.raises(ValidationError):
            OperatorString(tuple((0, True) for _ in range(14)))


class TestEnumeratePairings:
    def test_length_two(self):
        (pairing,) = enumerate_pairings(2)
        assert pairing.pairs == ((0, 1),)
        assert pairing.sign == 1

    def test_length_four_signs(self):
        pairings = enumerate_pairings(4)
        table = {p.pairs: p.sign for p in pairings}
        assert table == {
            ((0, 1), (2, 3)): 1,
            ((0, 2), (1, 3)): -1,
            ((0, 3), (1, 2)): 1,
        }

    def test_length_six_against_parity_oracle(self):
        pairings = enumerate_pairings(6)
        assert len(pairings) == 15
        for pairing in pairings:
            flat = [i for pair in pairing.pairs for i in pair]
            assert pairing.sign == permutation_parity(flat)

    def test_counts(self):
        assert len(enumerate_pairings(8)) == 105

    def test_odd_rejected(self):
        with pytest.raises(ParityError):
            enumerate_pairings(3)


class TestGammaF:
    def test_zero_phases(self, rng):
        cov = random_pure_covariance(3, rng)
        np.testing.assert_allclose(
            gamma_F(cov, np.zeros(3)), -2.0 * upsilon(3), atol=1e-14
        )

    def test_single_mode_pi(self):
        cov = covariance_from_xi(np.zeros((2, 2)))  # vacuum, gamma = -upsilon
        np.testing.assert_allclose(
            gamma_F(cov, np.array([np.pi])), -2.0 * upsilon(1), atol=1e-14
        )

    def test_skewness(self, rng):
        cov = random_pure_covariance(4, rng)
        alpha = rng.uniform(-np.pi, np.pi, size=4)
        gf = gamma_F(cov, alpha)
        assert np.max(np.abs(gf + gf.T)) < 1e-12


class TestACoeff:
    def test_normalization(self, rng):
        for n in (1, 2, 3, 4):
            cov = random_pure_covariance(n, rng)
            assert abs(a_coeff(cov, np.zeros(n)) - 1.0) < 1e-12

    def test_vacuum_any_phase(self, rng):
        for n in (1, 3):
            alpha = rng.uniform(-np.pi, np.pi, size=n)
            assert abs(a_coeff(-upsilon(n), alpha) - 1.0) < 1e-12

    def test_occupied_mode_flips_sign(self):
        # two modes, mode 0 occupied, mode 1 empty, phase pi on mode 0
        gamma = np.kron(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.diag([1.0, -1.0]))
        val = a_coeff(gamma, np.array([np.pi, 0.0]))
        assert val == pytest.approx(-1.0)

    def test_matches_dense(self, rng):
        for n in (2, 4):
            params = random_generator(n, rng)
            state = oracle.dense_state(params.xi, np.zeros((n, n)))
            alpha = rng.uniform(-np.pi, np.pi, size=n)
            dense = oracle.dense_expectation(state, alpha, ())
            assert abs(a_coeff(covariance_from_xi(params), alpha) - dense) < 1e-12


class TestGMatrix:
    def test_zero_phase_reduction(self, rng):
        cov = random_pure_covariance(3, rng)
        np.testing.assert_allclose(
            g_matrix(cov, np.zeros(3)), cov.gamma + upsilon(3), atol=1e-12
        )

    def test_vacuum_vanishes(self):
        assert np.max(np.abs(g_matrix(-upsilon(2), np.zeros(2)))) < 1e-14

    def test_skew_for_any_phase(self, rng):
        for _ in range(5):
            cov = random_pure_covariance(3, rng)
            alpha = rng.uniform(-np.pi, np.pi, size=3)
            g = g_matrix(cov, alpha)
            assert np.max(np.abs(g + g.T)) < 1e-10

    def test_rank1_matches_direct(self, rng):
        for _ in range(5):
            cov = random_pure_covariance(4, rng)
            alpha = rng.uniform(0.3, np.pi, size=4) * rng.choice([-1.0, 1.0], size=4)
            fast = g_matrix(cov, alpha, method="rank1")
            direct = g_matrix(cov, alpha, method="direct")
            assert np.max(np.abs(fast - direct)) < 1e-10

    def test_rank1_rejects_zero_phase(self, rng):
        cov = random_pure_covariance(3, rng)
        with pytest.raises(ValidationError):
            g_matrix(cov, np.array([0.0, 1.0, 1.0]), method="rank1")

    def test_auto_falls_back_on_zero_phase(self, rng):
        cov = random_pure_covariance(3, rng)
        alpha = np.array([0.0, 1.1, -0.7])
        np.testing.assert_allclose(
            g_matrix(cov, alpha, method="auto"),
            g_matrix(cov, alpha, method="direct"),
            atol=1e-12,
        )

    def test_auto_survives_singular_seed(self, rng):
        # gamma + upsilon is singular at the vacuum: the rank-1 seed inverse
        # does not exist and the auto path must quietly use the direct solve
        alpha = rng.uniform(0.5, 2.0, size=3)
        np.testing.assert_allclose(
            g_matrix(-upsilon(3), alpha, method="auto"),
            g_matrix(-upsilon(3), alpha, method="direct"),
            atol=1e-12,
        )

    def test_singular_contraction_raises(self):
        # equal-weight pair superposition: <e^{i pi n_0}> = 0 and the
        # contraction denominator is singular
        cov = bell_pair_covariance(np.pi / 4)
        with pytest.raises(SingularContractionError):
            g_matrix(cov, np.array([np.pi, 0.0]), method="direct")


class TestQMatrix:
    def test_zero_phase_gives_zero(self, rng):
        cov = random_pure_covariance(3, rng)
        assert np.max(np.abs(q_matrix(cov, np.zeros(3)))) < 1e-14

    def test_rank1_matches_direct(self, rng):
        for _ in range(5):
            cov = random_pure_covariance(4, rng)
            alpha = rng.uniform(0.3, np.pi, size=4) * rng.choice([-1.0, 1.0], size=4)
            fast = q_matrix(cov, alpha, method="rank1")
            direct = q_matrix(cov, alpha, method="direct")
            assert np.max(np.abs(fast - direct)) < 1e-10

    def test_derivative_of_coefficient(self, rng):
        # d log A / d gamma_ij (ordered-entry convention) equals Q_ij
        cov = random_pure_covariance(3, rng)
        alpha = rng.uniform(-np.pi, np.pi, size=3)
        q = q_matrix(cov, alpha)
        step = 1e-6
        for i, j in ((0, 1), (2, 4), (1, 5)):
            d = np.zeros((6, 6))
            d[i, j] = 1.0
            d[j, i] = -1.0
            ap = a_coeff(cov.gamma + step * d, alpha)
            am = a_coeff(cov.gamma - step * d, alpha)
            fd = (ap - am) / (2.0 * step) / a_coeff(cov, alpha)
            assert abs(0.5 * fd - q[i, j]) < 1e-7


class TestPairExpectation:
    def test_vacuum_dag_plain_vanishes(self):
        for p in range(2):
            for q in range(2):
                val = pair_expectation(-upsilon(2), np.zeros(2), PairKind.DAG_PLAIN, p, q)
                assert abs(val) < 1e-14

    def test_filled_dag_plain_is_identity(self):
        for p in range(3):
            for q in range(3):
                val = pair_expectation(upsilon(3), np.zeros(3), PairKind.DAG_PLAIN, p, q)
                assert val == pytest.approx(1.0 if p == q else 0.0)

    def test_all_kinds_match_dense(self, rng):
        n = 3
        params = random_generator(n, rng)
        cov = covariance_from_xi(params)
        alpha = rng.uniform(-np.pi, np.pi, size=n)
        state = oracle.dense_state(params.xi, np.zeros((n, n)))
        strings = {
            PairKind.DAG_PLAIN: lambda p, q: ((p, True), (q, False)),
            PairKind.DAG_DAG: lambda p, q: ((p, True), (q, True)),
            PairKind.PLAIN_PLAIN: lambda p, q: ((p, False), (q, False)),
        }
        for kind, make in strings.items():
            for p in range(n):
                for q in range(n):
                    dense = oracle.dense_expectation(state, alpha, make(p, q))
                    fast = pair_expectation(cov, alpha, kind, p, q)
                    assert abs(dense - fast) < 1e-10


class TestExpectation:
    def test_empty_string_is_coefficient(self, rng):
        cov = random_pure_covariance(3, rng)
        alpha = rng.uniform(-np.pi, np.pi, size=3)
        assert expectation(cov, alpha, ()) == pytest.approx(a_coeff(cov, alpha))

    def test_fourth_order_factorization(self, rng):
        # <p+ q+ r s> = <p+ s><q+ r> - <p+ r><q+ s> + <p+ q+><r s>
        n = 4
        cov = random_pure_covariance(n, rng)
        alpha = rng.uniform(-np.pi, np.pi, size=n)
        c = contract(cov, alpha)
        for p, q, r, s in itertools.product(range(n), repeat=4):
            lhs = expectation_from(c, ((p, True), (q, True), (r, False), (s, False)))
            a = c.coeff
            rhs = (
                pair_expectation(cov, alpha, PairKind.DAG_PLAIN, p, s)
                * pair_expectation(cov, alpha, PairKind.DAG_PLAIN, q, r)
                - pair_expectation(cov, alpha, PairKind.DAG_PLAIN, p, r)
                * pair_expectation(cov, alpha, PairKind.DAG_PLAIN, q, s)
                + pair_expectation(cov, alpha, PairKind.DAG_DAG, p, q)
                * pair_expectation(cov, alpha, PairKind.PLAIN_PLAIN, r, s)
            ) / a
            assert abs(lhs - rhs) < 1e-10

    def test_matches_dense_all_lengths(self, rng):
        for n in (2, 3, 4):
            params = random_generator(n, rng)
            cov = covariance_from_xi(params)
            alpha = rng.uniform(-np.pi, np.pi, size=n)
            state = oracle.dense_state(params.xi, np.zeros((n, n)))
            c = contract(cov, alpha)
            for length in (0, 2, 4, 6):
                for _ in range(8):
                    s = random_operator_string(n, length, rng)
                    dense = oracle.dense_expectation(state, alpha, s)
                    assert abs(expectation_from(c, s) - dense) < 1e-10

    def test_plain_wick_reduction(self, rng):
        # at zero phases the result equals the textbook Wick sum assembled
        # from gamma + upsilon by a separate, literal implementation
        n = 3
        cov = random_pure_covariance(n, rng)
        g0 = cov.gamma + upsilon(n)

        def literal_pair(first, second):
            (m1, d1), (m2, d2) = first, second
            if d1 and not d2:
                return 0.25j * block_contract(g0, BlockContractionKind.PLUS_MINUS, m1, m2)
            if d1 and d2:
                return 0.25j * block_contract(g0, BlockContractionKind.PLUS_PLUS, m1, m2)
            if not d1 and not d2:
                return 0.25j * block_contract(g0, BlockContractionKind.MINUS_MINUS, m1, m2)
            delta = 1.0 if m1 == m2 else 0.0
            return delta - 0.25j * block_contract(
                g0, BlockContractionKind.PLUS_MINUS, m2, m1
            )

        for _ in range(20):
            s = random_operator_string(n, int(rng.choice([2, 4, 6])), rng)
            total = 0.0 + 0.0j
            for pairing in enumerate_pairings(len(s)):
                prod = 1.0 + 0.0j
                for i, j in pairing.pairs:
                    prod *= literal_pair(s[i], s[j])
                total += pairing.sign * prod
            assert abs(expectation(cov, np.zeros(n), s) - total) < 1e-12

    def test_conjugation_symmetry(self, rng):
        # conj(<e^{i a n} X>) = e^{i phi} <e^{-i a n} X_reversed_flipped>
        # with phi = sum_{plain in X} a - sum_{dagger in X} a
        for n in (2, 3):
            cov = random_pure_covariance(n, rng)
            alpha = rng.uniform(-np.pi, np.pi, size=n)
            for length in (2, 4, 6):
                for _ in range(5):
                    s = random_operator_string(n, length, rng)
                    rev = tuple((m, not d) for m, d in reversed(s))
                    phi = sum(alpha[m] for m, d in s if not d) - sum(
                        alpha[m] for m, d in s if d
                    )
                    lhs = np.conj(expectation(cov, alpha, s))
                    rhs = np.exp(1j * phi) * expectation(cov, -alpha, rev)
                    assert abs(lhs - rhs) < 1e-10

    def test_odd_string_rejected(self, rng):
        cov = random_pure_covariance(2, rng)
        with pytest.raises(ParityError):
            expectation(cov, np.zeros(2), ((0, True),))

    def test_degenerate_coefficient_raises(self):
        cov = bell_pair_covariance(np.pi / 4)
        alpha = np.array([np.pi, 0.0])
        assert abs(a_coeff(cov, alpha)) < 1e-13
        with pytest.raises(SingularContractionError):
            expectation(cov, alpha, ((0, True), (1, True), (1, False), (0, False)))

    def test_mode_out_of_range_rejected(self, rng):
        cov = random_pure_covariance(2, rng)
        with pytest.raises(Exception):
            expectation(cov, np.zeros(2), ((5, True), (0, False)))


class TestLMatrix:
    def test_zero_phase_is_identity(self, rng):
        cov = random_pure_covariance(3, rng)
        np.testing.assert_allclose(l_matrix(cov, np.zeros(3)), np.eye(6), atol=1e-12)

    def test_derivative_of_contraction_matrix(self, rng):
        # d g_matrix / d gamma_ij (ordered-entry) = (1/2) L Delta_ij L^T
        cov = random_pure_covariance(3, rng)
        alpha = rng.uniform(-np.pi, np.pi, size=3)
        lmat = l_matrix(cov, alpha)
        step = 1e-6
        for i, j in ((0, 3), (1, 2)):
            d = np.zeros((6, 6))
            d[i, j] = 1.0
            d[j, i] = -1.0
            gp = g_matrix(cov.gamma + step * d, alpha)
            gm = g_matrix(cov.gamma - step * d, alpha)
            fd = (gp - gm) / (2.0 * step)
            analytic = lmat @ d @ lmat.T
            assert np.max(np.abs(0.5 * fd - 0.5 * analytic)) < 1e-6
