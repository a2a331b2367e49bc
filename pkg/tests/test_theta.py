"""Numerical theta evaluation against independent oracles.

Oracles: an extended-precision mpmath lattice sum (independent of the
module's vectorized numpy sum and of its truncation-radius logic), known
closed-form values, and finite differences for every analytic derivative.
"""

import mpmath
import numpy as np
import pytest

from thetadiag.chars import EVEN, ODD, Characteristic, enumerate_characteristics
from thetadiag.theta import (
    MAX_DERIV_ORDER,
    MAX_NUMERIC_GENUS,
    PeriodMatrix,
    eval_theta,
    eval_theta_many,
    f_phi_psi,
    genus1_derivatives,
    gradient,
    hessian,
    numerical_rank,
    sample_generic_diagonal,
    tau_derivative,
    tau_gradient,
    theta_constants_batch,
)


def mpmath_theta(m, tau_entries, z=None, deriv=None, radius=25, dps=40):
    """Independent extended-precision lattice sum."""
    g = m.g
    with mpmath.workdps(dps):
        tau = mpmath.matrix(g)
        for a in range(g):
            for b in range(g):
                tau[a, b] = mpmath.mpc(tau_entries[a][b])
        zv = [mpmath.mpc(z[a]) if z is not None else mpmath.mpc(0) for a in range(g)]
        half = mpmath.mpf(1) / 2
        total = mpmath.mpc(0)
        pii = mpmath.mpc(0, mpmath.pi)

        def rec(coords):
            nonlocal total
            if len(coords) == g:
                q = [coords[a] + m.eps[a] * half for a in range(g)]
                quad = mpmath.mpc(0)
                for a in range(g):
                    for b in range(g):
                        quad += q[a] * tau[a, b] * q[b]
                lin = mpmath.mpc(0)
                for a in range(g):
                    lin += q[a] * (zv[a] + m.delta[a] * half)
                term = mpmath.exp(pii * (quad + 2 * lin))
                if deriv:
                    for a in range(g):
                        for _ in range(deriv[a]):
                            term *= 2 * pii * q[a]
                total += term
                return
            for n in range(-radius, radius + 1):
                rec(coords + [n])

        rec([])
        return complex(total)


class TestPeriodMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            PeriodMatrix([[1j, 0.1], [0.2, 1j]])

    def test_rejects_non_positive_imaginary(self):
        with pytest.raises(ValueError):
            PeriodMatrix([[1j, 2j], [2j, 1j]])

    def test_json_roundtrip(self):
        tau = PeriodMatrix([[0.3 + 1.1j, 0.05j], [0.05j, -0.2 + 0.9j]])
        again = PeriodMatrix.from_json(tau.to_json())
        assert np.allclose(tau.entries, again.entries)

    def test_from_json_checks_declared_genus(self):
        obj = PeriodMatrix.diagonal([1j, 1.5j]).to_json()
        obj["g"] = 3
        with pytest.raises(ValueError):
            PeriodMatrix.from_json(obj)

    def test_perturbed(self):
        tau = PeriodMatrix.diagonal([1j, 1j])
        direction = np.array([[0, 1], [1, 0]], dtype=complex)
        assert PeriodMatrix(tau.perturbed(direction, 0.1).entries).entries[0, 1] == 0.1


class TestAgainstOracles:
    def test_classical_value_at_i(self):
        # theta[0;0](i) = pi^(1/4) / Gamma(3/4)
        value = eval_theta(Characteristic.zero(1), PeriodMatrix([[1j]]))
        expected = float(mpmath.pi**0.25 / mpmath.gamma(0.75))
        assert abs(value - expected) < 1e-12

    @pytest.mark.parametrize(
        "char,t",
        [("[0;0]", 0.3 + 1.1j), ("[0;1]", -0.2 + 0.9j), ("[1;0]", 0.1 + 1.4j)],
    )
    def test_genus1_constants(self, char, t):
        m = Characteristic.parse(char)
        ours = eval_theta(m, PeriodMatrix([[t]]), tol=1e-12)
        assert abs(ours - mpmath_theta(m, [[t]])) < 1e-11

    def test_genus1_derivatives_vs_mpmath(self):
        m = Characteristic.parse("[1;1]")
        t = 0.2 + 1.0j
        for k in (1, 3):
            ours = eval_theta(m, PeriodMatrix([[t]]), deriv=(k,), tol=1e-12)
            assert abs(ours - mpmath_theta(m, [[t]], deriv=(k,))) < 1e-10

    def test_genus2_constants_vs_mpmath(self):
        tau = [[0.1 + 1.0j, 0.2 + 0.3j], [0.2 + 0.3j, -0.3 + 1.2j]]
        for char in ("[00;00]", "[10;01]", "[01;11]"):
            m = Characteristic.parse(char)
            ours = eval_theta(m, PeriodMatrix(tau), tol=1e-12)
            assert abs(ours - mpmath_theta(m, tau, radius=15)) < 1e-10

    def test_genus2_with_z_vs_mpmath(self):
        tau = [[0.1 + 1.0j, 0.15j], [0.15j, 1.1j]]
        z = [0.1 + 0.05j, -0.2 + 0.1j]
        m = Characteristic.parse("[11;11]")
        ours = eval_theta(m, PeriodMatrix(tau), z=z, tol=1e-12)
        assert abs(ours - mpmath_theta(m, tau, z=z, radius=15)) < 1e-10


class TestStructuralIdentities:
    def test_odd_constants_vanish(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            g = int(rng.integers(1, 5))
            tau = _random_tau(g, rng)
            odds = enumerate_characteristics(g, parity_filter=ODD)
            m = odds[rng.integers(len(odds))]
            assert abs(eval_theta(m, tau)) < 1e-10

    def test_even_gradients_vanish(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            g = int(rng.integers(2, 5))
            tau = _random_tau(g, rng)
            evens = enumerate_characteristics(g, parity_filter=EVEN)
            m = evens[rng.integers(len(evens))]
            assert np.abs(gradient(m, tau)).max() < 1e-10

    def test_block_factorization(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            g = int(rng.integers(2, 5))
            g1 = int(rng.integers(1, g))
            tau = _random_tau(g, rng)
            block = np.array(tau.entries)
            block[:g1, g1:] = 0.0
            block[g1:, :g1] = 0.0
            chars = enumerate_characteristics(g)
            m = chars[rng.integers(len(chars))]
            m1 = Characteristic(m.eps[:g1], m.delta[:g1])
            m2 = Characteristic(m.eps[g1:], m.delta[g1:])
            lhs = eval_theta(m, PeriodMatrix(block))
            rhs = eval_theta(m1, PeriodMatrix(block[:g1, :g1])) * eval_theta(
                m2, PeriodMatrix(block[g1:, g1:])
            )
            assert abs(lhs - rhs) < 1e-9

    def test_diagonal_product_formula(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            g = int(rng.integers(2, 5))
            t = sample_generic_diagonal(g, 0, rng)
            chars = enumerate_characteristics(g)
            m = chars[rng.integers(len(chars))]
            prod = 1.0 + 0j
            for a in range(1, g + 1):
                prod *= eval_theta(m.column(a), PeriodMatrix([[t[a - 1]]]))
            assert abs(eval_theta(m, PeriodMatrix.diagonal(t)) - prod) < 1e-9

    def test_quasi_periodicity_in_z(self):
        # theta(z + unit vector) = exp(pi i eps_a) theta(z)
        m = Characteristic.parse("[10;11]")
        tau = _random_tau(2, np.random.default_rng(4))
        z = [0.1 + 0.2j, -0.3 + 0.1j]
        shifted = [z[0] + 1, z[1]]
        lhs = eval_theta(m, tau, z=shifted)
        rhs = np.exp(1j * np.pi * m.eps[0]) * eval_theta(m, tau, z=z)
        assert abs(lhs - rhs) < 1e-10


class TestDerivatives:
    def test_gradient_vs_finite_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            g = int(rng.integers(2, 5))
            tau = _random_tau(g, rng)
            odds = enumerate_characteristics(g, parity_filter=ODD)
            m = odds[rng.integers(len(odds))]
            grad = gradient(m, tau)
            h = 1e-5
            for a in range(g):
                zp = [0.0] * g
                zm = [0.0] * g
                zp[a], zm[a] = h, -h
                fd = (eval_theta(m, tau, z=zp) - eval_theta(m, tau, z=zm)) / (2 * h)
                assert abs(fd - grad[a]) < 1e-6 * max(1.0, abs(grad[a]))

    def test_hessian_vs_finite_differences(self):
        rng = np.random.default_rng(6)
        tau = _random_tau(3, rng)
        m = Characteristic.parse("[110;110]")
        hess = hessian(m, tau)
        assert np.allclose(hess, hess.T)
        h = 1e-4
        for a in range(3):
            for b in range(3):
                zpp = [0.0] * 3
                zpp[a] += h
                zpp[b] += h
                zpm = [0.0] * 3
                zpm[a] += h
                zpm[b] -= h
                zmp = [0.0] * 3
                zmp[a] -= h
                zmp[b] += h
                zmm = [0.0] * 3
                zmm[a] -= h
                zmm[b] -= h
                fd = (
                    eval_theta(m, tau, z=zpp)
                    - eval_theta(m, tau, z=zpm)
                    - eval_theta(m, tau, z=zmp)
                    + eval_theta(m, tau, z=zmm)
                ) / (4 * h * h)
                assert abs(fd - hess[a, b]) < 1e-5 * max(1.0, abs(hess[a, b]))

    def test_heat_equation(self):
        rng = np.random.default_rng(7)
        for _ in range(15):
            g = int(rng.integers(2, 5))
            tau = _random_tau(g, rng)
            evens = enumerate_characteristics(g, parity_filter=EVEN)
            m = evens[rng.integers(len(evens))]
            j = int(rng.integers(1, g + 1))
            k = int(rng.integers(1, g + 1))
            j, k = min(j, k), max(j, k)
            h = 1e-4
            direction = np.zeros((g, g), dtype=complex)
            direction[j - 1, k - 1] = direction[k - 1, j - 1] = 1.0
            fd = (
                eval_theta(m, tau.perturbed(direction, h))
                - eval_theta(m, tau.perturbed(direction, -h))
            ) / (2 * h)
            an = tau_derivative(m, tau, (j, k))
            assert abs(fd - an) < 1e-6 * max(1.0, abs(an))

    def test_tau_gradient_matches_tau_derivative(self):
        tau = _random_tau(3, np.random.default_rng(8))
        m = Characteristic.parse("[110;110]")
        grad = tau_gradient(m, tau)
        for j in range(1, 4):
            for k in range(j, 4):
                assert abs(grad[j - 1, k - 1] - tau_derivative(m, tau, (j, k))) < 1e-12


class TestBatchAndBounds:
    def test_batch_matches_single_evaluations(self):
        tau = _random_tau(3, np.random.default_rng(9))
        chars = enumerate_characteristics(3, parity_filter=EVEN)
        values = theta_constants_batch(tau, chars)
        for m in chars[::5]:
            assert abs(values[m] - eval_theta(m, tau)) < 1e-10

    def test_eval_theta_many(self):
        tau = _random_tau(2, np.random.default_rng(10))
        m = Characteristic.parse("[11;11]")
        many = eval_theta_many(m, tau, [(1, 0), (0, 1)])
        assert abs(many[0] - eval_theta(m, tau, deriv=(1, 0))) < 1e-12
        assert abs(many[1] - eval_theta(m, tau, deriv=(0, 1))) < 1e-12

    def test_tolerance_monotone(self):
        tau = _random_tau(3, np.random.default_rng(11))
        m = Characteristic.parse("[000;000]")
        loose = eval_theta(m, tau, tol=1e-6)
        tight = eval_theta(m, tau, tol=1e-13)
        assert abs(loose - tight) < 2e-6

    def test_genus_cap(self):
        with pytest.raises(ValueError):
            eval_theta(
                Characteristic.zero(MAX_NUMERIC_GENUS + 1),
                PeriodMatrix.diagonal([1j] * (MAX_NUMERIC_GENUS + 1)),
            )

    def test_derivative_order_cap(self):
        tau = PeriodMatrix([[1j]])
        m = Characteristic.zero(1)
        with pytest.raises(ValueError):
            eval_theta(m, tau, deriv=(MAX_DERIV_ORDER + 1,))
        # explicit override allows higher orders (used for genus-1 symbols)
        eval_theta(m, tau, deriv=(MAX_DERIV_ORDER + 1,), max_order=6)


class TestGenus1Symbols:
    def test_f_phi_psi_consistency(self):
        t = 0.1 + 1.2j
        d1, d3, d5 = genus1_derivatives(Characteristic.parse("[1;1]"), t, (1, 3, 5))
        f, phi, psi = f_phi_psi(t, odd=True)
        assert abs(f - d1) < 1e-12
        assert abs(phi - d3 / d1) < 1e-10
        assert abs(psi - (d5 / d1 - (d3 / d1) ** 2)) < 1e-8

    def test_sample_generic_diagonal_window(self):
        rng = np.random.default_rng(12)
        t = sample_generic_diagonal(4, 2, rng)
        assert ((t.imag >= 0.8) & (t.imag <= 2.0)).all()
        assert ((t.real >= -0.5) & (t.real <= 0.5)).all()


class TestNumericalRank:
    def test_exact_ranks(self):
        assert numerical_rank(np.zeros((3, 3))) == 0
        assert numerical_rank(np.eye(4)) == 4
        mat = np.outer([1, 2, 3], [4, 5, 6]).astype(complex)
        assert numerical_rank(mat) == 1

    def test_threshold_is_relative(self):
        mat = np.diag([1.0, 1e-3, 1e-12])
        assert numerical_rank(mat, rel_tol=1e-7) == 2

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            numerical_rank(np.array([[np.nan, 0], [0, 1]]))


def _random_tau(g, rng):
    t = rng.uniform(-0.5, 0.5, size=g) + 1j * rng.uniform(0.8, 2.0, size=g)
    tau = np.diag(t.astype(complex))
    for a in range(g):
        for b in range(a + 1, g):
            tau[a, b] = tau[b, a] = 0.1 * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))
    return PeriodMatrix(tau)
