"""Finite Weyl pairs, truncated ladder operators, nonlinear structures."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from geomech.errors import InversionFailureError, TruncationOverflowError
from geomech.symexpr import parse
from geomech.weylnum import (
    DenseOp, NonlinearStructure, clock_shift, fock_state, identity_op,
    nonlinear_add, nonlinear_scale, nonlinear_translation_action,
    phase_law_check, truncated_fock, weyl_commutation_check, weyl_word,
)


class TestClockShift:
    def test_dimension_two_anticommutes(self):
        ops = clock_shift(2)
        assert weyl_commutation_check(ops["U"], ops["V"], -1.0).passed

    def test_dimension_three_phase(self):
        ops = clock_shift(3)
        assert weyl_commutation_check(ops["U"], ops["V"], ops["zeta"]).passed

    @pytest.mark.parametrize("d", range(2, 33))
    def test_unitary_and_commutator_phase(self, d):
        ops = clock_shift(d)
        U, V, zeta = ops["U"], ops["V"], ops["zeta"]
        assert U.is_unitary() and V.is_unitary()
        commutator = U @ V @ DenseOp(np.conj(U.entries.T)) @ DenseOp(np.conj(V.entries.T))
        assert (commutator - identity_op(d).scaled(zeta)).norm_max() <= 1e-12

    def test_wrong_phase_fails(self):
        ops = clock_shift(4)
        wrong = clock_shift(3)["zeta"]
        assert weyl_commutation_check(ops["U"], ops["V"], wrong).status == "fail"

    def test_commuting_pair_with_unit_phase(self):
        # diagonal operators lie in a common maximal commuting family
        d1 = DenseOp(np.diag([1.0, 1j, -1.0]))
        d2 = DenseOp(np.diag([2.0, 0.5, 1.0]))
        assert weyl_commutation_check(d1, d2, 1.0).passed

    @pytest.mark.parametrize("d", range(2, 8))
    def test_exhaustive_phase_law(self, d):
        assert phase_law_check(d).passed

    def test_word_ordering(self):
        ops = clock_shift(5)
        word = weyl_word(ops["U"], ops["V"], 2, 3)
        manual = ops["V"].power(2) @ ops["U"].power(3)
        assert (word - manual).norm_max() == 0.0


class TestTruncatedFock:
    def test_minimal_truncation(self):
        ops = truncated_fock(2)
        comm = ops["a"] @ ops["a_dag"] - ops["a_dag"] @ ops["a"]
        assert np.allclose(np.diag(comm.entries), [1.0, -1.0], atol=1e-12)

    def test_adjoint_exact(self):
        ops = truncated_fock(8)
        assert (ops["a_dag"] - ops["a"].dagger()).norm_max() == 0.0

    def test_number_operator_spectrum(self):
        ops = truncated_fock(8)
        assert np.allclose(np.diag(ops["N"].entries), np.arange(8), atol=1e-12)
        off_diag = ops["N"].entries - np.diag(np.diag(ops["N"].entries))
        assert np.abs(off_diag).max() == 0.0

    @pytest.mark.parametrize("n_max", [2, 8, 16])
    def test_commutator_artifact_confined(self, n_max):
        ops = truncated_fock(n_max)
        comm = (ops["a"] @ ops["a_dag"] - ops["a_dag"] @ ops["a"]).entries
        expected = np.eye(n_max, dtype=complex)
        expected[-1, -1] = 1 - n_max
        assert np.abs(comm - expected).max() <= 1e-12

    def test_vacuum_expectation(self):
        ops = truncated_fock(4)
        vacuum = np.eye(4)[0]
        assert abs(vacuum @ ops["N"].entries @ vacuum) == 0.0

    def test_fock_states(self):
        ops = truncated_fock(6)
        vacuum = np.eye(6)[0]
        assert np.array_equal(fock_state(0, ops["a_dag"], vacuum), vacuum)
        one = fock_state(1, ops["a_dag"], vacuum)
        assert np.allclose(one, np.eye(6)[1], atol=1e-12)
        for n in range(6):
            state = fock_state(n, ops["a_dag"], vacuum)
            assert abs(np.linalg.norm(state) - 1.0) <= 1e-12
            assert np.allclose(ops["N"].entries @ state, n * state, atol=1e-11)

    def test_truncation_overflow(self):
        ops = truncated_fock(4)
        with pytest.raises(TruncationOverflowError):
            fock_state(4, ops["a_dag"], np.eye(4)[0])


KCUBIC = NonlinearStructure(parse("1 + u^2", ("u",)))


class TestNonlinearStructure:
    def test_identity_reparametrization(self):
        s = NonlinearStructure(parse("1", ()))
        assert nonlinear_add(s, (1.25, 0.5), (0.25, -1.0)) == (1.5, -0.5)

    def test_additive_identity_exact(self):
        assert nonlinear_add(KCUBIC, (1.0, 0.0), (0.0, 0.0)) == (1.0, 0.0)

    def test_commutative(self):
        a = nonlinear_add(KCUBIC, (0.7, 0.3), (-1.1, 0.4))
        b = nonlinear_add(KCUBIC, (-1.1, 0.4), (0.7, 0.3))
        assert a == b

    def test_cubic_sum_against_bisection_oracle(self):
        got = nonlinear_add(KCUBIC, (1.0, 0.0), (1.0, 0.0))
        # oracle: independent bisection for q (1 + q^2) = 4 on [0, 2]
        lo, hi = 0.0, 2.0
        for _ in range(80):
            mid = (lo + hi) / 2
            if mid * (1 + mid * mid) < 4.0:
                lo = mid
            else:
                hi = mid
        assert abs(got[0] - (lo + hi) / 2) <= 1e-10
        assert got[1] == 0.0

    def test_scale_one_and_zero(self):
        assert nonlinear_scale(KCUBIC, 1.0, (0.8, -0.4)) == (0.8, -0.4)
        assert nonlinear_scale(KCUBIC, 0.0, (0.8, -0.4)) == (0.0, 0.0)

    def test_scale_two(self):
        q, p = nonlinear_scale(KCUBIC, 2.0, (1.0, 1.0))
        assert abs(q * (1 + q * q) - 4.0) <= 1e-10
        assert p == 2.0

    def test_scale_composition(self):
        z = (0.6, -1.2)
        once = nonlinear_scale(KCUBIC, 6.0, z)
        twice = nonlinear_scale(KCUBIC, 2.0, nonlinear_scale(KCUBIC, 3.0, z))
        assert abs(once[0] - twice[0]) <= 1e-9 and abs(once[1] - twice[1]) <= 1e-12

    def test_closed_form_inverse_mode(self):
        # K = 1 gives Q = q; the supplied inverse is used verbatim
        s = NonlinearStructure(parse("1", ()), inverse_expr=parse("Q", ("Q",)))
        assert nonlinear_add(s, (2.0, 0.0), (3.0, 0.0)) == (5.0, 0.0)

    def test_regularity_check(self):
        assert KCUBIC.regularity_check().passed

    def test_regularity_expression(self):
        expr = KCUBIC.regularity_expr()
        assert str(expr) == "1 + abs(q)^2 + 2*q*abs(q)*sign(q)"

    def test_translation_group_law(self):
        grid = [(-1.0 + i / 16.0) for i in range(33)]
        report = nonlinear_translation_action(KCUBIC, 0.5, grid)
        assert report.passed and report.group_residual <= 1e-9
        assert len(report.table) == 33

    def test_zero_shift_is_identity(self):
        grid = [(-1.0 + i / 8.0) for i in range(17)]
        report = nonlinear_translation_action(KCUBIC, 0.0, grid)
        for x, shifted in report.table:
            assert abs(shifted - x) <= 1e-10

    def test_plain_shift_when_k_is_one(self):
        s = NonlinearStructure(parse("1", ()))
        report = nonlinear_translation_action(s, 0.25, [0.0, 0.5, 1.0])
        for x, shifted in report.table:
            assert abs(shifted - (x + 0.25)) <= 1e-12

    def test_associativity_random_triples(self):
        rng = random.Random(42)
        worst = 0.0
        for _ in range(100):
            z1, z2, z3 = ((rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(3))
            left = nonlinear_add(KCUBIC, nonlinear_add(KCUBIC, z1, z2), z3)
            right = nonlinear_add(KCUBIC, z1, nonlinear_add(KCUBIC, z2, z3))
            worst = max(worst, abs(left[0] - right[0]), abs(left[1] - right[1]))
        assert worst <= 1e-9

    def test_inverse_failure_reported(self):
        # K = -1/(1+u^2)... a bounded forward map cannot reach large targets:
        # q * 1/(1 + u^4) has range limits, so bracketing fails
        s = NonlinearStructure(parse("1/(1 + u^4)", ("u",)))
        with pytest.raises(InversionFailureError):
            s.inverse_base(1e9)

    def test_transported_area_factor_matches_symbolic_pullback(self):
        # the numeric structure and the symbolic pullback agree on the
        # area-scaling factor K(|q|) + q K'(|q|) sign(q)
        from geomech.geomcalc import Diffeo, DiffForm, chart, pullback
        from geomech.symexpr import FunctionBindings, evaluate, rational, sym

        src = chart("src", ("q", "p"))
        dst = chart("dst", ("Q", "P"))
        fwd = (parse("q*K(abs(q))", src.coords, functions=("K",)), sym("p"))
        phi = Diffeo(src, dst, fwd,
                     (parse("Kinv(Q)", dst.coords, functions=("Kinv",)), sym("P")))
        pulled = pullback(phi, DiffForm(dst, 2, {(0, 1): rational(1)}))
        factor = pulled.components[(0, 1)]
        bound = FunctionBindings({"K": parse("1 + u^2", ("u",))})
        for q in (0.5, -0.5, 1.5):
            got = evaluate(factor, {"q": q, "p": 0.0}, bound)
            want = evaluate(KCUBIC.regularity_expr(), {"q": q})
            assert abs(got - want) <= 1e-12
