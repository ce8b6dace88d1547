"""Tangent-bundle structures, SODE conditions, transport, curve lifts."""

from __future__ import annotations

import pytest

from geomech.errors import OddDimensionError
from geomech.geomcalc import (
    Diffeo, Tensor11, VectorField, chart, fields_equal, identity_tensor,
    interior_product, pushforward, tensors_equal,
)
from geomech.symexpr import ZERO, parse, rational, sym
from geomech.tangentstruct import (
    CurveSpec, TangentStructure, canonical_structure, canonical_structure_on,
    check_integral_curve, is_sode, lift_curve, transport_structure,
    verify_axioms, vertical_differential,
)

EX1_FUNCS = {"f": parse("1 + u^2", ("u",))}


def example1_diffeo():
    src = chart("src", ("q", "v"))
    dst = chart("dst", ("y", "w"))
    return Diffeo(src, dst,
                  (parse("q/f(v)", src.coords, functions=("f",)), sym("v")),
                  (parse("y*f(w)", dst.coords, functions=("f",)), sym("w")))


class TestCanonicalStructure:
    def test_m1_components(self):
        ts = canonical_structure(1)
        assert ts.chart.coords == ("q", "v")
        assert ts.S == Tensor11(ts.chart, [[ZERO, ZERO], [rational(1), ZERO]])
        assert ts.Delta == VectorField(ts.chart, [ZERO, sym("v")])

    def test_m2_rank(self):
        ts = canonical_structure(2)
        assert ts.chart.dim == 4
        report = verify_axioms(ts)
        assert report["Ker S = Im S"].passed

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_axioms_pass(self, m):
        assert verify_axioms(canonical_structure(m)).passed

    def test_odd_chart_rejected(self):
        with pytest.raises(OddDimensionError):
            canonical_structure_on(chart("odd", ("a", "b", "c")))


class TestVerifyAxioms:
    def test_full_euler_field_breaks_s_delta(self):
        ts = canonical_structure(1)
        bad = TangentStructure(ts.chart, ts.S,
                               VectorField(ts.chart, [sym("q"), sym("v")]))
        report = verify_axioms(bad)
        failed = report["S(Delta) = 0"]
        assert failed.status == "fail"
        assert failed.witness is not None
        # S(Delta) = q d/dv: the failing component is the fiber one
        assert failed.component == "d/dv"

    def test_identity_breaks_nilpotency(self):
        ts = canonical_structure(1)
        bad = TangentStructure(ts.chart, identity_tensor(ts.chart), ts.Delta)
        report = verify_axioms(bad)
        assert report["S^2 = 0"].status == "fail"

    def test_shifted_dilation_breaks_only_s_delta(self):
        ts = canonical_structure(1)
        bad = TangentStructure(ts.chart, ts.S,
                               VectorField(ts.chart, [rational(1), sym("v")]))
        report = verify_axioms(bad)
        assert report["S(Delta) = 0"].status == "fail"
        for axiom in ("S^2 = 0", "N_S = 0", "L_Delta S = -S", "Ker S = Im S"):
            assert report[axiom].passed, axiom

    def test_rescaled_dilation_breaks_only_lie_axiom(self):
        ts = canonical_structure(1)
        bad = TangentStructure(ts.chart, ts.S,
                               VectorField(ts.chart, [ZERO, parse("2*v", ("q", "v"))]))
        report = verify_axioms(bad)
        assert report["L_Delta S = -S"].status == "fail"
        for axiom in ("S^2 = 0", "N_S = 0", "S(Delta) = 0", "Ker S = Im S"):
            assert report[axiom].passed, axiom


class TestIsSode:
    def test_generic_second_order_field(self):
        ts = canonical_structure(1)
        gamma = VectorField(ts.chart, [sym("v"),
                                       parse("F(q)*v + sin(q)", ts.chart.coords,
                                             functions=("F",))])
        assert is_sode(gamma, ts).passed

    def test_base_scaling_field_fails(self):
        ts = canonical_structure(1)
        gamma = VectorField(ts.chart, [sym("q"), ZERO])
        res = is_sode(gamma, ts)
        assert res.status == "fail" and res.witness is not None

    def test_zero_field_fails_against_canonical(self):
        ts = canonical_structure(1)
        assert not is_sode(VectorField(ts.chart, [ZERO, ZERO]), ts).passed


class TestTransport:
    def test_identity_diffeo(self):
        ts = canonical_structure(1)
        ident = Diffeo(ts.chart, ts.chart, (sym("q"), sym("v")), (sym("q"), sym("v")))
        moved = transport_structure(ts, ident)
        assert moved.S == ts.S and moved.Delta == ts.Delta

    def test_example1_alternative_structure_validates_dynamics(self):
        # pull the canonical target structure back: the original field
        # becomes second-order for the alternative structure
        phi = example1_diffeo()
        target = canonical_structure_on(phi.dst)
        alt = transport_structure(target, phi.inverted(), funcs=EX1_FUNCS)
        gamma = VectorField(phi.src, [parse("f(v)*v", phi.src.coords,
                                            functions=("f",)), ZERO])
        assert is_sode(gamma, alt, funcs=EX1_FUNCS).passed
        assert verify_axioms(alt, funcs=EX1_FUNCS).passed

    def test_round_trip(self):
        phi = example1_diffeo()
        target = canonical_structure_on(phi.dst)
        alt = transport_structure(target, phi.inverted(), funcs=EX1_FUNCS)
        back = transport_structure(alt, phi, funcs=EX1_FUNCS)
        assert tensors_equal(back.S, target.S, funcs=EX1_FUNCS).passed
        assert fields_equal(back.Delta, target.Delta, funcs=EX1_FUNCS).passed

    def test_transport_preserves_axioms(self):
        ts = canonical_structure(1)
        shear = Diffeo(ts.chart, chart("sheared", ("y", "w")),
                       (parse("q + v^2", ts.chart.coords), sym("v")),
                       (parse("y - w^2", ("y", "w")), sym("w")))
        moved = transport_structure(ts, shear)
        assert verify_axioms(moved).passed

    def test_sode_equivariance(self):
        ts = canonical_structure(1)
        gamma = VectorField(ts.chart, [sym("v"), parse("-q", ts.chart.coords)])
        assert is_sode(gamma, ts).passed
        shear = Diffeo(ts.chart, chart("sheared", ("y", "w")),
                       (parse("q + v^2", ts.chart.coords), sym("v")),
                       (parse("y - w^2", ("y", "w")), sym("w")))
        moved_ts = transport_structure(ts, shear)
        moved_gamma = pushforward(shear, gamma)
        assert is_sode(moved_gamma, moved_ts).passed


class TestVerticalDifferential:
    def test_kinetic_energy(self):
        ts = canonical_structure(1)
        theta = vertical_differential(parse("v^2/2", ts.chart.coords), ts)
        assert theta.components == {(0,): sym("v")}

    def test_base_function_annihilated(self):
        ts = canonical_structure(1)
        assert vertical_differential(sym("q"), ts).components == {}

    def test_constant(self):
        ts = canonical_structure(1)
        assert vertical_differential(rational(5), ts).components == {}

    def test_semibasic(self):
        # i_{S(X)} d_S f = 0 for any X since d_S f annihilates Im S
        ts = canonical_structure(2)
        f = parse("q1*v2^2 + sin(q2)*v1", ts.chart.coords)
        theta = vertical_differential(f, ts)
        X = VectorField(ts.chart, [parse(t, ts.chart.coords)
                                   for t in ("v1", "q2^2", "q1*v2", "1")])
        contracted = interior_product(ts.S.apply(X), theta)
        assert contracted.scalar() == ZERO


class TestCurves:
    def test_linear_curve(self):
        Q = chart("Q", ("x",))
        lifts = lift_curve(CurveSpec(Q, "t", (sym("t"),)))
        assert [str(c) for c in lifts["tgamma"]] == ["t", "1"]
        assert [str(c) for c in lifts["ttgamma"]] == ["t", "1", "1", "0"]

    def test_sine_curve(self):
        Q = chart("Q", ("x",))
        lifts = lift_curve(CurveSpec(Q, "t", (parse("sin(t)", ("t",)),)))
        assert [str(c) for c in lifts["ttgamma"]] == \
            ["sin(t)", "cos(t)", "cos(t)", "-sin(t)"]

    def test_two_dof_first_lift(self):
        Q = chart("Q", ("x", "y"))
        lifts = lift_curve(CurveSpec(Q, "t", (sym("t"), parse("t^2", ("t",)))))
        assert [str(c) for c in lifts["tgamma"]] == ["t", "t^2", "1", "2*t"]
        # repeated velocity block is structurally identical
        tt = lifts["ttgamma"]
        assert tt[2:4] == tt[4:6]

    def test_oscillator_flow_is_integral_curve(self):
        Q = chart("Q", ("x",))
        gamma = CurveSpec(Q, "t", (parse("sin(t)", ("t",)),))
        field = VectorField(chart("TQ", ("q", "v")),
                            [sym("v"), parse("-q", ("q", "v"))])
        assert check_integral_curve(gamma, field).passed

    def test_uniform_acceleration_fails_free_field(self):
        Q = chart("Q", ("x",))
        gamma = CurveSpec(Q, "t", (parse("t^2", ("t",)),))
        field = VectorField(chart("TQ", ("q", "v")), [sym("v"), ZERO])
        res = check_integral_curve(gamma, field)
        assert res.status == "fail"
        assert "max residual" in res.detail

    def test_constant_curve_zero_field(self):
        Q = chart("Q", ("x",))
        gamma = CurveSpec(Q, "t", (rational(3),))
        field = VectorField(chart("TQ", ("q", "v")), [ZERO, ZERO])
        assert check_integral_curve(gamma, field).passed

    def test_free_flight_flow(self):
        Q = chart("Q", ("x",))
        gamma = CurveSpec(Q, "t", (parse("1 + 2*t", ("t",)),))
        field = VectorField(chart("TQ", ("q", "v")), [sym("v"), ZERO])
        assert check_integral_curve(gamma, field).passed

    def test_parameters_in_components_rejected(self):
        Q = chart("Q", ("x",))
        with pytest.raises(ValueError):
            CurveSpec(Q, "t", (parse("x0 + t", ("t", "x0")),))
