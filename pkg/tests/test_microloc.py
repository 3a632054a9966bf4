import json
import math
import random
from fractions import Fraction

import pytest

from microdiff.diffop import DiffOp, build_theta_tilde
from microdiff.errors import NotInvertibleAtSymbol, SymbolMismatch
from microdiff.microloc import (
    MicroOp,
    alpha_bound,
    change_presentation_level,
    convert_presentation,
    invert_theta_tilde,
    membership_intermediate,
    micro_multiply,
    normcalc_bounds,
    observed_a_bound,
    psi_level_lower,
    term_order,
    try_invert,
    validate_convergence,
)
from microdiff.padic import level_shift_constant, valuation
from microdiff.polynomials import Poly
from microdiff.pseudopoly import SymbolPoly, rational_level_change

XI2 = SymbolPoly.xi(2, 0)
XI3 = SymbolPoly.xi(3, 0)


def rand_micro(rng, theta, level, mprime, nterms=3, maxk=5, maxi=2, maxdeg=2):
    terms = {}
    for _ in range(nterms):
        k = rng.randint(0, maxk)
        i = rng.randint(0, maxi)
        c = rng.randint(-4, 4)
        e = rng.randint(0, maxdeg)
        if c:
            key = ((k,), i)
            terms[key] = terms.get(key, Poly.zero(1)) + Poly(1, {(e,): c})
    return MicroOp(theta, level, mprime, terms)


class TestPresentation:
    def test_term_order(self):
        # order of (k, i) is |k| - i*n*p^m'
        assert term_order((5,), 2, 1, 2, 1) == 5 - 4
        assert term_order((0,), 1, 2, 3, 0) == -2

    def test_right_to_left_example(self):
        # right d^-1 x  ->  left x d^-1 - d^-2
        P = MicroOp(XI2, 0, 0, {((0,), 1): Poly.var()}, side="right")
        L = convert_presentation(P, "left")
        assert L.terms == {((0,), 1): Poly.var(), ((0,), 2): Poly.const(-1)}

    def test_roundtrip_exact(self):
        rng = random.Random(42)
        for trial in range(25):
            P = rand_micro(rng, XI2, 0, 0)
            back = convert_presentation(convert_presentation(P, "right"), "left")
            assert back == P, f"trial {trial}"

    def test_constant_coefficient_side_invariant(self):
        P = MicroOp(XI2, 0, 1, {((3,), 1): 5})
        R = convert_presentation(P, "right")
        assert R.terms == P.terms

    def test_canonical_reduces_localizer_multiples(self):
        # (d^2) * T^-1 with T = d^2 canonicalizes to 1
        T = build_theta_tilde(XI2, 0, 1).op
        P = MicroOp(XI2, 0, 1, {((2,), 1): 1})
        assert P.canonical().terms == {((0,), 0): Poly.const(1)}
        assert P == MicroOp.one(XI2, 0, 1)


class TestMultiply:
    def test_t_times_t_inverse(self):
        for level, mp in [(0, 0), (0, 1), (1, 1), (1, 2)]:
            Tinv = invert_theta_tilde(XI2, level, mp, floor=-10)
            T = MicroOp.from_diffop(build_theta_tilde(XI2, level, mp).op, XI2, mp)
            assert micro_multiply(T, Tinv) == 1
            assert micro_multiply(Tinv, T) == 1

    def test_identity(self):
        rng = random.Random(3)
        one = MicroOp.one(XI2, 0, 1)
        for _ in range(10):
            P = rand_micro(rng, XI2, 0, 1)
            assert micro_multiply(P, one) == P
            assert micro_multiply(one, P) == P

    def test_consistency_with_diffop_product(self):
        # i = 0 terms multiply exactly like differential operators
        rng = random.Random(8)
        for _ in range(10):
            A = DiffOp(2, 0, 1, {(rng.randint(0, 4),): Poly.from_univariate([rng.randint(-3, 3), 1])})
            B = DiffOp(2, 0, 1, {(rng.randint(0, 4),): Poly.from_univariate([1, rng.randint(-3, 3)])})
            mA = MicroOp.from_diffop(A, XI2, 0)
            mB = MicroOp.from_diffop(B, XI2, 0)
            assert micro_multiply(mA, mB) == MicroOp.from_diffop(A * B, XI2, 0)

    def test_spec_consistency_example(self):
        # d * (x d^-1 - d^-2) = x within window
        L = MicroOp(XI2, 0, 0, {((0,), 1): Poly.var(), ((0,), 2): -1}, floor=-4)
        dmic = MicroOp.from_diffop(DiffOp.dx(2, 0), XI2, 0).truncate(-4)
        prod = micro_multiply(dmic, L)
        x = MicroOp(XI2, 0, 0, {((0,), 0): Poly.var()}, floor=prod.floor)
        assert prod == x

    def test_associativity(self):
        rng = random.Random(17)
        for _ in range(10):
            P = rand_micro(rng, XI2, 0, 1, nterms=2, maxi=1)
            Q = rand_micro(rng, XI2, 0, 1, nterms=2, maxi=1)
            R = rand_micro(rng, XI2, 0, 1, nterms=2, maxi=1)
            assert micro_multiply(micro_multiply(P, Q), R) == micro_multiply(P, micro_multiply(Q, R))

    def test_window_refinement(self):
        # deeper window then truncate == shallow window directly
        P = MicroOp.from_diffop(DiffOp.dx(2, 0) - DiffOp.x(2, 0), XI2, 0)
        for L1, L2 in [(-4, -8), (-3, -12)]:
            deep = try_invert(P, XI2, 0, floor=L2).inverse
            shallow = try_invert(P, XI2, 0, floor=L1).inverse
            assert deep.truncate(shallow.floor) == shallow


class TestInversion:
    def test_invert_d(self):
        S = invert_theta_tilde(XI2, 0, 0, floor=-5)
        T = MicroOp.from_diffop(DiffOp.dx(2, 0), XI2, 0)
        assert micro_multiply(T, S) == 1

    def test_invert_d_squared_monomial(self):
        S = invert_theta_tilde(XI2, 0, 1, floor=-10)
        assert S.terms == {((0,), 1): Poly.const(1)}
        assert S.order() == -2

    def test_d_minus_x_level0(self):
        P = DiffOp.dx(2, 0) - DiffOp.x(2, 0)
        rep = try_invert(P, XI2, 0, floor=-6)
        assert rep.ok
        assert rep.inverse.p_valuation() >= 0
        lead = {key: c for key, c in rep.inverse.terms.items() if key[1] <= 2}
        assert lead == {((0,), 1): Poly.const(1), ((0,), 2): Poly.var()}

    def test_two_sided(self):
        for P in (DiffOp.dx(3, 0) - DiffOp.x(3, 0), DiffOp.dx(3, 0, 2) + DiffOp.one(3, 0)):
            rep = try_invert(P, XI3, 0, floor=-8)
            assert rep.left_residual_below_floor and rep.right_residual_below_floor

    def test_level1_unbounded_profile(self):
        P = DiffOp.dx(2, 1) - DiffOp.x(2, 1)
        rep = try_invert(P, XI2, 1, floor=-16)
        assert not rep.ok
        assert not rep.profile.bounded
        # valuations really do decay with depth
        assert min(-b for b in rep.profile.betas.values()) <= -4

    def test_monomial_chart(self):
        theta = SymbolPoly(2, 0, 1, {(1,): Poly.var()})  # x xi
        T = build_theta_tilde(theta, 0, 0, "left").op  # x d
        rep = try_invert(T, theta, 0, floor=-6, laurent=True)
        assert rep.ok
        assert rep.inverse.terms == {((0,), 1): Poly.const(1)}

    def test_non_unit_rejected(self):
        theta = SymbolPoly(2, 0, 1, {(1,): Poly.var()})
        with pytest.raises(NotInvertibleAtSymbol):
            invert_theta_tilde(theta, 0, 0, floor=-4)  # no laurent chart

    def test_symbol_mismatch(self):
        P = DiffOp(2, 0, 1, {(1,): Poly.from_univariate([1, 1])})  # (1+x) d
        with pytest.raises(SymbolMismatch):
            try_invert(P, XI2, 0, floor=-4)


class TestConvergence:
    def test_finite_integral_bounded(self):
        P = MicroOp(XI2, 0, 1, {((3,), 1): 7, ((0,), 0): 1})
        prof = validate_convergence(P)
        assert prof.bounded and all(b <= 0 for b in prof.betas.values())

    def test_zero(self):
        prof = validate_convergence(MicroOp(XI2, 0, 1, {}))
        assert prof.bounded and prof.betas == {}


class TestPsi:
    def test_frozen_example(self):
        Tinv = invert_theta_tilde(XI2, 1, 1, floor=-8)
        img = psi_level_lower(Tinv, 0)
        assert img.terms == {((0,), 1): Poly.const(2)}

    def test_identity(self):
        P = MicroOp(XI2, 1, 2, {((3,), 1): Poly.var()})
        assert psi_level_lower(P, 1) == P

    def test_functoriality(self):
        rng = random.Random(23)
        count = 0
        for _ in range(30):
            P = rand_micro(rng, XI2, 2, 2)
            via = psi_level_lower(psi_level_lower(P, 1), 0)
            direct = psi_level_lower(P, 0)
            assert via.terms == direct.terms
            count += 1
        assert count == 30

    def test_strictness(self):
        rng = random.Random(29)
        for _ in range(20):
            P = rand_micro(rng, XI3, 1, 1)
            if P.is_zero():
                continue
            assert psi_level_lower(P, 0).order() == P.order()

    def test_gr_coherence(self):
        # gr of psi = rational level change combined with the r-constants:
        # on xi^<1><2> (Theta^(1))^-1, p=2
        P = MicroOp(XI2, 1, 1, {((2,), 1): 1})
        img = psi_level_lower(P, 0)
        # top symbol of image: constants from both paths agree
        ((k, i),) = img.terms
        got = img.terms[(k, i)]
        # path 2: move the symbol xi^<1><2> to level 0 (constant 2| q-shift),
        # and the localizer by r_{0,1}^{n i} = 2
        sym = rational_level_change(SymbolPoly.xi(2, 1, 2), 0)
        want = sym.terms[(2,)].constant_term() * 2
        assert got.constant_term() == want

    def test_round_trip_exact(self):
        rng = random.Random(31)
        for _ in range(15):
            P = rand_micro(rng, XI2, 2, 2)
            back = change_presentation_level(psi_level_lower(P, 0), 2)
            assert back == P


class TestMembership:
    def test_theta_inverse_in_intermediate(self):
        Q = MicroOp(XI2, 1, 2, {((0,), 1): 1})
        assert membership_intermediate(Q, 0).status == "InEmm'"

    def test_divided_power_only_upper(self):
        P = MicroOp.from_diffop(DiffOp.dx(2, 1, 2), XI2, 1)
        assert membership_intermediate(P, 0).status == "OnlyInEm'"

    def test_negative_order_automatic(self):
        # any integral element of order <= 0 is in E^(m,m')
        rng = random.Random(37)
        for _ in range(20):
            P = rand_micro(rng, XI2, 1, 1, maxk=1, maxi=2)
            if P.is_zero() or P.order() > 0 or not P.is_integral():
                continue
            assert membership_intermediate(P, 0).status == "InEmm'"

    def test_monotone_in_m(self):
        # InEmm' for (m-1, m') implies InEmm' for (m, m')
        rng = random.Random(41)
        for _ in range(30):
            P = rand_micro(rng, XI2, 2, 2, maxk=6, maxi=2)
            if P.is_zero() or not P.is_integral():
                continue
            low = membership_intermediate(P, 0).status
            high = membership_intermediate(P, 1).status
            if low == "InEmm'":
                assert high == "InEmm'"

    def test_undetermined_on_shallow_window(self):
        P = MicroOp(XI2, 1, 1, {((3,), 1): 1}, floor=2)
        assert membership_intermediate(P, 0).status == "Undetermined"

    def test_nonintegral_input(self):
        P = MicroOp(XI2, 1, 1, {((1,), 0): Fraction(1, 2)})
        assert membership_intermediate(P, 0).status == "NotInEm'"


class TestNormcalc:
    def test_frozen_thresholds(self):
        assert normcalc_bounds(1, 2, 0, 1, 5)["a_k"] == 0  # d p^(m'+1) = 4 < 5
        assert alpha_bound(0, 0, 2, 1) == 2
        assert normcalc_bounds(1, 2, 0, 2, 1)["b_k"] == 0  # k=1 < p^(m+1)

    def test_b_is_exact_shift_valuation(self):
        for p in (2, 3):
            for m in range(2):
                for mp in range(m, 3):
                    for k in range(0, 2 * p**mp + 8):
                        b = normcalc_bounds(1, p, m, mp, k)["b_k"]
                        v = valuation(level_shift_constant(k, p, mp, m), p)
                        assert v == -b

    @pytest.mark.parametrize("p", [2, 3])
    def test_a_bound_certifies_presentations(self, p):
        # p^(a_k) * D^<m><l> (T^(m,m'))^(-i) integral at level m' for order >= k
        for m in (0, 1):
            for mp in range(m, 3):
                korder = p**mp
                for k in range(0, 2 * korder + 1):
                    a_k = normcalc_bounds(1, p, m, mp, k)["a_k"]
                    obs = observed_a_bound(p, m, mp, k, imax=3)
                    assert obs <= a_k, (p, m, mp, k, obs, a_k)

    def test_zero_a_above_threshold(self):
        for p in (2, 3):
            for mp in (1, 2):
                k = p ** (mp + 1) + 1
                assert normcalc_bounds(1, p, 0, mp, k)["a_k"] == 0


class TestSerialization:
    def test_roundtrip_bit_exact(self):
        rng = random.Random(53)
        for _ in range(10):
            P = rand_micro(rng, XI2, 1, 2).truncate(-7)
            blob = json.dumps(P.to_json(), sort_keys=True)
            back = MicroOp.from_json(json.loads(blob))
            assert back.terms == P.terms
            assert back._meta() == P._meta()
            assert back.floor == P.floor
            assert json.dumps(back.to_json(), sort_keys=True) == blob
