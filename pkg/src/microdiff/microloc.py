"""Truncated microdifferential operators: presentations in negative powers of
a theta-tilde localizer, their arithmetic, inversion, level-lowering maps,
and membership tests for the intermediate rings.

A left presentation is   sum b_{k,i}(x) D^<m><k> T^(-i)
and a right presentation  sum T^(-i) D^<m><k> b_{k,i}(x),
where T is the theta-tilde operator at levels (m, m').  The order of the
(k, i) term is |k| - i*n*p^m'.  A value always represents a coset modulo
terms of order below the window floor L (and p-precision when set); equality
and all certificates are coset statements.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .diffop import DiffOp, ThetaTilde, build_theta_tilde
from .errors import (
    IncompatibleLocalizer,
    LevelMismatch,
    NotInvertibleAtSymbol,
    SymbolMismatch,
)
from .padic import level_factorial_ratio_exact, level_shift_constant, valuation
from .polynomials import Poly
from .pseudopoly import SymbolPoly

INF = math.inf


def term_order(k, i, n, p, mprime):
    return sum(k) - i * n * p**mprime


class MicroOp:
    """Microdifferential operator presented at level ``level`` with localizer
    theta-tilde at levels (level, mprime)."""

    __slots__ = (
        "p", "level", "mprime", "theta", "side", "d",
        "terms", "floor", "precision", "laurent",
    )

    def __init__(
        self,
        theta: SymbolPoly,
        level: int,
        mprime: int,
        terms=None,
        side: str = "left",
        floor=-INF,
        precision=None,
        laurent: bool = False,
    ):
        if theta.m != 0 or not theta.is_homogeneous() or theta.degree() < 1:
            raise ValueError("theta must be a level-0 homogeneous symbol, degree >= 1")
        if not 0 <= level <= mprime:
            raise ValueError("need 0 <= presentation level <= m'")
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        self.p = theta.p
        self.level = level
        self.mprime = mprime
        self.theta = theta
        self.side = side
        self.d = theta.d
        self.floor = floor
        self.precision = precision
        self.laurent = laurent
        n = theta.degree()
        clean = {}
        for (k, i), c in (terms or {}).items():
            k = tuple(int(e) for e in k)
            if i < 0:
                raise ValueError("negative localizer powers only (i >= 0)")
            if isinstance(c, (int, Fraction)):
                c = Poly.const(c, self.d)
            if c.is_zero():
                continue
            if term_order(k, i, n, self.p, mprime) < floor:
                continue
            key = (k, i)
            clean[key] = clean.get(key, Poly.zero(self.d)) + c
        self.terms = {key: c for key, c in clean.items() if not c.is_zero()}

    # -- basics -----------------------------------------------------------

    @property
    def n(self):
        return self.theta.degree()

    @property
    def localizer_order(self):
        return self.n * self.p**self.mprime

    def localizer(self) -> ThetaTilde:
        return build_theta_tilde(self.theta, self.level, self.mprime, self.side)

    def _meta(self):
        return (self.p, self.level, self.mprime, self.theta, self.side, self.d)

    def with_terms(self, terms, floor=None, precision="keep"):
        return MicroOp(
            self.theta,
            self.level,
            self.mprime,
            terms,
            self.side,
            self.floor if floor is None else floor,
            self.precision if precision == "keep" else precision,
            self.laurent,
        )

    @classmethod
    def from_diffop(
        cls, P: DiffOp, theta: SymbolPoly, mprime: int, floor=-INF, precision=None, laurent=False
    ):
        if (P.p, P.d) != (theta.p, theta.d):
            raise IncompatibleLocalizer("operator and theta live on different spaces")
        return cls(
            theta,
            P.m,
            mprime,
            {(k, 0): c for k, c in P.terms.items()},
            "left",
            floor,
            precision,
            laurent,
        )

    @classmethod
    def one(cls, theta, level, mprime, floor=-INF, **kw):
        return cls(theta, level, mprime, {((0,) * theta.d, 0): 1}, "left", floor, **kw)

    def is_zero(self):
        return not self.terms

    def order(self):
        if not self.terms:
            return -INF
        return max(term_order(k, i, self.n, self.p, self.mprime) for k, i in self.terms)

    def orders(self):
        return sorted(
            {term_order(k, i, self.n, self.p, self.mprime) for k, i in self.terms},
            reverse=True,
        )

    def order_part(self, N0):
        return {
            (k, i): c
            for (k, i), c in self.terms.items()
            if term_order(k, i, self.n, self.p, self.mprime) == N0
        }

    def p_valuation(self):
        if not self.terms:
            return INF
        return min(c.p_valuation(self.p) for c in self.terms.values())

    def is_integral(self):
        return self.is_zero() or self.p_valuation() >= 0

    def truncate(self, floor) -> "MicroOp":
        return self.with_terms(self.terms, floor=max(floor, self.floor))

    # -- additive structure -------------------------------------------------

    def _check(self, other: "MicroOp"):
        if self._meta() != other._meta():
            raise IncompatibleLocalizer(f"{self._meta()} vs {other._meta()}")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.with_terms({((0,) * self.d, 0): other}, floor=-INF)
        self._check(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, Poly.zero(self.d)) + c
        floor = max(self.floor, other.floor)
        prec = _min_prec(self.precision, other.precision)
        return self.with_terms(out, floor=floor, precision=prec)

    def __neg__(self):
        return self.with_terms({key: -c for key, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.with_terms({((0,) * self.d, 0): other}, floor=-INF)
        return self + (-other)

    def scale(self, c):
        if isinstance(c, (int, Fraction)):
            c = Poly.const(c, self.d)
        return self.with_terms({key: c * v for key, v in self.terms.items()})

    # -- canonical form -------------------------------------------------------

    def buckets(self):
        """dict i -> DiffOp of the (left-form) numerators."""
        out = {}
        for (k, i), c in self.terms.items():
            cur = out.get(i)
            add = DiffOp(self.p, self.level, self.d, {k: c})
            out[i] = add if cur is None else cur + add
        return {i: op for i, op in out.items() if not op.is_zero()}

    def canonical(self) -> "MicroOp":
        """Divide each bucket's top symbol by the localizer symbol as far as
        possible, moving quotients to lower denominator powers.  Deterministic;
        makes T * T^(-1) literally 1."""
        if self.side != "left":
            return self  # canonical form defined on left presentations
        T = self.localizer().op
        sT = T.symbol_exact()
        if len(sT.terms) != 1:
            return self
        ((kT, cT),) = sT.terms.items()
        buckets = self.buckets()
        if not buckets:
            return self
        for i in range(max(buckets), 0, -1):
            B = buckets.get(i)
            if B is None:
                continue
            while B is not None and not B.is_zero():
                h = _divide_symbol_top(B, kT, cT, self.p, self.level, self.d, self.laurent)
                if h is None:
                    break
                B = B - h * T
                lower = buckets.get(i - 1, DiffOp.zero(self.p, self.level, self.d)) + h
                buckets[i - 1] = lower
            if B is None or B.is_zero():
                buckets.pop(i, None)
            else:
                buckets[i] = B
        terms = {}
        for i, op in buckets.items():
            if op.is_zero():
                continue
            for k, c in op.terms.items():
                terms[(k, i)] = c
        return self.with_terms(terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.with_terms({((0,) * self.d, 0): other}, floor=-INF)
        if not isinstance(other, MicroOp) or self._meta() != other._meta():
            return False
        floor = max(self.floor, other.floor)
        a = self.canonical().truncate(floor)
        b = other.canonical().truncate(floor)
        return a.terms == b.terms

    def __hash__(self):
        c = self.canonical()
        return hash((c._meta(), frozenset((k, i) for k, i in c.terms)))

    def __str__(self):
        if not self.terms:
            return "0"
        from .diffop import render_diffop

        parts = []
        for (k, i) in sorted(
            self.terms,
            key=lambda ki: (-term_order(ki[0], ki[1], self.n, self.p, self.mprime), ki[1], ki[0]),
        ):
            c = self.terms[(k, i)]
            base = render_diffop(DiffOp(self.p, self.level, self.d, {k: c}))
            if i:
                part = f"({base})*T^-{i}" if self.side == "left" else f"T^-{i}*({base})"
            else:
                part = base
            parts.append(part)
        return " + ".join(parts)

    __repr__ = __str__

    # -- serialization -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "schema": "microdiff-microop/1",
            "p": self.p,
            "level": self.level,
            "mprime": self.mprime,
            "d": self.d,
            "side": self.side,
            "laurent": self.laurent,
            "floor": None if self.floor == -INF else self.floor,
            "precision": self.precision,
            "theta": _poly_terms_json({k: c for k, c in self.theta.terms.items()}),
            "terms": [
                {"k": list(k), "i": i, "coeff": _poly_json(c)}
                for (k, i), c in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_json(cls, data: dict, p=None) -> "MicroOp":
        p = data["p"]
        d = data["d"]
        theta = SymbolPoly(
            p, 0, d, {tuple(k): poly for k, poly in _poly_terms_unjson(data["theta"], d)}
        )
        terms = {
            (tuple(t["k"]), t["i"]): _poly_unjson(t["coeff"], d) for t in data["terms"]
        }
        return cls(
            theta,
            data["level"],
            data["mprime"],
            terms,
            data["side"],
            -INF if data["floor"] is None else data["floor"],
            data["precision"],
            data["laurent"],
        )


def _min_prec(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _poly_json(c: Poly):
    return [[list(e), str(v)] for e, v in sorted(c.coeffs.items())]


def _poly_unjson(data, d):
    return Poly(d, {tuple(e): Fraction(v) for e, v in data})


def _poly_terms_json(terms):
    return [[list(k), _poly_json(c)] for k, c in sorted(terms.items())]


def _poly_terms_unjson(data, d):
    return [(tuple(k), _poly_unjson(c, d)) for k, c in data]


def _divide_symbol_top(B: DiffOp, kT, cT: Poly, p, m, d, laurent):
    """Quotient h (a DiffOp lift) with sigma(h)*sigma(T) = sigma(B), or None."""
    from .padic import binomial_structure_constant_exact

    sB = B.symbol_exact()
    out = {}
    for k, b in sB.terms.items():
        kq = tuple(a - t for a, t in zip(k, kT))
        if any(e < 0 for e in kq):
            return None
        const = binomial_structure_constant_exact(p, m, kq, kT)
        q = b.divide_exact(cT.scale(const), laurent)
        if q is None:
            return None
        out[kq] = q
    return DiffOp(p, m, d, out)


# -- commutation engine -------------------------------------------------------


def _push_once(T: DiffOp, cur: dict, remaining: int, floor, korder: int, signed: bool):
    """One application of T^(-1) to a presentation dict t -> D_t.

    signed=True expands T^(-1) D = sum_s (-1)^s ad_T^s(D) T^(-s-1) (left pass);
    signed=False expands D T^(-1) = sum_s T^(-s-1) ad_T^s(D) (right pass).
    Terms whose order cannot reach the floor after the remaining applications
    are pruned.
    """
    nxt = {}
    for t, D in cur.items():
        c = D
        s = 0
        while not c.is_zero():
            if floor != -INF and c.order() - (t + s + 1 + remaining) * korder < floor:
                break
            if floor == -INF and s > 4 * (abs(D.order()) + D.max_xdeg() + 8):
                raise ValueError(
                    "commutation series does not terminate; a finite window floor is required"
                )
            piece = c if (s % 2 == 0 or not signed) else -c
            key = t + s + 1
            nxt[key] = nxt.get(key, DiffOp.zero(D.p, D.m, D.d)) + piece
            c = T.commutator(c)
            s += 1
    return {t: D for t, D in nxt.items() if not D.is_zero()}


def _push_left(T: DiffOp, i: int, Q: DiffOp, floor, korder: int):
    """T^(-i) * Q = sum_t D_t T^(-t) modulo order < floor.

    korder is the order of T; applies T^(-1) Q = sum_s (-1)^s ad_T^s(Q)
    T^(-s-1) once per pass, i passes in total.
    """
    if Q.is_zero():
        return {}
    cur = {0: Q}
    for j in range(i, 0, -1):
        cur = _push_once(T, cur, j - 1, floor, korder, signed=True)
    return cur


def _push_right(T: DiffOp, i: int, Q: DiffOp, floor, korder: int):
    """Q * T^(-i) = sum_t T^(-t) D_t modulo order < floor.

    Uses Q T^(-1) = sum_s T^(-s-1) ad_T^s(Q), one pass per power of T."""
    if Q.is_zero():
        return {}
    cur = {0: Q}
    for j in range(i, 0, -1):
        cur = _push_once(T, cur, j - 1, floor, korder, signed=False)
    return cur


def _right_decompose(D: DiffOp) -> dict:
    """Write D = sum_k D^<m><k> b_k; returns dict k -> b_k."""
    out = {}
    rest = D
    while not rest.is_zero():
        n = rest.order()
        top = {k: c for k, c in rest.terms.items() if sum(k) == n}
        sub = DiffOp.zero(D.p, D.m, D.d)
        for k, c in top.items():
            out[k] = out.get(k, Poly.zero(D.d)) + c
            mono = DiffOp(D.p, D.m, D.d, {k: Poly.const(1, D.d)})
            sub = sub + mono * DiffOp.from_poly(c, D.p, D.m)
        rest = rest - sub
    return {k: c for k, c in out.items() if not c.is_zero()}


def micro_multiply(P: MicroOp, Q: MicroOp) -> MicroOp:
    """Product, presented on P's side, truncated to the combined window."""
    P._check(Q)
    if P.side != "left":
        return convert_presentation(
            micro_multiply(convert_presentation(P, "left"), convert_presentation(Q, "left")),
            P.side,
        )
    T = P.localizer().op
    korder = P.localizer_order
    if P.is_zero() or Q.is_zero():
        floor = max(P.floor, Q.floor)
        return P.with_terms({}, floor=floor, precision=_min_prec(P.precision, Q.precision))
    floor = max(
        (P.floor + Q.order()) if P.floor != -INF else -INF,
        (Q.floor + P.order()) if Q.floor != -INF else -INF,
    )
    out = {}
    for (k1, i1), b1 in P.terms.items():
        left = DiffOp(P.p, P.level, P.d, {k1: b1})
        for (k2, i2), b2 in Q.terms.items():
            right = DiffOp(P.p, P.level, P.d, {k2: b2})
            sub_floor = floor
            if sub_floor != -INF:
                sub_floor = floor + i2 * korder  # the T^(-i2) tail shifts orders down
            pushed = _push_left(T, i1, right, sub_floor, korder)
            for t, D in pushed.items():
                prod = left * D
                i = t + i2
                for k, c in prod.terms.items():
                    key = (k, i)
                    out[key] = out.get(key, Poly.zero(P.d)) + c
    return MicroOp(
        P.theta, P.level, P.mprime, out, "left", floor,
        _min_prec(P.precision, Q.precision), P.laurent or Q.laurent,
    ).canonical()


def convert_presentation(P: MicroOp, target_side: str) -> MicroOp:
    """Rewrite on the other side; same coset up to the window floor."""
    if target_side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if P.side == target_side:
        return P
    T_left = build_theta_tilde(P.theta, P.level, P.mprime, "left").op
    T_right = build_theta_tilde(P.theta, P.level, P.mprime, "right").op
    korder = P.localizer_order
    out = {}
    if target_side == "left":
        # input right: T^(-i) D^<k> b  ->  push T^(-i) through
        for (k, i), b in P.terms.items():
            Q = DiffOp(P.p, P.level, P.d, {k: Poly.const(1, P.d)}) * DiffOp.from_poly(b, P.p, P.level)
            for t, D in _push_left(T_right, i, Q, P.floor, korder).items():
                for kk, c in D.terms.items():
                    key = (kk, t)
                    out[key] = out.get(key, Poly.zero(P.d)) + c
    else:
        # input left: b D^<k> T^(-i)  ->  push T^(-i) to the left, then
        # right-decompose the numerators
        for (k, i), b in P.terms.items():
            Q = DiffOp(P.p, P.level, P.d, {k: b})
            for t, D in _push_right(T_left, i, Q, P.floor, korder).items():
                for kk, c in _right_decompose(D).items():
                    key = (kk, t)
                    out[key] = out.get(key, Poly.zero(P.d)) + c
    return MicroOp(
        P.theta, P.level, P.mprime, out, target_side, P.floor, P.precision, P.laurent
    )


# -- inversion --------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceProfile:
    """Per-order spectral-size exponents beta (|b| = p^beta), with verdict."""

    betas: dict  # order -> max exponent of |coefficient|
    bounded: bool
    note: str = ""


def validate_convergence(P: MicroOp) -> ConvergenceProfile:
    if P.is_zero():
        return ConvergenceProfile({}, True, "zero operator: empty profile")
    betas = {}
    for N0 in P.orders():
        v = min(c.p_valuation(P.p) for c in P.order_part(N0).values())
        betas[N0] = -v
    orders = sorted(betas, reverse=True)
    # growth detection: a non-decreasing beta staircase with total growth >= 2
    # is evidence of unboundedness in the window.  Orders within one localizer
    # order of the floor are trimmed (truncation boundary artifacts).
    trimmed = orders
    if P.floor != -INF:
        trimmed = [N0 for N0 in orders if N0 >= P.floor + P.localizer_order]
    vals = [betas[N0] for N0 in trimmed]
    growing = (
        len(vals) >= 3
        and all(a <= b for a, b in zip(vals, vals[1:]))
        and vals[-1] - vals[0] >= 2
        and vals[-1] > 0
    )
    if growing:
        return ConvergenceProfile(
            betas, False, "beta grows steadily toward the window floor"
        )
    note = "finite presentation: limit conditions vacuous" if P.floor == -INF else ""
    return ConvergenceProfile(betas, True, note)


@dataclass(frozen=True)
class InversionReport:
    ok: bool
    inverse: object  # MicroOp or None
    profile: ConvergenceProfile
    left_residual_below_floor: bool
    right_residual_below_floor: bool
    note: str = ""


def invert_theta_tilde(
    theta: SymbolPoly, level: int, mprime: int, floor, precision=None, laurent=False
) -> MicroOp:
    """The inverse of the theta-tilde localizer itself, as a single-term
    presentation; coefficient of theta must be a unit on the chart."""
    for c in theta.terms.values():
        if c.is_constant():
            continue
        if laurent and len(c.coeffs) == 1:
            continue
        raise NotInvertibleAtSymbol(
            f"theta coefficient {c} is not a unit on the chart"
            + ("" if laurent else " (monomials need a monomial-unit chart)")
        )
    return MicroOp(
        theta, level, mprime, {((0,) * theta.d, 1): 1}, "left", floor, precision, laurent
    )


def try_invert(
    P, theta: SymbolPoly, mprime: int, floor, precision=None, laurent=False
) -> InversionReport:
    """Invert P in the microlocalized ring at (P.m, mprime) on D(theta).

    P may be a DiffOp or a left-presented MicroOp.  sigma(P) must be a single
    monomial with unit coefficient on the chart; otherwise SymbolMismatch.
    Success returns a two-sided inverse plus residual certificates; an
    unbounded convergence profile is reported as a failed verdict with the
    partial expansion attached (evidence, not proof).
    """
    if isinstance(P, DiffOp):
        P = MicroOp.from_diffop(P, theta, mprime, laurent=laurent)
    if P.is_zero():
        raise SymbolMismatch("the zero operator is not invertible")
    if floor == -INF:
        raise ValueError("inversion requires a finite window floor")
    laurent = laurent or P.laurent
    n = theta.degree()
    korder = P.localizer_order
    w = P.order()
    top = P.order_part(w)
    if len(top) != 1:
        raise SymbolMismatch("top symbol is not a single monomial")
    ((k0, i0r),) = top.keys()
    c0 = top[(k0, i0r)]
    if not (c0.is_constant() or (laurent and len(c0.coeffs) == 1)):
        raise SymbolMismatch(f"top coefficient {c0} is not a unit on the chart")
    if P.d != 1:
        raise SymbolMismatch("inversion is implemented for d = 1")
    # first approximation: monomial S0 of order -w with P*S0 = 1 + (order < 0)
    t = max(0, -(-w // korder))  # ceil(w / korder), at least 0
    ks = t * korder - w
    S0 = P.with_terms({((ks,), t): 1}, floor=floor, precision=precision)
    R = micro_multiply(P.truncate(floor), S0)
    gamma = R.order_part(0)
    if list(gamma.keys()) != [((0,) * P.d, 0)]:
        raise SymbolMismatch("leading product term is not scalar")
    g = gamma[((0,) * P.d, 0)]
    ginv = Poly.const(1, P.d).divide_exact(g, laurent)
    if ginv is None:
        raise SymbolMismatch(f"leading coefficient {g} is not invertible on the chart")
    S0 = S0.scale(ginv)
    one = MicroOp.one(theta, P.level, mprime, floor=floor, precision=precision, laurent=laurent)
    e = micro_multiply(P.truncate(floor), S0) - one
    # geometric series (1+e)^(-1) = sum (-e)^t down to the floor
    acc = one
    termop = one
    while True:
        termop = micro_multiply(termop, -e)
        if termop.is_zero() or termop.order() < floor:
            break
        acc = acc + termop
    S = micro_multiply(S0, acc)
    # certificates: no residual term above the residual's own (drifted) floor
    left_res = micro_multiply(P.truncate(floor), S) - one
    right_res = micro_multiply(S, P.truncate(floor)) - one
    lok = left_res.truncate(left_res.floor + 1).canonical().is_zero()
    rok = right_res.truncate(right_res.floor + 1).canonical().is_zero()
    profile = validate_convergence(S)
    ok = lok and rok and profile.bounded
    note = "" if ok else (
        "unbounded convergence profile in window" if not profile.bounded else "residual above floor"
    )
    return InversionReport(ok, S, profile, lok, rok, note)


# -- level comparison ----------------------------------------------------------------


def change_presentation_level(P: MicroOp, new_level: int) -> MicroOp:
    """Rewrite the presentation at another lower level <= m' (exact over Q).

    D^<old><k> = (q^(old)!/q^(new)!) D^<new><k>, and the localizer ratios are
    powers of the level factorial constants r; order-preserving and strict.
    """
    if not 0 <= new_level <= P.mprime:
        raise LevelMismatch("presentation level must lie in [0, m']")
    if new_level == P.level:
        return P
    n = P.n
    gamma_old = level_factorial_ratio_exact(P.p, P.level, P.mprime) ** n
    gamma_new = level_factorial_ratio_exact(P.p, new_level, P.mprime) ** n
    ratio = gamma_new / gamma_old  # (T_old)^(-i) = ratio^i (T_new)^(-i)
    out = {}
    for (k, i), b in P.terms.items():
        const = ratio**i
        for kj in k:
            const *= level_shift_constant(kj, P.p, P.level, new_level)
        out[(k, i)] = b.scale(const)
    return MicroOp(
        P.theta, new_level, P.mprime, out, P.side, P.floor, P.precision, P.laurent
    )


def psi_level_lower(P: MicroOp, m: int) -> MicroOp:
    """The level-lowering map psi_{m,m'}: rewrite an (l, m')-presentation at
    level m <= l; exact over Q, order-preserving."""
    if m > P.level:
        raise LevelMismatch("psi only lowers the level")
    return change_presentation_level(P, m)


@dataclass(frozen=True)
class MembershipVerdict:
    status: str  # "InEmm'" | "OnlyInEm'" | "Undetermined" | "NotInEm'"
    witness: str


def membership_intermediate(P: MicroOp, m: int) -> MembershipVerdict:
    """Membership of P (presented at level m') in the intermediate ring
    E^(m,m'): needs (a) p-integrality at level m' and (b) p-integrality of the
    psi image at level m for all orders >= 0 (negative orders are automatic)."""
    mprime = P.level
    Pc = P.canonical()
    if not Pc.is_integral():
        bad = min(
            (c.p_valuation(P.p), (k, i)) for (k, i), c in Pc.terms.items()
        )
        return MembershipVerdict(
            "NotInEm'", f"level-{mprime} coefficient at {bad[1]} has valuation {bad[0]}"
        )
    if Pc.floor > 0:
        # orders < 0 never matter (E^(m,m')_0 = E^(m')_0), so truncation is
        # only blocking when the window fails to reach order 0
        return MembershipVerdict(
            "Undetermined", f"window floor {Pc.floor} hides orders in [0, {Pc.floor})"
        )
    image = psi_level_lower(Pc, m)
    worst = None
    for (k, i), c in image.canonical().terms.items():
        if term_order(k, i, P.n, P.p, P.mprime) < 0:
            continue  # automatic: E^(m,m')_0 = E^(m')_0
        v = c.p_valuation(P.p)
        if v < 0 and (worst is None or v < worst[0]):
            worst = (v, (k, i))
    if worst is not None:
        return MembershipVerdict(
            "OnlyInEm'",
            f"psi image term {worst[1]} has valuation {worst[0]} at order >= 0",
        )
    return MembershipVerdict("InEmm'", "integral at level m' and psi image integral for orders >= 0")


# -- norm bounds -----------------------------------------------------------------


def alpha_bound(k: int, m: int, p: int, d: int = 1) -> int:
    """alpha_{k,m,1} = max(0, floor(d - k p^(-(m+1)) + 1))."""
    val = math.floor(Fraction(d) - Fraction(k, p ** (m + 1)) + 1)
    return max(0, val)


def normcalc_bounds(d: int, p: int, m: int, mprime: int, k: int) -> dict:
    """Closed-form denominator bounds for the (m, m') comparison at order k.

    a_k bounds the p-power needed to make terms of order >= k integral in the
    level-m' presentation; b_k the converse direction.  a_k = 0 once
    d*p^(m'+1) < k, and b_k = 0 for k < p^(m+1).
    """
    if not 0 <= m <= mprime:
        raise ValueError("need 0 <= m <= m'")
    alphas = {s: alpha_bound(k, s, p, d) for s in range(m, mprime)}
    if d * p ** (mprime + 1) < k:
        a_k = 0
    else:
        a_k = sum(alphas.values())
    b_k = sum(k // p**i for i in range(m + 1, mprime + 1))
    return {"a_k": a_k, "b_k": b_k, "alpha": alphas}


def observed_a_bound(p: int, m: int, mprime: int, k: int, theta=None, imax: int = 3, lmax=None) -> int:
    """Empirical tightener: largest denominator exponent seen in level-m'
    presentations of D^<m><l> (T^(m,m'))^(-i) over terms of order >= k."""
    if theta is None:
        theta = SymbolPoly.xi(p, 0)
    n = theta.degree()
    korder = n * p**mprime
    if lmax is None:
        lmax = 2 * korder
    worst = 0
    for i in range(imax + 1):
        for l in range(lmax + 1):
            if l - i * korder < k:
                continue
            P = MicroOp(theta, m, mprime, {((l,), i): 1})
            v = change_presentation_level(P, mprime).p_valuation()
            if v < 0:
                worst = max(worst, -v)
    return worst
