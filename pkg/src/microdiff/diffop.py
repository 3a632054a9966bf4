"""Level-m rings of differential operators on affine d-space.

Operators are stored as sums a_k(x) * D^<m><k> over the divided basis
defined by k! D^<m><k> = q_k! D^k (k = p^m q + r, 0 <= r < p^m).
Multiplication lifts to the plain D^k basis over Q, applies the Leibniz
rule there, and re-expresses the product in the level-m basis; when both
factors are p-integral the result is certified p-integral.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    IntegralityViolation,
    LevelMismatch,
    NotHomogeneous,
    NotIntegral,
    SearchBoundExceeded,
    ZeroOperator,
)
from .padic import divided_lift, level_shift_constant, valuation
from .polynomials import Poly
from .pseudopoly import SymbolPoly

INF = math.inf


class DiffOp:
    """Sum of a_k(x) * D^<m><k>, a_k Laurent polynomials over Q."""

    __slots__ = ("p", "m", "d", "terms")

    def __init__(self, p: int, m: int, d: int, terms=None):
        self.p = p
        self.m = m
        self.d = d
        clean = {}
        for k, c in (terms or {}).items():
            k = tuple(int(e) for e in k)
            if len(k) != d or any(e < 0 for e in k):
                raise ValueError(f"bad derivative exponent {k}")
            if isinstance(c, (int, Fraction)):
                c = Poly.const(c, d)
            if not c.is_zero():
                clean[k] = c
        self.terms = clean

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, p, m, d=1):
        return cls(p, m, d, {})

    @classmethod
    def one(cls, p, m, d=1):
        return cls(p, m, d, {(0,) * d: Poly.const(1, d)})

    @classmethod
    def scalar(cls, c, p, m, d=1):
        return cls(p, m, d, {(0,) * d: Poly.const(c, d)})

    @classmethod
    def from_poly(cls, a: Poly, p, m):
        return cls(p, m, a.nvars, {(0,) * a.nvars: a})

    @classmethod
    def x(cls, p, m, j=0, d=1, power=1):
        return cls(p, m, d, {(0,) * d: Poly.var(j, d, power)})

    @classmethod
    def dx(cls, p, m, k=1, j=0, d=1):
        """The basis element D_j^<m><k>."""
        exp = [0] * d
        exp[j] = k
        return cls(p, m, d, {tuple(exp): Poly.const(1, d)})

    # -- views -------------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def order(self):
        if not self.terms:
            return -INF
        return max(sum(k) for k in self.terms)

    def p_valuation(self):
        if not self.terms:
            return INF
        return min(c.p_valuation(self.p) for c in self.terms.values())

    def is_integral(self):
        return self.is_zero() or self.p_valuation() >= 0

    def coefficient(self, k) -> Poly:
        return self.terms.get(tuple(k), Poly.zero(self.d))

    def max_xdeg(self):
        if not self.terms:
            return -INF
        return max(c.degree(j) for c in self.terms.values() for j in range(self.d))

    # -- additive structure --------------------------------------------------

    def _check(self, other):
        if (self.p, self.m, self.d) != (other.p, other.m, other.d):
            raise LevelMismatch(
                f"(p,m,d)={(self.p, self.m, self.d)} vs {(other.p, other.m, other.d)}"
            )

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Poly.zero(self.d)) + c
        return DiffOp(self.p, self.m, self.d, out)

    def __neg__(self):
        return DiffOp(self.p, self.m, self.d, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        if isinstance(c, (int, Fraction)):
            c = Poly.const(c, self.d)
        return DiffOp(self.p, self.m, self.d, {k: c * v for k, v in self.terms.items()})

    # -- multiplication --------------------------------------------------------

    def to_plain(self) -> dict:
        """Lift to the plain basis: dict k -> Poly with P = sum c_k(x) D^k."""
        out = {}
        for k, c in self.terms.items():
            const = Fraction(1)
            for kj in k:
                const *= divided_lift(kj, self.p, self.m)
            out[k] = out.get(k, Poly.zero(self.d)) + c.scale(const)
        return out

    @classmethod
    def from_plain(cls, plain: dict, p: int, m: int, d: int) -> "DiffOp":
        terms = {}
        for k, c in plain.items():
            const = Fraction(1)
            for kj in k:
                const *= divided_lift(kj, p, m)
            terms[k] = c.scale(1 / const)
        return cls(p, m, d, terms)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            return self.scale(other)
        self._check(other)
        both_integral = self.is_integral() and other.is_integral()
        a_plain = self.to_plain()
        b_plain = other.to_plain()
        prod = {}
        for K, a in a_plain.items():
            for L, b in b_plain.items():
                # (a D^K)(b D^L) = sum_{J <= K} binom(K,J) a * D^J(b) * D^(K-J+L)
                ranges = [range(kj + 1) for kj in K]
                for J in itertools.product(*ranges):
                    db = b
                    for j, Jj in enumerate(J):
                        for _ in range(Jj):
                            db = db.derivative(j)
                        if db.is_zero():
                            break
                    if db.is_zero():
                        continue
                    binom = 1
                    for kj, jj in zip(K, J):
                        binom *= math.comb(kj, jj)
                    M = tuple(kj - jj + lj for kj, jj, lj in zip(K, J, L))
                    add = (a * db).scale(binom)
                    prod[M] = prod.get(M, Poly.zero(self.d)) + add
        out = DiffOp.from_plain(prod, self.p, self.m, self.d)
        if both_integral and not out.is_integral():
            raise IntegralityViolation("product of integral operators not integral")
        return out

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power")
        out = DiffOp.one(self.p, self.m, self.d)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def commutator(self, other):
        return self * other - other * self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = DiffOp.scalar(other, self.p, self.m, self.d)
        return (
            isinstance(other, DiffOp)
            and (self.p, self.m, self.d) == (other.p, other.m, other.d)
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.p, self.m, self.d, frozenset(self.terms.items())))

    # -- action, symbols, reductions ---------------------------------------------

    def apply(self, f: Poly) -> Poly:
        """Act on a polynomial (through the rational lift)."""
        out = Poly.zero(self.d)
        for k, c in self.to_plain().items():
            g = f
            for j, kj in enumerate(k):
                for _ in range(kj):
                    g = g.derivative(j)
            out = out + c * g
        return out

    def symbol_exact(self) -> SymbolPoly:
        """Top homogeneous part as a symbol over Q (no mod-p reduction)."""
        if self.is_zero():
            return SymbolPoly.zero(self.p, self.m, self.d)
        n = self.order()
        return SymbolPoly(
            self.p, self.m, self.d, {k: c for k, c in self.terms.items() if sum(k) == n}
        )

    def level_shift(self, mprime: int) -> "DiffOp":
        """Re-express in the level-m' basis over Q (exact, any direction):
        D^<m><k> = (q_k^(m)!/q_k^(m')!) D^<m'><k>."""
        out = {}
        for k, c in self.terms.items():
            const = Fraction(1)
            for kj in k:
                const *= level_shift_constant(kj, self.p, self.m, mprime)
            out[k] = c.scale(const)
        return DiffOp(self.p, mprime, self.d, out)


@dataclass(frozen=True)
class OrderSymbol:
    order: int
    symbol: SymbolPoly  # top symbol over the special fiber (mod p)
    secondary: object  # None, or (order, symbol) of the first nonvanishing reduction


def order_and_symbol(P: DiffOp) -> OrderSymbol:
    """Order and principal symbol over the special fiber.

    When the top symbol vanishes mod p, a secondary (order, symbol) pair of
    the mod-p reduction of P is reported.
    """
    if P.is_zero():
        raise ZeroOperator("the zero operator has no principal symbol")
    if not P.is_integral():
        raise NotIntegral("mod-p symbol needs p-integral coefficients")
    n = P.order()
    top = P.symbol_exact().mod_p()
    secondary = None
    if top.is_zero():
        red = DiffOp(
            P.p, P.m, P.d, {k: c.mod_p(P.p) for k, c in P.terms.items()}
        )
        if not red.is_zero():
            secondary = (red.order(), red.symbol_exact())
    return OrderSymbol(n, top, secondary)


def level_map_phi(P: DiffOp, mprime: int) -> DiffOp:
    """The canonical ring map into level m' >= m; stays p-integral."""
    if mprime < P.m:
        raise LevelMismatch("phi only raises the level; use level_shift over Q")
    return P.level_shift(mprime)


def reduce_mod(P: DiffOp, i: int) -> DiffOp:
    """Coefficient-wise reduction mod p^(i+1) (canonical lift back to Z)."""
    if not P.is_integral():
        raise NotIntegral("operator has a p in a denominator")
    mod = P.p ** (i + 1)

    def red(c: Fraction) -> Fraction:
        return Fraction(c.numerator * pow(c.denominator, -1, mod) % mod)

    return DiffOp(P.p, P.m, P.d, {k: c.map_coeffs(red) for k, c in P.terms.items()})


@dataclass(frozen=True)
class ThetaTilde:
    """The lift of a theta symbol to a differential operator localizer."""

    side: str  # "left" | "right"
    op: DiffOp
    theta: SymbolPoly  # level-0 homogeneous symbol
    m: int
    mprime: int
    n: int  # degree of theta

    @property
    def order(self):
        return self.n * self.theta.p**self.mprime


def build_theta_tilde(theta: SymbolPoly, m: int, mprime: int, side: str = "left") -> ThetaTilde:
    """Theta-tilde at levels (m, m'): sum over terms a_k xi^k of theta of
    a_k^(p^m') times prod_j (D_j^<m><p^m>)^(k_j p^(m'-m)), coefficient on the
    requested side."""
    if theta.m != 0:
        raise LevelMismatch("theta must be a level-0 symbol")
    if theta.is_zero() or not theta.is_homogeneous() or theta.degree() < 1:
        raise NotHomogeneous("theta must be nonzero homogeneous of degree >= 1")
    if not 0 <= m <= mprime:
        raise ValueError("need 0 <= m <= m'")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    p, d = theta.p, theta.d
    n = theta.degree()
    q = p**mprime
    j = mprime - m
    total = DiffOp.zero(p, m, d)
    for k, a in theta.terms.items():
        mono = DiffOp.one(p, m, d)
        for coord, kj in enumerate(k):
            if kj:
                mono = mono * DiffOp.dx(p, m, p**m, coord, d) ** (kj * p**j)
        coeff = DiffOp.from_poly(a**q, p, m)
        total = total + (coeff * mono if side == "left" else mono * coeff)
    return ThetaTilde(side, total, theta, m, mprime, n)


def central_level_for(
    theta: SymbolPoly, m: int, i: int, search_bound: int = 6
) -> int:
    """Least m' <= search_bound such that theta-tilde^(m,m') commutes with
    x_j and with D_j^<m><p^s> (s <= m) modulo p^(i+1)."""
    p, d = theta.p, theta.d
    gens = []
    for j in range(d):
        gens.append(DiffOp.x(p, m, j, d))
        for s in range(m + 1):
            gens.append(DiffOp.dx(p, m, p**s, j, d))
    for mprime in range(m, search_bound + 1):
        tt = build_theta_tilde(theta, m, mprime, "left").op
        if all(tt.commutator(g).p_valuation() >= i + 1 for g in gens):
            return mprime
    raise SearchBoundExceeded(
        f"no central level found with m' <= {search_bound} (existence not refuted)"
    )


def render_diffop(P: DiffOp) -> str:
    if P.is_zero():
        return "0"
    parts = []
    for k in sorted(P.terms, key=lambda e: (sum(e), e)):
        c = P.terms[k]
        gens = []
        for j, kj in enumerate(k):
            if kj == 0:
                continue
            if P.m == 0:
                gens.append(f"d{j + 1}" if kj == 1 else f"d{j + 1}^{kj}")
            else:
                gens.append(f"D{j + 1}[{P.m},{kj}]")
        mono = "*".join(gens)
        cs = str(c).replace("x", "x1") if P.d == 1 else str(c)
        if not mono:
            parts.append(cs)
        elif cs == "1":
            parts.append(mono)
        else:
            cs = f"({cs})" if ("+" in cs or "-" in cs[1:]) else cs
            parts.append(f"{cs}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")
