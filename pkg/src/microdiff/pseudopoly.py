"""Level-m pseudo-polynomial algebras: the commutative graded rings where
principal symbols of level-m differential operators live.

For each level m the algebra is generated over the coefficient ring by
xi_j^<m><p^i> for i = 0..m, subject to

    (xi_j^<m><p^i>)^p = ((p^(i+1))! / (p^i!)^p) * xi_j^<m><p^(i+1)>.

Internally everything is stored in the <m><k>-basis (one generator
xi_j^<m><k> per exponent k, with k! xi^<m><k> = q_k! xi^k under the rational
lift); the digit presentation (c_0,...,c_m) is available for display and for
mod-p computations, the two being equal up to explicit p-adic units.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import LevelMismatch, NotHomogeneous
from .padic import (
    binomial_structure_constant_exact,
    divided_lift,
    level_shift_constant,
    q_part,
    valuation,
)
from .polynomials import Poly

INF = math.inf


def digit_decomposition(k: int, p: int, m: int):
    """Digits (c_0,...,c_m) of k with c_i < p for i < m, c_m unbounded."""
    digits = []
    for _ in range(m):
        digits.append(k % p)
        k //= p
    digits.append(k)
    return tuple(digits)


def digits_to_k(digits, p: int) -> int:
    return sum(c * p**i for i, c in enumerate(digits))


def digit_monomial_constant(digits, p: int, m: int) -> Fraction:
    """Exact u with prod_i (xi^<m><p^i>)^(c_i) = u * xi^<m><k>, k = sum c_i p^i.

    Valid for arbitrary nonnegative digits (overflowing ones included); digit
    carries are absorbed into the constant.
    """
    if len(digits) != m + 1:
        raise ValueError("need one digit per generator index 0..m")
    k = digits_to_k(digits, p)
    u = Fraction(1)
    for i, c in enumerate(digits):
        u *= divided_lift(p**i, p, m) ** c
    return u / divided_lift(k, p, m)


def digit_form(k: int, p: int, m: int):
    """Normal-form digits of xi^<m><k> and the unit u with
    digit-monomial = u * xi^<m><k>."""
    digits = digit_decomposition(k, p, m)
    u = digit_monomial_constant(digits, p, m)
    assert valuation(u, p) == 0, "normal-form conversion constant must be a unit"
    return digits, u


class SymbolPoly:
    """Element of the level-m pseudo-polynomial algebra in d variables.

    ``terms`` maps exponent multi-indices k (length-d tuples) to Poly
    coefficients in x_1..x_d; the term is coeff * prod_j xi_j^<m><k_j>.
    The degree of that term is |k| = sum k_j.
    """

    __slots__ = ("p", "m", "d", "terms")

    def __init__(self, p: int, m: int, d: int, terms=None):
        self.p = p
        self.m = m
        self.d = d
        clean = {}
        for k, c in (terms or {}).items():
            k = tuple(int(e) for e in k)
            if len(k) != d or any(e < 0 for e in k):
                raise ValueError(f"bad exponent {k}")
            if isinstance(c, (int, Fraction)):
                c = Poly.const(c, d)
            if not c.is_zero():
                clean[k] = clean.get(k, Poly.zero(d)) + c if k in clean else c
        self.terms = {k: c for k, c in clean.items() if not c.is_zero()}

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, p, m, d=1):
        return cls(p, m, d, {})

    @classmethod
    def one(cls, p, m, d=1):
        return cls(p, m, d, {(0,) * d: Poly.const(1, d)})

    @classmethod
    def xi(cls, p, m, k=1, j=0, d=1):
        """The basis element xi_j^<m><k>."""
        exp = [0] * d
        exp[j] = k
        return cls(p, m, d, {tuple(exp): Poly.const(1, d)})

    # -- views ------------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def degree(self):
        if not self.terms:
            return -INF
        return max(sum(k) for k in self.terms)

    def homogeneous_part(self, n):
        return SymbolPoly(
            self.p, self.m, self.d, {k: c for k, c in self.terms.items() if sum(k) == n}
        )

    def is_homogeneous(self):
        degs = {sum(k) for k in self.terms}
        return len(degs) <= 1

    def top_part(self):
        return self.homogeneous_part(self.degree()) if self.terms else self

    def p_valuation(self):
        if not self.terms:
            return INF
        return min(c.p_valuation(self.p) for c in self.terms.values())

    def coefficient(self, k) -> Poly:
        return self.terms.get(tuple(k), Poly.zero(self.d))

    # -- ring operations ---------------------------------------------------

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
        return SymbolPoly(self.p, self.m, self.d, out)

    def __neg__(self):
        return SymbolPoly(self.p, self.m, self.d, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        if isinstance(c, (int, Fraction)):
            c = Poly.const(c, self.d)
        return SymbolPoly(self.p, self.m, self.d, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            return self.scale(other)
        self._check(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                const = binomial_structure_constant_exact(self.p, self.m, k1, k2)
                add = (c1 * c2).scale(const)
                out[k] = out.get(k, Poly.zero(self.d)) + add
        return SymbolPoly(self.p, self.m, self.d, out)

    __rmul__ = __mul__

    def __pow__(self, n):
        out = SymbolPoly.one(self.p, self.m, self.d)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SymbolPoly.one(self.p, self.m, self.d).scale(other)
        return (
            isinstance(other, SymbolPoly)
            and (self.p, self.m, self.d) == (other.p, other.m, other.d)
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.p, self.m, self.d, frozenset(self.terms.items())))

    def mod_p(self):
        """Coefficient-wise reduction mod p (requires p-integrality)."""
        return SymbolPoly(
            self.p, self.m, self.d, {k: c.mod_p(self.p) for k, c in self.terms.items()}
        )

    # -- rational lift -----------------------------------------------------

    def to_plain(self) -> "SymbolPoly":
        """Image under xi^<m><k> -> (q_k!/k!) xi^k, as a level-0 SymbolPoly."""
        out = {}
        for k, c in self.terms.items():
            const = Fraction(1)
            for kj in k:
                const *= divided_lift(kj, self.p, self.m)
            out[k] = out.get(k, Poly.zero(self.d)) + c.scale(const)
        return SymbolPoly(self.p, 0, self.d, out)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda e: (sum(e), e)):
            c = self.terms[k]
            gens = []
            for j, kj in enumerate(k):
                if kj:
                    name = "xi" if self.d == 1 else f"xi_{j}"
                    gens.append(f"{name}{self.m}[{kj}]" if self.m else f"{name}^{kj}" if kj > 1 else name)
            mono = "*".join(gens)
            cs = str(c)
            if not mono:
                parts.append(cs)
            elif cs == "1":
                parts.append(mono)
            else:
                cs = f"({cs})" if ("+" in cs or "-" in cs[1:]) else cs
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def normalize(p: int, m: int, d: int, raw_terms) -> SymbolPoly:
    """Resolve digit overflow: raw_terms maps per-coordinate digit vectors
    (tuples of d tuples, each of length m+1, arbitrary nonneg entries) to
    coefficients; returns the symbol in <m><k>-basis normal form."""
    out = {}
    for digit_vecs, coeff in raw_terms.items():
        if isinstance(coeff, (int, Fraction)):
            coeff = Poly.const(coeff, d)
        const = Fraction(1)
        k = []
        for dv in digit_vecs:
            const *= digit_monomial_constant(dv, p, m)
            k.append(digits_to_k(dv, p))
        k = tuple(k)
        add = coeff.scale(const)
        out[k] = out.get(k, Poly.zero(d)) + add
    return SymbolPoly(p, m, d, out)


def rational_level_change(f: SymbolPoly, mprime: int) -> SymbolPoly:
    """The Q-algebra isomorphism to level mprime:
    xi^<m><k> -> (q_k^(m)! / q_k^(m')!) xi^<m'><k> per coordinate."""
    out = {}
    for k, c in f.terms.items():
        const = Fraction(1)
        for kj in k:
            const *= level_shift_constant(kj, f.p, f.m, mprime)
        out[k] = c.scale(const)
    return SymbolPoly(f.p, mprime, f.d, out)


def theta_variants(theta: SymbolPoly, m: int, mprime: int):
    """(Theta^(m'), Theta^(m,m')) built from a level-0 homogeneous symbol.

    Theta^(m')   = sum a_k^(p^m') xi^<m'>, exponents k*p^m', at level m'.
    Theta^(m,m') = the same expression read at level m; satisfies
    Theta^(m,m') = r_{m,m'}^n * Theta^(m') under rational_level_change.
    """
    if theta.m != 0:
        raise LevelMismatch("theta must be given at level 0")
    if not 0 <= m <= mprime:
        raise ValueError("need 0 <= m <= m'")
    if theta.is_zero() or not theta.is_homogeneous():
        raise NotHomogeneous("theta must be nonzero homogeneous")
    n = theta.degree()
    if n < 1:
        raise NotHomogeneous("theta must have degree >= 1")
    p, d = theta.p, theta.d
    q = p**mprime
    j = mprime - m
    hi = SymbolPoly.zero(p, mprime, d)
    lo = SymbolPoly.zero(p, m, d)
    for k, a in theta.terms.items():
        twisted = a**q
        # monomials are powers of the single generator xi_j^<level><p^level>
        hi_mono = SymbolPoly.one(p, mprime, d)
        lo_mono = SymbolPoly.one(p, m, d)
        for coord, kj in enumerate(k):
            if kj:
                hi_mono = hi_mono * SymbolPoly.xi(p, mprime, q, coord, d) ** kj
                lo_mono = lo_mono * SymbolPoly.xi(p, m, p**m, coord, d) ** (kj * p**j)
        hi = hi + hi_mono.scale(twisted)
        lo = lo + lo_mono.scale(twisted)
    return hi, lo


def integral_digits(k: int, p: int, m: int) -> tuple:
    """Digits used by mod-p computations; alias of digit_decomposition."""
    return digit_decomposition(k, p, m)


__all__ = [
    "SymbolPoly",
    "normalize",
    "rational_level_change",
    "theta_variants",
    "digit_form",
    "digit_decomposition",
    "digit_monomial_constant",
    "digits_to_k",
    "q_part",
]
