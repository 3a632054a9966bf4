"""Sparse multivariate Laurent polynomials with exact rational coefficients.

Coefficient rings of all operators in the package.  Negative exponents model
charts on which a coordinate has been inverted (monomial-unit charts); plain
polynomials are the special case with nonnegative support.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .padic import valuation

INF = math.inf


class Poly:
    """Immutable sparse polynomial: dict from exponent tuples to Fraction."""

    __slots__ = ("nvars", "coeffs")

    def __init__(self, nvars: int, coeffs=None):
        self.nvars = nvars
        clean = {}
        for exp, c in (coeffs or {}).items():
            c = Fraction(c)
            if c:
                exp = tuple(int(e) for e in exp)
                if len(exp) != nvars:
                    raise ValueError("exponent arity mismatch")
                clean[exp] = c
        self.coeffs = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int = 1) -> "Poly":
        return cls(nvars, {})

    @classmethod
    def const(cls, c, nvars: int = 1) -> "Poly":
        return cls(nvars, {(0,) * nvars: Fraction(c)})

    @classmethod
    def var(cls, j: int = 0, nvars: int = 1, power: int = 1) -> "Poly":
        exp = [0] * nvars
        exp[j] = power
        return cls(nvars, {tuple(exp): Fraction(1)})

    @classmethod
    def from_univariate(cls, coeff_list) -> "Poly":
        """Dense list [c0, c1, ...] -> c0 + c1 x + ... (one variable)."""
        return cls(1, {(i,): Fraction(c) for i, c in enumerate(coeff_list)})

    # -- predicates / views -------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return all(all(e == 0 for e in exp) for exp in self.coeffs)

    def constant_term(self) -> Fraction:
        return self.coeffs.get((0,) * self.nvars, Fraction(0))

    def is_laurent(self) -> bool:
        """True if some exponent is negative."""
        return any(e < 0 for exp in self.coeffs for e in exp)

    def degree(self, j: int = 0):
        """Top exponent of variable j; -INF for the zero polynomial."""
        if not self.coeffs:
            return -INF
        return max(exp[j] for exp in self.coeffs)

    def low_degree(self, j: int = 0):
        if not self.coeffs:
            return INF
        return min(exp[j] for exp in self.coeffs)

    def total_degree(self):
        if not self.coeffs:
            return -INF
        return max(sum(exp) for exp in self.coeffs)

    def p_valuation(self, p: int):
        """min_k v_p(coefficient); the Gauss norm is p^(-this). INF for 0."""
        if not self.coeffs:
            return INF
        return min(valuation(c, p) for c in self.coeffs.values())

    # -- arithmetic ----------------------------------------------------

    def _check(self, other: "Poly"):
        if self.nvars != other.nvars:
            raise ValueError("variable-count mismatch")

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        out = dict(self.coeffs)
        for exp, c in other.coeffs.items():
            out[exp] = out.get(exp, Fraction(0)) + c
        return Poly(self.nvars, out)

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check(other)
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        return Poly(self.nvars, {e: c * v for e, v in self.coeffs.items()})

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power")
        out = Poly.const(1, self.nvars)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def derivative(self, j: int = 0) -> "Poly":
        out = {}
        for exp, c in self.coeffs.items():
            if exp[j]:
                e = list(exp)
                e[j] -= 1
                out[tuple(e)] = c * exp[j]
        return Poly(self.nvars, out)

    def shift(self, j: int, by: int) -> "Poly":
        """Multiply by x_j^by (by may be negative)."""
        out = {}
        for exp, c in self.coeffs.items():
            e = list(exp)
            e[j] += by
            out[tuple(e)] = c
        return Poly(self.nvars, out)

    def coefficient(self, exp) -> Fraction:
        return self.coeffs.get(tuple(exp), Fraction(0))

    def map_coeffs(self, f) -> "Poly":
        return Poly(self.nvars, {e: f(c) for e, c in self.coeffs.items()})

    def frobenius_coeffs(self, q: int) -> "Poly":
        """Raise each coefficient to the q-th power (exponents untouched)."""
        return self.map_coeffs(lambda c: c**q)

    def mod_p(self, p: int) -> "Poly":
        """Reduce integral coefficients mod p; error on a p in a denominator."""

        def red(c):
            if valuation(c, p) < 0:
                raise ValueError("coefficient not p-integral")
            num = c.numerator * pow(c.denominator, -1, p)
            return Fraction(num % p)

        return self.map_coeffs(red)

    def clear_p_content(self, p: int):
        """Divide out the p-content; returns (primitive part, content exponent)."""
        v = self.p_valuation(p)
        if v is INF or v == 0:
            return self, 0
        return self.scale(Fraction(1, p**v) if v > 0 else Fraction(p ** (-v))), v

    def divide_exact(self, other: "Poly", laurent: bool = False):
        """Exact quotient self/other, or None.

        Divisors that are single monomials work in any arity (Laurent shifts
        allowed when ``laurent``); otherwise univariate long division with a
        zero-remainder requirement.
        """
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if self.is_zero():
            return Poly.zero(self.nvars)
        if len(other.coeffs) == 1:
            ((exp, c),) = other.coeffs.items()
            out = {}
            for e, v in self.coeffs.items():
                ne = tuple(a - b for a, b in zip(e, exp))
                if not laurent and any(x < 0 for x in ne):
                    return None
                out[ne] = v / c
            return Poly(self.nvars, out)
        if self.nvars != 1 or self.is_laurent() or other.is_laurent():
            return None
        num = dict(self.coeffs)
        dn, cn = other.degree(), other.coeffs[(other.degree(),)]
        quot = {}
        while num:
            dtop = max(e[0] for e in num)
            if dtop < dn:
                return None
            q = num[(dtop,)] / cn
            quot[(dtop - dn,)] = q
            for e, c in other.coeffs.items():
                key = (e[0] + dtop - dn,)
                num[key] = num.get(key, Fraction(0)) - q * c
                if not num[key]:
                    del num[key]
        return Poly(1, quot)

    def eval(self, point):
        """Evaluate at a tuple of Fractions (all nonzero if Laurent)."""
        total = Fraction(0)
        for exp, c in self.coeffs.items():
            term = c
            for e, x in zip(exp, point):
                term *= Fraction(x) ** e
            total += term
        return total

    # -- comparison / hashing / display --------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other, self.nvars)
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.nvars, frozenset(self.coeffs.items())))

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        names = ["x"] if self.nvars == 1 else [f"x{j + 1}" for j in range(self.nvars)]
        parts = []
        for exp in sorted(self.coeffs, key=lambda e: (sum(e), e)):
            c = self.coeffs[exp]
            mono = "*".join(
                n if e == 1 else f"{n}^{e}" for n, e in zip(names, exp) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        out = " + ".join(parts)
        return out.replace("+ -", "- ")
