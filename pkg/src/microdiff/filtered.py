"""Generic machinery for order-filtered algebras over the operator rings:
Rees algebras and their truncations, principal symbols, and a bounded
search for Ore-condition witnesses.

The filtration is the order filtration of DiffOp; a Rees element is a finite
sum of components x_i * nu^i with order(x_i) <= i, taken modulo nu^n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .diffop import DiffOp
from .errors import BudgetExhausted
from .linalg import solve_linear_system
from .polynomials import Poly
from .pseudopoly import SymbolPoly

INF = math.inf


@dataclass(frozen=True)
class FilteredElement:
    """An operator together with an order bound (membership in A_i)."""

    payload: DiffOp
    bound: int

    def __post_init__(self):
        if not self.payload.is_zero() and self.payload.order() > self.bound:
            raise ValueError("payload exceeds the stated order bound")

    def normalized(self) -> "FilteredElement":
        """Tighten the bound to the true order."""
        if self.payload.is_zero():
            return self
        return FilteredElement(self.payload, self.payload.order())


def principal_symbol(x: FilteredElement) -> SymbolPoly:
    """Image in the associated graded ring (exact coefficients; the order
    filtration ignores p-adic size).  sigma(0) = 0."""
    return x.payload.symbol_exact()


class ReesElement:
    """Element of the truncated Rees algebra A_{bullet,n}."""

    __slots__ = ("p", "m", "d", "n", "comps")

    def __init__(self, p, m, d, n, comps=None):
        self.p, self.m, self.d, self.n = p, m, d, n
        clean = {}
        for i, op in (comps or {}).items():
            if i < 0:
                raise ValueError("negative nu-degree")
            if i >= n or op.is_zero():
                continue  # nu^n == 0
            if op.order() > i:
                raise ValueError(f"component at nu^{i} has order {op.order()} > {i}")
            clean[i] = op
        self.comps = clean

    @classmethod
    def zero(cls, p, m, d, n):
        return cls(p, m, d, n, {})

    @classmethod
    def one(cls, p, m, d, n):
        return cls(p, m, d, n, {0: DiffOp.one(p, m, d)})

    @classmethod
    def nu(cls, p, m, d, n, power=1):
        return cls(p, m, d, n, {power: DiffOp.one(p, m, d)})

    @classmethod
    def homogeneous(cls, op: DiffOp, i: int, n: int) -> "ReesElement":
        """op * nu^i (requires order(op) <= i)."""
        return cls(op.p, op.m, op.d, n, {i: op})

    def truncate(self, n: int) -> "ReesElement":
        return ReesElement(self.p, self.m, self.d, n, dict(self.comps))

    def __add__(self, other):
        n = min(self.n, other.n)
        out = {i: op for i, op in self.comps.items() if i < n}
        for i, op in other.comps.items():
            if i < n:
                out[i] = out.get(i, DiffOp.zero(self.p, self.m, self.d)) + op
        return ReesElement(self.p, self.m, self.d, n, out)

    def __neg__(self):
        return ReesElement(self.p, self.m, self.d, self.n, {i: -op for i, op in self.comps.items()})

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        return (
            isinstance(other, ReesElement)
            and (self.p, self.m, self.d, self.n) == (other.p, other.m, other.d, other.n)
            and self.comps == other.comps
        )

    def is_zero(self):
        return not self.comps


def rees_multiply(a: ReesElement, b: ReesElement, n: int) -> ReesElement:
    """Product in A_{bullet,n} (nu is central)."""
    out = {}
    for i, x in a.comps.items():
        for j, y in b.comps.items():
            t = i + j
            if t >= n:
                continue
            out[t] = out.get(t, DiffOp.zero(a.p, a.m, a.d)) + x * y
    return ReesElement(a.p, a.m, a.d, n, out)


def _op_basis(p, m, d, max_order, max_xdeg):
    """All monomial operators x^u D^<m><k> within the bounds."""
    basis = []
    korders = [k for k in itertools.product(range(max_order + 1), repeat=d) if sum(k) <= max_order]
    for k in korders:
        for u in itertools.product(range(max_xdeg + 1), repeat=d):
            basis.append((k, u))
    return basis


def _vectorize(op: DiffOp, index):
    vec = [Fraction(0)] * len(index)
    for k, c in op.terms.items():
        for u, val in c.coeffs.items():
            key = (k, u)
            if key not in index:
                raise KeyError(key)
            vec[index[key]] = val
    return vec


def ore_witness_search(
    s: DiffOp,
    a: DiffOp,
    max_symbol_power: int = 4,
    max_xdeg: int = 8,
):
    """Bounded search for (s', r) with a*s' = s*r and sigma(s') = sigma(s)^j.

    Exact operator equality is the right semantics for homogeneous Rees
    components below the truncation degree.  Raises BudgetExhausted when no
    witness is found within the bounds (never asserts nonexistence).
    """
    if a.is_zero():
        return DiffOp.one(s.p, s.m, s.d), DiffOp.zero(s.p, s.m, s.d)
    if s.is_zero():
        raise ValueError("s must be nonzero")
    p, m, d = s.p, s.m, s.d
    ns, na = s.order(), a.order()
    for j in range(1, max_symbol_power + 1):
        # pinned top part of s': a lift of sigma(s)^j
        top_sym = s.symbol_exact() ** j
        pinned = DiffOp(p, m, d, dict(top_sym.terms))
        target = a * pinned  # we need s*r - a*(lower part of s') to equal this
        # unknown basis elements
        low_basis = _op_basis(p, m, d, j * ns - 1, max_xdeg) if j * ns >= 1 else []
        r_basis = _op_basis(p, m, d, na + (j - 1) * ns, max_xdeg)
        cols = []
        col_ops = []
        # assemble the result-monomial index from all products involved
        products = [target]
        for k, u in low_basis:
            e = DiffOp(p, m, d, {k: Poly(d, {u: 1})})
            op = -(a * e)
            col_ops.append(op)
            products.append(op)
        for k, u in r_basis:
            e = DiffOp(p, m, d, {k: Poly(d, {u: 1})})
            op = s * e
            col_ops.append(op)
            products.append(op)
        index = {}
        for op in products:
            for k, c in op.terms.items():
                for u in c.coeffs:
                    index.setdefault((k, u), len(index))
        cols = [_vectorize(op, index) for op in col_ops]
        if not index:
            continue
        rows = [[col[r_] for col in cols] for r_ in range(len(index))]
        rhs = _vectorize(target, index)
        sol = solve_linear_system(rows, rhs)
        if sol is None:
            continue
        nlow = len(low_basis)
        sprime = pinned
        for (k, u), c in zip(low_basis, sol[:nlow]):
            if c:
                sprime = sprime + DiffOp(p, m, d, {k: Poly(d, {u: c})})
        r = DiffOp.zero(p, m, d)
        for (k, u), c in zip(r_basis, sol[nlow:]):
            if c:
                r = r + DiffOp(p, m, d, {k: Poly(d, {u: c})})
        # verify by re-multiplication before returning
        if a * sprime == s * r:
            return sprime, r
    raise BudgetExhausted(
        f"no Ore witness with sigma(s') = sigma(s)^j for j <= {max_symbol_power}"
    )
