"""Holomorphic expression trees on the closed unit disc.

The node vocabulary is deliberately small: complex polynomials, quotients,
exponentials of polynomials, sums and products.  This class of expressions is
closed under every transformation the curve pipeline applies (Moebius maps of
the Gauss map, multiplication or division by exp(p), exact differentiation),
so curve data never degrades into sampled approximations.

Trees are immutable and may share subtrees.  Evaluation memoizes on node
identity, so a DAG built by many pipeline stages is evaluated in time linear
in the number of distinct nodes.  Derivatives are exact symbolic trees,
constructed once and cached on the node.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "HoloExpr",
    "Poly",
    "Sum",
    "Prod",
    "Quot",
    "ExpPoly",
    "LinPow",
    "const",
    "identity_poly",
    "scaled",
    "serialize_expr",
    "deserialize_expr",
]

# exp() saturates instead of overflowing; amplified data can legitimately
# reach e^~100 but anything near the float ceiling is a bug upstream.
_EXP_CLIP = 700.0


class HoloExpr:
    """Base class for holomorphic expression nodes."""

    _derivative = None

    def __call__(self, z, memo=None):
        z = np.asarray(z, dtype=complex)
        if memo is None:
            memo = {}
        return self._eval(z, memo)

    def _eval(self, z, memo):
        key = id(self)
        val = memo.get(key)
        if val is None:
            val = self._eval_impl(z, memo)
            memo[key] = val
        return val

    def _eval_impl(self, z, memo):
        raise NotImplementedError

    def derivative(self):
        """Exact derivative tree (cached)."""
        if self._derivative is None:
            self._derivative = self._derivative_impl()
        return self._derivative

    def _derivative_impl(self):
        raise NotImplementedError

    def children(self):
        return ()


class Poly(HoloExpr):
    """Complex polynomial, coefficients in increasing degree."""

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        # normalize: strip trailing zeros but keep at least the constant term
        nz = np.nonzero(c)[0]
        self.coeffs = c[: nz[-1] + 1] if nz.size else c[:1] * 0.0

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def _eval_impl(self, z, memo):
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def _derivative_impl(self):
        c = self.coeffs
        if len(c) <= 1:
            return Poly([0.0])
        return Poly(c[1:] * np.arange(1, len(c)))

    def __repr__(self):
        return f"Poly(deg={self.degree})"


class Sum(HoloExpr):
    def __init__(self, terms):
        self.terms = tuple(terms)
        if not self.terms:
            raise ValueError("Sum needs at least one term")

    def _eval_impl(self, z, memo):
        acc = self.terms[0]._eval(z, memo)
        for t in self.terms[1:]:
            acc = acc + t._eval(z, memo)
        return acc

    def _derivative_impl(self):
        return Sum([t.derivative() for t in self.terms])

    def children(self):
        return self.terms

    def __repr__(self):
        return f"Sum(n={len(self.terms)})"


class Prod(HoloExpr):
    def __init__(self, factors):
        self.factors = tuple(factors)
        if not self.factors:
            raise ValueError("Prod needs at least one factor")

    def _eval_impl(self, z, memo):
        acc = self.factors[0]._eval(z, memo)
        for f in self.factors[1:]:
            acc = acc * f._eval(z, memo)
        return acc

    def _derivative_impl(self):
        fs = self.factors
        terms = []
        for i in range(len(fs)):
            parts = list(fs)
            parts[i] = fs[i].derivative()
            terms.append(Prod(parts))
        return Sum(terms)

    def children(self):
        return self.factors

    def __repr__(self):
        return f"Prod(n={len(self.factors)})"


class Quot(HoloExpr):
    """Quotient of two expressions; poles live where the denominator vanishes."""

    def __init__(self, num, den):
        self.num = num
        self.den = den

    def _eval_impl(self, z, memo):
        n = self.num._eval(z, memo)
        d = self.den._eval(z, memo)
        with np.errstate(divide="ignore", invalid="ignore"):
            return n / d

    def _derivative_impl(self):
        n, d = self.num, self.den
        return Quot(
            Sum([Prod([n.derivative(), d]), scaled(-1.0, Prod([n, d.derivative()]))]),
            Prod([d, d]),
        )

    def children(self):
        return (self.num, self.den)

    def __repr__(self):
        return "Quot"


class LinPow(HoloExpr):
    """(c0 + c1 z)^m for integer m >= 0: a polynomial kept in factored form.

    Used for sharply localized bumps whose expanded degree would be far too
    large to carry as a coefficient list.
    """

    def __init__(self, c0, c1, m):
        self.c0 = complex(c0)
        self.c1 = complex(c1)
        self.m = int(m)
        if self.m < 0:
            raise ValueError("exponent must be nonnegative")

    def _eval_impl(self, z, memo):
        base = self.c0 + self.c1 * z
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.power(base, self.m)
        return np.nan_to_num(out, nan=0.0, posinf=np.inf, neginf=-np.inf)

    def _derivative_impl(self):
        if self.m == 0:
            return Poly([0.0])
        return scaled(self.m * self.c1, LinPow(self.c0, self.c1, self.m - 1))

    def __repr__(self):
        return f"LinPow(m={self.m})"


class ExpPoly(HoloExpr):
    """exp(p(z)) for a polynomial-valued inner expression; zero-free."""

    def __init__(self, poly):
        if not isinstance(poly, HoloExpr):
            poly = Poly(poly)
        self.poly = poly

    def _eval_impl(self, z, memo):
        w = self.poly._eval(z, memo)
        return np.exp(np.clip(w.real, -_EXP_CLIP, _EXP_CLIP) + 1j * w.imag)

    def _derivative_impl(self):
        return Prod([self.poly.derivative(), self])

    def children(self):
        return (self.poly,)

    def __repr__(self):
        return "ExpPoly"


def const(c):
    return Poly([c])


def identity_poly():
    return Poly([0.0, 1.0])


def scaled(c, expr):
    """c * expr, folding into the coefficients when expr is a polynomial."""
    if isinstance(expr, Poly):
        return Poly(expr.coeffs * c)
    return Prod([const(c), expr])


# ---------------------------------------------------------------------------
# serialization (DAG-aware: shared nodes are emitted once and referenced)

def _num_pair(c):
    return [repr(float(np.real(c))), repr(float(np.imag(c)))]


def _num_from_pair(p):
    return complex(float(p[0]), float(p[1]))


def serialize_expr(expr):
    """Encode an expression DAG as a node table with id references.

    Coefficients are stored as exact repr strings of the underlying doubles,
    so deserialization reproduces values bit-for-bit.
    """
    nodes = []
    index = {}

    def visit(node):
        key = id(node)
        if key in index:
            return index[key]
        for ch in node.children():
            visit(ch)
        if isinstance(node, Poly):
            rec = {"kind": "poly", "coeffs": [_num_pair(c) for c in node.coeffs]}
        elif isinstance(node, LinPow):
            rec = {"kind": "linpow", "c0": _num_pair(node.c0), "c1": _num_pair(node.c1), "m": node.m}
        elif isinstance(node, Sum):
            rec = {"kind": "sum", "terms": [index[id(t)] for t in node.terms]}
        elif isinstance(node, Prod):
            rec = {"kind": "prod", "factors": [index[id(f)] for f in node.factors]}
        elif isinstance(node, Quot):
            rec = {"kind": "quot", "num": index[id(node.num)], "den": index[id(node.den)]}
        elif isinstance(node, ExpPoly):
            rec = {"kind": "exp", "poly": index[id(node.poly)]}
        else:
            raise TypeError(f"unknown node type {type(node)!r}")
        index[key] = len(nodes)
        nodes.append(rec)
        return index[key]

    root = visit(expr)
    return {"nodes": nodes, "root": root}


def deserialize_expr(data):
    nodes = []
    for rec in data["nodes"]:
        kind = rec["kind"]
        if kind == "poly":
            nodes.append(Poly([_num_from_pair(p) for p in rec["coeffs"]]))
        elif kind == "linpow":
            nodes.append(LinPow(_num_from_pair(rec["c0"]), _num_from_pair(rec["c1"]), rec["m"]))
        elif kind == "sum":
            nodes.append(Sum([nodes[i] for i in rec["terms"]]))
        elif kind == "prod":
            nodes.append(Prod([nodes[i] for i in rec["factors"]]))
        elif kind == "quot":
            nodes.append(Quot(nodes[rec["num"]], nodes[rec["den"]]))
        elif kind == "exp":
            nodes.append(ExpPoly(nodes[rec["poly"]]))
        else:
            raise ValueError(f"unknown node kind {kind!r}")
    return nodes[data["root"]]
