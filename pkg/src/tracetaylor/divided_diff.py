"""Divided differences of arbitrary order with confluent (repeated-node)
semantics, plus the scalar decomposition identities used by the norm bounds."""

import math
from dataclasses import dataclass, field

import numpy as np

from .scalar_functions import (DerivativeOrderError, dyadic_root, product_with_u,
                               product_with_u2, sup_norm, weight_u)


@dataclass
class NodeList:
    """Ordered real nodes with confluent-group merging.

    Nodes closer than ``merge_tol * (1 + span)`` (chained) are collapsed onto
    their group mean, so eigenvalues arriving with solver noise hit the exact
    derivative branch of the recursion instead of a catastrophic quotient.
    """

    nodes: tuple
    merge_tol: float = 1e-9
    canonical: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vals = np.sort(np.asarray(self.nodes, dtype=float))
        if vals.size == 0:
            raise ValueError("need at least one node")
        span = float(vals[-1] - vals[0])
        tol = self.merge_tol * (1.0 + span)
        merged = np.empty_like(vals)
        i = 0
        while i < vals.size:
            j = i + 1
            while j < vals.size and vals[j] - vals[j - 1] < tol:
                j += 1
            merged[i:j] = np.mean(vals[i:j])
            i = j
        self.canonical = merged

    @property
    def order(self):
        return len(self.canonical) - 1

    def max_confluency(self):
        _, counts = np.unique(self.canonical, return_counts=True)
        return int(np.max(counts))


def _as_nodelist(nodes, merge_tol=1e-9):
    if isinstance(nodes, NodeList):
        return nodes
    return NodeList(tuple(float(t) for t in nodes), merge_tol)


class PolynomialProbe:
    """x^k (or an arbitrary polynomial) with exact derivatives; oracle use only."""

    def __init__(self, coeffs):
        self.poly = np.polynomial.Polynomial(coeffs)
        self.max_order = 10**6
        self.support = None
        self.unbounded = True

    @classmethod
    def monomial(cls, k):
        return cls([0.0] * k + [1.0])

    def value(self, x):
        return self.poly(x)

    def __call__(self, x):
        return self.poly(x)

    def deriv(self, j, x):
        return self.poly.deriv(j)(x) if j else self.poly(x)


def divided_difference(f, nodes, merge_tol=1e-9):
    """The recursively defined divided difference f^[p] over p+1 nodes.

    Distinct nodes use the difference quotient; confluent groups use the
    exact-derivative branch f^(r)/r!.  Nodes are sorted first, so the result
    is deterministic; symmetry of f^[p] covers reorderings.
    """
    nl = _as_nodelist(nodes, merge_tol)
    vals = nl.canonical
    p = nl.order
    if f.max_order < nl.max_confluency() - 1:
        raise DerivativeOrderError(
            f"confluent group of size {nl.max_confluency()} needs derivatives "
            f"up to order {nl.max_confluency() - 1}")
    # d[i][j] = f^[j-i](vals[i..j]) built over sorted canonical values
    d = [[None] * (p + 1) for _ in range(p + 1)]
    for i in range(p + 1):
        d[i][i] = float(f.deriv(0, vals[i]))
    for w in range(1, p + 1):
        for i in range(p + 1 - w):
            j = i + w
            if vals[j] == vals[i]:
                d[i][j] = float(f.deriv(w, vals[i])) / math.factorial(w)
            else:
                d[i][j] = (d[i + 1][j] - d[i][j - 1]) / (vals[j] - vals[i])
    return d[0][p]


class DividedDifferenceCache:
    """Memoized divided differences of one function, keyed by sorted nodes."""

    def __init__(self, f, merge_tol=1e-9):
        self.f = f
        self.merge_tol = merge_tol
        self._cache = {}

    def __call__(self, *nodes):
        key = tuple(sorted(nodes))
        v = self._cache.get(key)
        if v is None:
            v = divided_difference(self.f, key, self.merge_tol)
            self._cache[key] = v
        return v


def permutation_symmetry_residual(f, nodes, n_perms=10, seed=0):
    """Max deviation of f^[p] under random node permutations."""
    nodes = tuple(float(t) for t in nodes)
    ref = divided_difference(f, nodes)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_perms):
        perm = tuple(np.asarray(nodes)[rng.permutation(len(nodes))])
        worst = max(worst, abs(divided_difference(f, perm) - ref))
    return worst


def sqrt_split_residual(f, nodes):
    """Residual of the square-root splitting of f^[n] into products of
    divided differences of sqrt(f) over contiguous node slices."""
    g = dyadic_root(f, 1)
    nl = _as_nodelist(nodes)
    lam = nl.canonical
    n = nl.order
    dg = DividedDifferenceCache(g)
    rhs = 0.0
    for k in range((n - 1) // 2 + 1):
        rhs += dg(*lam[: k + 1]) * dg(*lam[k:])
        rhs += dg(*lam[: n - k + 1]) * dg(*lam[n - k:])
    if n % 2 == 0:
        h = n // 2
        rhs += dg(*lam[: h + 1]) * dg(*lam[h:])
    lhs = divided_difference(f, nl)
    return abs(lhs - rhs)


def u_conjugation_residual(f, nodes):
    """Residual of the two-sided u-weighting identity
    u(l0) f^[n](l) u(ln) = (f u^2)^[n] - psi1 - psi2 + psi3."""
    u = weight_u()
    fu = product_with_u(f)
    fu2 = product_with_u2(f)
    nl = _as_nodelist(nodes)
    lam = nl.canonical
    n = nl.order
    df, du, dfu, dfu2 = (DividedDifferenceCache(h) for h in (f, u, fu, fu2))
    psi1 = sum(dfu(*lam[: n - k + 1]) * du(*lam[n - k:]) for k in range(1, n + 1))
    psi2 = sum(du(*lam[: k + 1]) * dfu(*lam[k:]) for k in range(1, n + 1))
    psi3 = 0.0
    for k in range(1, n):
        inner = sum(df(*lam[k: n - j + 1]) * du(*lam[n - j:])
                    for j in range(1, n - k + 1))
        psi3 += du(*lam[: k + 1]) * inner
    u0 = u.value(lam[0])
    un = u.value(lam[-1])
    lhs = u0 * df(*lam) * un
    rhs = dfu2(*lam) - psi1 - psi2 + psi3
    return abs(lhs - rhs)


def mean_value_bound_check(f, nodes, slack=1e-9):
    """Classical |f^[p]| <= sup |f^(p)| / p! over the node hull (sanity oracle)."""
    nl = _as_nodelist(nodes)
    p = nl.order
    lo, hi = float(nl.canonical[0]), float(nl.canonical[-1])
    x = np.linspace(lo, hi, 2001) if hi > lo else np.array([lo])
    bound = float(np.max(np.abs(f.deriv(p, x)))) / math.factorial(p)
    return abs(divided_difference(f, nl)) <= bound + slack
