"""Taylor expansion of the trace functional V -> Tr f(H0 + V): expansion
terms, remainder traces, the operator remainder, its integral representation,
and remainder-scaling slope fits."""

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .divided_diff import DividedDifferenceCache
from .moi import (evaluate_moi, gateaux_derivative, trace_derivative_first,
                  trace_derivative_higher)
from .operator_core import (apply_function, as_matrix, decompose,
                            schatten_norm)
from .scalar_functions import _gauss_legendre


class InsufficientDataError(RuntimeError):
    pass


@dataclass
class ExpansionReport:
    n: int
    base_trace: float
    perturbed_trace: float
    terms: list
    remainder_trace: float
    operator_remainder_trace_norm: float | None = None
    slope_fit: dict | None = None

    def identity_residual(self):
        """Defect of base + sum(terms) + remainder = perturbed (0 by
        construction, up to floating-point accumulation)."""
        return abs(self.perturbed_trace
                   - (self.base_trace + sum(self.terms) + self.remainder_trace))

    def to_json_dict(self):
        return {"n": self.n, "base_trace": self.base_trace,
                "perturbed_trace": self.perturbed_trace,
                "terms": list(self.terms),
                "remainder_trace": self.remainder_trace,
                "operator_remainder_trace_norm": self.operator_remainder_trace_norm,
                "slope_fit": self.slope_fit}


def expansion_terms(f, D0, V, n):
    """Expansion terms tau_1..tau_{n-1}: tau_p is 1/p times the spectral sum
    of (f')^[p-1] against the cyclic traces Tr(E V .. E V)."""
    if f.max_order < n:
        raise ValueError(f"need derivatives up to order {n}; have {f.max_order}")
    out = []
    for p in range(1, n):
        if p == 1:
            out.append(trace_derivative_first(f, D0, V))
        else:
            out.append(trace_derivative_higher(f, D0, V, p) / math.factorial(p))
    return out


def expansion_terms_eigensum(f, D0, V, n):
    """Direct eigenvector-sum oracle for the expansion terms (dim <= 6):
    explicit loops over index tuples with matrix elements of V in the
    eigenbasis.  Independent of the cluster/trace path."""
    if D0.dim > 6:
        raise ValueError("eigensum oracle capped at dim 6")
    lam = D0.index_values()
    U = D0.eigenvectors
    Vt = U.conj().T @ as_matrix(V) @ U  # Vt[b, a] = <V psi_a, psi_b>
    dd = DividedDifferenceCache(f.derivative())
    out = []
    for p in range(1, n):
        total = 0.0 + 0.0j
        for idx in product(range(D0.dim), repeat=p):
            w = dd(*(lam[i] for i in idx))
            prod_elem = 1.0 + 0.0j
            for a, b in zip(idx, idx[1:] + idx[:1]):
                prod_elem *= Vt[b, a]
            total += w * prod_elem
        out.append(float(total.real) / p)
    return out


def remainder_trace(f, H0, V, n):
    """Tr f(H0+V) - Tr f(H0) - sum_{p<n} tau_p, traces from exact functional
    calculus."""
    D0 = decompose(as_matrix(H0))
    D1 = decompose(as_matrix(H0) + as_matrix(V))
    base = float(np.trace(apply_function(f, D0).mat).real)
    pert = float(np.trace(apply_function(f, D1).mat).real)
    taus = expansion_terms(f, D0, V, n)
    return pert - base - sum(taus)


def operator_remainder(f, H0, V, p):
    """f(H0+V) minus the Gateaux-derivative Taylor polynomial of order p-1."""
    Hm, Vm = as_matrix(H0), as_matrix(V)
    D0 = decompose(Hm)
    D1 = decompose(Hm + Vm)
    R = apply_function(f, D1).mat.copy()
    for k in range(p):
        R -= evaluate_moi(f, D0, [Vm] * k).matrix
    return R


def integral_remainder_check(f, H0, V, p, quad_nodes=32):
    """Residual of the Taylor integral representation: Gauss-Legendre
    quadrature of (1-t)^(p-1)/(p-1)! times the p-th derivative at H0 + tV,
    compared against the directly assembled operator remainder."""
    if p < 1:
        raise ValueError("p must be >= 1")
    Hm, Vm = as_matrix(H0), as_matrix(V)
    x0, w0 = _gauss_legendre(quad_nodes)
    t = 0.5 * (x0 + 1.0)
    w = 0.5 * w0
    acc = np.zeros_like(Hm)
    for ti, wi in zip(t, w):
        Dt = decompose(Hm + ti * Vm)
        deriv = gateaux_derivative(f, Dt, Vm, p)
        acc = acc + wi * (1.0 - ti) ** (p - 1) * deriv
    acc /= math.factorial(p - 1)
    return schatten_norm(acc - operator_remainder(f, H0, V, p), 2)


def remainder_sweep(f, H0, V, n, eps_grid):
    """Remainder traces over an epsilon grid; terms are computed once and
    rescaled as eps^p, only the perturbed trace is re-evaluated."""
    Hm, Vm = as_matrix(H0), as_matrix(V)
    D0 = decompose(Hm)
    base = float(np.trace(apply_function(f, D0).mat).real)
    taus = expansion_terms(f, D0, Vm, n)
    out = []
    for eps in eps_grid:
        pert = float(np.trace(apply_function(f, decompose(Hm + eps * Vm)).mat).real)
        poly = sum(tau * eps**p for p, tau in enumerate(taus, start=1))
        out.append(pert - base - poly)
    return out


def scaling_exponent(f, H0, V, n, eps_grid, noise_floor=1e-13):
    """Least-squares slope of log|remainder| against log eps, skipping points
    below the noise floor."""
    rem = remainder_sweep(f, H0, V, n, eps_grid)
    eps = np.asarray(eps_grid, float)
    rem = np.abs(np.asarray(rem))
    keep = rem > noise_floor
    if np.count_nonzero(keep) < 3:
        raise InsufficientDataError(
            f"only {np.count_nonzero(keep)} usable grid points above the noise floor")
    slope = np.polyfit(np.log(eps[keep]), np.log(rem[keep]), 1)[0]
    return float(slope)


def expansion_report(f, H0, V, n, with_operator_remainder=True):
    Hm, Vm = as_matrix(H0), as_matrix(V)
    D0 = decompose(Hm)
    D1 = decompose(Hm + Vm)
    base = float(np.trace(apply_function(f, D0).mat).real)
    pert = float(np.trace(apply_function(f, D1).mat).real)
    taus = expansion_terms(f, D0, Vm, n)
    rem = pert - base - sum(taus)
    tn = None
    if with_operator_remainder:
        tn = schatten_norm(operator_remainder(f, H0, V, n), 1)
    return ExpansionReport(n=n, base_trace=base, perturbed_trace=pert,
                           terms=taus, remainder_trace=rem,
                           operator_remainder_trace_norm=tn)
