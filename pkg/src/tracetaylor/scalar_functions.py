"""Compactly supported smooth test functions with exact derivatives.

The working family is built from polynomial bumps ``(1 - ((x-c)/r)^2)^m``
and plateau bumps with polynomial smoothstep edges.  Every member is stored
piecewise as sums of terms ``P(x) * u(x)^k`` with ``P`` a polynomial,
``u(x) = (1 + x^2)^(1/2)`` and ``k`` an integer, which keeps the family
closed under differentiation, sums, products, and multiplication by ``u``
and ``u^2``.  Derivatives are therefore exact (no finite differencing, no
symbolic engine).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial


class UnsupportedFamilyError(ValueError):
    """Raised when an exact dyadic root is requested outside the closed family."""


class DerivativeOrderError(ValueError):
    """Raised when a derivative beyond the guaranteed order is requested."""


_X = Polynomial([0.0, 1.0])

# max_order sentinel for functions smooth to all orders we ever use
_UNLIMITED = 10**6


@dataclass(frozen=True)
class _BumpAtom:
    center: float
    radius: float


@dataclass(frozen=True)
class _PlateauAtom:
    lo: float
    inner_lo: float
    inner_hi: float
    hi: float
    edge_order: int


def _smoothstep(s):
    """Polynomial S with S(0)=0, S(1)=1 and S', .., S^(s) vanishing at 0 and 1."""
    base = _X**s * (Polynomial([1.0, -1.0])) ** s
    S = base.integ()
    return S / S(1.0)


def _rebase(P, a, b):
    """Equivalent polynomial mapped from [a, b] to the window [-1, 1].

    Keeping piece polynomials in a local variable avoids the catastrophic
    coefficient growth of global monomial expansions (edge polynomials of a
    plateau raised to a power are otherwise evaluated with ~1e16-scale
    cancellation).
    """
    if (isinstance(P, Chebyshev) and tuple(P.domain) == (a, b)
            and tuple(P.window) == (-1.0, 1.0)):
        return P
    return P.convert(domain=[a, b], window=[-1.0, 1.0], kind=Chebyshev)


class SmoothCompactFunction:
    """Piecewise ``sum_k P_k(x) u(x)^k`` with compact (or whole-line) support.

    ``breaks`` are the piece boundaries; ``piece_terms[i]`` holds the term
    dictionary valid on ``(breaks[i], breaks[i+1])``.  The function is zero
    outside ``[breaks[0], breaks[-1]]`` unless ``whole_line`` terms are set
    (used only for the weight ``u`` and its relatives).
    """

    def __init__(self, breaks, piece_terms, max_order, family,
                 whole_line=None, power=None):
        self.breaks = np.asarray(breaks, dtype=float)
        self.piece_terms = piece_terms
        self.max_order = max_order
        self.family = family
        self.whole_line = whole_line
        self.power = power  # (atom, integer exponent, coeff) when an exact power
        self._deriv_cache = {0: self}

    # -- basic geometry -------------------------------------------------

    @property
    def support(self):
        """(lo, hi) hull of the support, or None for whole-line functions."""
        if self.whole_line is not None:
            return None
        return (float(self.breaks[0]), float(self.breaks[-1]))

    @property
    def unbounded(self):
        return self.whole_line is not None

    # -- evaluation -----------------------------------------------------

    def _eval_terms(self, terms, x):
        out = np.zeros_like(x)
        for k, P in terms.items():
            if k == 0:
                out += P(x)
            else:
                out += P(x) * (1.0 + x * x) ** (0.5 * k)
        return out

    def value(self, x):
        return self.deriv(0, x)

    def __call__(self, x):
        return self.deriv(0, x)

    def deriv(self, j, x):
        """Exact j-th derivative at x (scalar or array)."""
        if j > self.max_order:
            raise DerivativeOrderError(
                f"derivative order {j} exceeds guaranteed order {self.max_order}")
        g = self._derivative_obj(j)
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = g._raw_eval(x)
        return float(out[0]) if scalar else out

    def _raw_eval(self, x):
        if self.whole_line is not None:
            return self._eval_terms(self.whole_line, x)
        out = np.zeros_like(x)
        idx = np.searchsorted(self.breaks, x, side="right") - 1
        # close the right endpoint of the support
        idx[x == self.breaks[-1]] = len(self.piece_terms) - 1
        inside = (idx >= 0) & (idx <= len(self.piece_terms) - 1) & (x <= self.breaks[-1])
        for i, terms in enumerate(self.piece_terms):
            mask = inside & (idx == i)
            if np.any(mask):
                out[mask] = self._eval_terms(terms, x[mask])
        return out

    # -- differentiation ------------------------------------------------

    @staticmethod
    def _diff_terms(terms):
        # d/dx (P u^k) = P' u^k + k x P u^(k-2)
        new = {}
        for k, P in terms.items():
            dP = P.deriv()
            new[k] = new[k] + dP if k in new else dP
            if k != 0:
                ident = type(P).identity(domain=P.domain, window=P.window)
                xP = (k * ident) * P
                new[k - 2] = new[k - 2] + xP if (k - 2) in new else xP
        return new

    def derivative(self):
        return self._derivative_obj(1)

    def _derivative_obj(self, j):
        if j not in self._deriv_cache:
            prev = self._derivative_obj(j - 1)
            if prev.whole_line is not None:
                g = SmoothCompactFunction(
                    prev.breaks, [], max(prev.max_order - 1, 0), prev.family,
                    whole_line=self._diff_terms(prev.whole_line))
            else:
                g = SmoothCompactFunction(
                    prev.breaks, [self._diff_terms(t) for t in prev.piece_terms],
                    max(prev.max_order - 1, 0), prev.family)
            self._deriv_cache[j] = g
        return self._deriv_cache[j]

    # -- algebra ---------------------------------------------------------

    def _pieces_on(self, lo, hi):
        """Term dict valid on the open interval (lo, hi)."""
        if self.whole_line is not None:
            return self.whole_line
        mid = 0.5 * (lo + hi)
        if mid < self.breaks[0] or mid > self.breaks[-1]:
            return {}
        i = int(np.searchsorted(self.breaks, mid, side="right") - 1)
        i = min(i, len(self.piece_terms) - 1)
        return self.piece_terms[i]

    @staticmethod
    def _merge_breaks(a, b, lo, hi):
        pts = np.concatenate([np.asarray(a, float), np.asarray(b, float)])
        pts = pts[(pts >= lo) & (pts <= hi)]
        pts = np.unique(np.concatenate([pts, [lo, hi]]))
        return pts

    def add(self, other):
        """Pointwise sum; both operands must be compactly supported."""
        if self.unbounded or other.unbounded:
            raise ValueError("sum of whole-line functions is not supported")
        lo = min(self.breaks[0], other.breaks[0])
        hi = max(self.breaks[-1], other.breaks[-1])
        breaks = self._merge_breaks(self.breaks, other.breaks, lo, hi)
        pieces = []
        for a, b in zip(breaks[:-1], breaks[1:]):
            t1 = self._pieces_on(a, b)
            t2 = other._pieces_on(a, b)
            merged = {}
            for src in (t1, t2):
                for k, P in src.items():
                    Q = _rebase(P, a, b)
                    merged[k] = merged[k] + Q if k in merged else Q
            pieces.append(merged)
        return SmoothCompactFunction(
            breaks, pieces, min(self.max_order, other.max_order), "sum")

    def scale(self, c):
        c = float(c)
        power = None
        if self.power is not None and self.power[2] * c >= 0:
            atom, m, coeff = self.power
            power = (atom, m, coeff * c) if c > 0 else None
        mapper = lambda terms: {k: c * P for k, P in terms.items()}
        if self.whole_line is not None:
            return SmoothCompactFunction(self.breaks, [], self.max_order,
                                         "scalar-multiple",
                                         whole_line=mapper(self.whole_line))
        return SmoothCompactFunction(self.breaks,
                                     [mapper(t) for t in self.piece_terms],
                                     self.max_order, "scalar-multiple", power=power)

    def mul(self, other):
        """Pointwise product; at least one operand compactly supported."""
        if self.unbounded and other.unbounded:
            tl = {}
            for k1, P1 in self.whole_line.items():
                for k2, P2 in other.whole_line.items():
                    k = k1 + k2
                    tl[k] = tl[k] + P1 * P2 if k in tl else P1 * P2
            return SmoothCompactFunction([], [], min(self.max_order, other.max_order),
                                         "product", whole_line=tl)
        if self.unbounded:
            return other.mul(self)
        lo, hi = self.breaks[0], self.breaks[-1]
        if not other.unbounded:
            lo = max(lo, other.breaks[0])
            hi = min(hi, other.breaks[-1])
            if lo >= hi:
                return zero_function()
        breaks = self._merge_breaks(self.breaks,
                                    [] if other.unbounded else other.breaks, lo, hi)
        pieces = []
        for a, b in zip(breaks[:-1], breaks[1:]):
            t1 = self._pieces_on(a, b)
            t2 = other._pieces_on(a, b)
            prod = {}
            for k1, P1 in t1.items():
                Q1 = _rebase(P1, a, b)
                for k2, P2 in t2.items():
                    k = k1 + k2
                    Q = Q1 * _rebase(P2, a, b)
                    prod[k] = prod[k] + Q if k in prod else Q
            pieces.append(prod)
        return SmoothCompactFunction(breaks, pieces,
                                     min(self.max_order, other.max_order), "product")


class FractionalPower:
    """``base(x)**alpha`` for a nonnegative piecewise-polynomial base.

    Derivatives come from the log-derivative recursion
    ``h' = h * (alpha * g'/g)``; near the support boundary, where the base
    vanishes to high order, the value is flushed to the correct limit 0.
    """

    def __init__(self, base, alpha, max_order):
        if base.unbounded:
            raise UnsupportedFamilyError("fractional power needs compact support")
        for terms in base.piece_terms:
            if any(k != 0 for k in terms):
                raise UnsupportedFamilyError(
                    "fractional power defined only for polynomial pieces")
        self.base = base
        self.alpha = float(alpha)
        self.max_order = max_order
        self.breaks = base.breaks
        self.family = "dyadic-root"
        self.whole_line = None

    @property
    def support(self):
        return self.base.support

    @property
    def unbounded(self):
        return False

    def value(self, x):
        return self.deriv(0, x)

    def __call__(self, x):
        return self.deriv(0, x)

    def deriv(self, j, x):
        if j > self.max_order:
            raise DerivativeOrderError(
                f"derivative order {j} exceeds guaranteed order {self.max_order}")
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        g = [self.base.deriv(i, x) for i in range(j + 1)]
        tiny = 1e-250
        safe = g[0] > tiny
        gs = np.where(safe, g[0], 1.0)
        # l[r] = (log g)^(r); solved from g^(r) = sum C(r-1,i) g^(i) l[r-i]
        l = [None] * (j + 1)
        for r in range(1, j + 1):
            acc = g[r].copy()
            for i in range(1, r):
                acc = acc - math.comb(r - 1, i) * g[i] * l[r - i]
            l[r] = acc / gs
        h = [np.where(safe, gs**self.alpha, 0.0)]
        for r in range(1, j + 1):
            acc = np.zeros_like(x)
            for i in range(r):
                acc += math.comb(r - 1, i) * h[i] * (self.alpha * l[r - i])
            h.append(np.where(safe, acc, 0.0))
        out = h[j]
        return float(out[0]) if scalar else out


def zero_function():
    return SmoothCompactFunction([0.0, 0.0], [{}], _UNLIMITED, "polynomial-bump")


def make_poly_bump(center, radius, m):
    """Bump ``(1 - ((x-center)/radius)^2)^m`` on its support, 0 outside.

    C_c^(m-1); derivatives are exact polynomials.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if m < 2:
        raise ValueError("exponent m must be at least 2")
    # (1 - s^2)^m expanded in Chebyshev series of s = (x-center)/radius,
    # with the affine map carried by the domain attribute.  The Chebyshev
    # coefficients stay O(1), so evaluation keeps ~1e-15 absolute accuracy;
    # the global monomial expansion loses ~8 digits to binomial-scale
    # cancellation at this degree.
    P = Chebyshev((Chebyshev([0.5, 0.0, -0.5]) ** m).coef,
                  domain=[center - radius, center + radius],
                  window=[-1.0, 1.0])
    return SmoothCompactFunction(
        [center - radius, center + radius], [{0: P}], m - 1, "polynomial-bump",
        power=(_BumpAtom(float(center), float(radius)), int(m), 1.0))


def make_plateau_bump(inner_lo, inner_hi, pad, edge_order, exponent=1, coeff=1.0):
    """Plateau equal to ``coeff`` on [inner_lo, inner_hi], smoothstep edges of
    width ``pad``, raised to an integer ``exponent`` (plateau value unchanged
    when coeff == 1).  C^(edge_order) across the junctions."""
    if pad <= 0 or inner_hi < inner_lo:
        raise ValueError("bad plateau geometry")
    lo, hi = inner_lo - pad, inner_hi + pad
    S = _smoothstep(edge_order)
    # Expand S**exponent as a Chebyshev series in an edge-local variable and
    # let the domain attribute carry the affine change of variable; a global
    # monomial expansion is numerically useless here, and even the edge-local
    # monomial basis loses ~8 digits at moderate exponents.
    Se = S.convert(domain=[0.0, 1.0], window=[-1.0, 1.0], kind=Chebyshev) ** exponent
    rise = _rebase(Chebyshev(Se.coef, domain=[lo, inner_lo],
                             window=[-1.0, 1.0]), lo, inner_lo)
    fall = _rebase(Chebyshev(Se.coef, domain=[inner_hi, hi],
                             window=[1.0, -1.0]), inner_hi, hi)
    flat = Chebyshev([1.0])
    pieces = [{0: coeff * rise}, {0: coeff * flat}, {0: coeff * fall}]
    atom = _PlateauAtom(float(lo), float(inner_lo), float(inner_hi), float(hi),
                        int(edge_order))
    return SmoothCompactFunction(
        [lo, inner_lo, inner_hi, hi], pieces, edge_order, "polynomial-bump",
        power=(atom, int(exponent), float(coeff)))


def _from_power(atom, exponent, coeff):
    if isinstance(atom, _BumpAtom):
        f = make_poly_bump(atom.center, atom.radius, exponent)
        return f if coeff == 1.0 else f.scale(coeff)
    return make_plateau_bump(atom.inner_lo, atom.inner_hi,
                             atom.inner_lo - atom.lo, atom.edge_order,
                             exponent=exponent, coeff=coeff)


def dyadic_root(f, k):
    """Exact ``f^(2^-k)`` for members of the closed power family."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return f
    if getattr(f, "power", None) is None:
        raise UnsupportedFamilyError("no exact dyadic root for this function")
    atom, m, coeff = f.power
    if coeff < 0 or m % (1 << k) != 0:
        raise UnsupportedFamilyError(
            f"exponent {m} not divisible by 2^{k} (or negative scale)")
    return _from_power(atom, m >> k, coeff ** (2.0 ** -k))


def fractional_root(f, k, max_order):
    """``f^(2^-k)``: exact when available, otherwise via FractionalPower."""
    try:
        return dyadic_root(f, k)
    except UnsupportedFamilyError:
        return FractionalPower(f, 2.0 ** -k, max_order)


@lru_cache(maxsize=1)
def weight_u():
    """The weight u(t) = (1 + t^2)^(1/2), with exact derivatives of all orders."""
    return SmoothCompactFunction([], [], _UNLIMITED, "weighted",
                                 whole_line={1: Chebyshev([1.0])})


def product_with_u(f):
    return f.mul(weight_u())


def product_with_u2(f):
    """f(x) * (1 + x^2); stays polynomial-piecewise."""
    u2 = SmoothCompactFunction([], [], _UNLIMITED, "weighted",
                               whole_line={0: Chebyshev([1.5, 0.0, 0.5])})
    return f.mul(u2)


# -- norms and seminorms -------------------------------------------------

@dataclass
class SeminormReport:
    p: int
    value_gp: float
    quadrature_error: float
    value_fourier: float | None = None
    fourier_error: float | None = None


_GL_CACHE = {}


def _gauss_legendre(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _quad_edges(f, panels, domain=None):
    if domain is None:
        if f.unbounded:
            domain = (-100.0, 100.0)
        else:
            domain = f.support
    lo, hi = domain
    edges = np.linspace(lo, hi, panels + 1)
    br = np.asarray(getattr(f, "breaks", []), float)
    br = br[(br > lo) & (br < hi)]
    return np.unique(np.concatenate([edges, br]))


def integrate(fn, edges, nodes=16):
    """Composite Gauss-Legendre integral of a vectorized callable."""
    x0, w0 = _gauss_legendre(nodes)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    X = 0.5 * (b - a) * x0[None, :] + 0.5 * (a + b)
    W = 0.5 * (b - a) * w0[None, :]
    vals = fn(X.ravel()).reshape(X.shape)
    return float(np.sum(vals * W))


def _l2_norm_deriv(f, order, panels, nodes):
    edges = _quad_edges(f, panels)
    val = integrate(lambda x: f.deriv(order, x) ** 2, edges, nodes)
    return math.sqrt(max(val, 0.0))


def gp_seminorm(f, p, panels=64, nodes=16):
    """sqrt(2)/p! * (||f^(p)||_2 + ||f^(p+1)||_2), by composite Gauss-Legendre.

    The quadrature error is estimated by panel doubling; for the whole-line
    weight the integral is truncated to [-100, 100] (derivatives of order
    >= 2 decay at least like |x|^-3, so the tail is far below the estimate).
    """
    if f.unbounded and p < 2:
        raise DerivativeOrderError("whole-line weight is in G_p only for p >= 2")
    if p + 1 > f.max_order:
        raise DerivativeOrderError(
            f"G_{p} needs derivatives up to order {p + 1}; have {f.max_order}")
    coarse = (_l2_norm_deriv(f, p, panels, nodes)
              + _l2_norm_deriv(f, p + 1, panels, nodes))
    fine = (_l2_norm_deriv(f, p, 2 * panels, nodes)
            + _l2_norm_deriv(f, p + 1, 2 * panels, nodes))
    c = math.sqrt(2.0) / math.factorial(p)
    return SeminormReport(p=p, value_gp=c * fine, quadrature_error=c * abs(fine - coarse))


def fourier_l1_norm(f, p, grid=2**14, span=None, pad_factor=16):
    """L1 norm of the Fourier transform of f^(p) over [-span, span].

    Convention: fhat(s) = (1/2pi) * integral f(x) exp(-i s x) dx, under which
    ||fhat^(p)||_1 / p! <= ||f||_{G_p} holds.  The transform is computed by
    sampling the exact derivative on a uniform grid, zero-padding, and an FFT;
    truncation/aliasing are controlled by the grid size and the span (the
    integrand decays polynomially for the bump family).
    """
    if p > f.max_order:
        raise DerivativeOrderError("derivative order unavailable")
    if f.unbounded:
        raise ValueError("Fourier L1 norm defined for compact support only")
    lo, hi = f.support
    if hi <= lo:
        return 0.0
    if span is None:
        span = 200.0 / (0.5 * (hi - lo))
    x = np.linspace(lo, hi, grid, endpoint=False)
    dx = (hi - lo) / grid
    g = f.deriv(p, x)
    npad = pad_factor * grid
    F = np.fft.fft(g, n=npad)
    s = 2.0 * np.pi * np.fft.fftfreq(npad, d=dx)
    mag = (dx / (2.0 * np.pi)) * np.abs(F)
    order = np.argsort(s)
    s = s[order]
    mag = mag[order]
    band = np.abs(s) <= span
    return float(np.trapezoid(mag[band], s[band]))


def sup_norm(f, extra_points=None, samples=4001):
    """Sup of |f| over its support (dense grid plus breakpoints and extras)."""
    if f.unbounded:
        lo, hi = -1e3, 1e3
    else:
        lo, hi = f.support
        if hi <= lo:
            return 0.0
    pts = [np.linspace(lo, hi, samples), np.asarray(getattr(f, "breaks", []), float)]
    if extra_points is not None:
        ex = np.asarray(extra_points, float)
        pts.append(ex[(ex >= lo) & (ex <= hi)])
    x = np.unique(np.concatenate(pts))
    return float(np.max(np.abs(f.value(x)))) if x.size else 0.0


def decompose_signed(f, n):
    """Split f = f1 - f2 with f1, f2 >= 0 and dyadic roots of order j_n available.

    f2 = 2 sup|f| * b for a plateau bump b = beta^(2^j_n) equal to 1 on supp f
    (support padded by half the support radius), and f1 = f2 + f.
    """
    if f.support is None:
        raise UnsupportedFamilyError("signed decomposition needs compact support")
    lo, hi = f.support
    jn = 1 + int(math.floor(math.log2(n))) if n >= 1 else 1
    pad = max(0.25 * (hi - lo), 1e-3)
    M = sup_norm(f)
    if M == 0.0:
        b = make_plateau_bump(lo, hi, pad, n + 1, exponent=1 << jn)
        zf = b.scale(0.0)
        return zf, zf
    b = make_plateau_bump(lo, hi, pad, n + 1, exponent=1 << jn)
    f2 = b.scale(2.0 * M)
    f1 = f2.add(f)
    return f1, f2
