"""
Exact polynomial algebra in x = cos(theta) for rotationally symmetric spheres.

Support functions r, mean radii psi and astigmatisms s are carried as
CosPolynomial values with exact rational coefficients.  This module also
owns the associated Legendre functions, the mixed trigonometric/Legendre
decomposition of the astigmatism and the quadratures s -> r -> (psi, s).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from config import DECOMPOSE_CONFIG

logger = logging.getLogger(__name__)

Number = Union[Fraction, int, float, str]
Poly = Tuple[Fraction, ...]


class BasisError(ValueError):
    """Malformed polynomial input or an operation outside its domain."""


class DomainError(BasisError):
    """Arguments outside the domain of a special function or identity."""


class IllConditionedFitError(BasisError):
    """A sampled astigmatism could not be fitted below the residual tolerance."""

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(f"fit residual {residual:.3e} exceeds tolerance {tolerance:.1e}")


def as_fraction(value: Number) -> Fraction:
    """Exact rational view of a number; floats convert to their binary value."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(float(value))


# --- coefficient-tuple arithmetic (index k holds the x^k coefficient) ---

def _trim(coeffs: Iterable[Fraction]) -> Poly:
    out = list(coeffs)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _padd(p: Sequence[Fraction], q: Sequence[Fraction]) -> Poly:
    size = max(len(p), len(q))
    return _trim((p[k] if k < len(p) else 0) + (q[k] if k < len(q) else 0) for k in range(size))


def _pscale(p: Sequence[Fraction], c: Fraction) -> Poly:
    return _trim(c * a for a in p)


def _pmul(p: Sequence[Fraction], q: Sequence[Fraction]) -> Poly:
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def _ppow(p: Sequence[Fraction], k: int) -> Poly:
    out: Poly = (Fraction(1),)
    for _ in range(k):
        out = _pmul(out, p)
    return out


def _pderiv(p: Sequence[Fraction]) -> Poly:
    return _trim(k * p[k] for k in range(1, len(p)))


def _pintegrate(p: Sequence[Fraction]) -> Poly:
    return _trim([Fraction(0)] + [a / (k + 1) for k, a in enumerate(p)])


def _pdivmod(p: Sequence[Fraction], q: Sequence[Fraction]) -> Tuple[Poly, Poly]:
    q = _trim(q)
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(_trim(p))
    if len(rem) < len(q):
        return (), tuple(rem)
    quot = [Fraction(0)] * (len(rem) - len(q) + 1)
    lead = q[-1]
    for shift in range(len(rem) - len(q), -1, -1):
        c = rem[shift + len(q) - 1] / lead
        quot[shift] = c
        if c:
            for k, b in enumerate(q):
                rem[shift + k] -= c * b
    return _trim(quot), _trim(rem[: len(q) - 1])


def _pcompose(p: Sequence[Fraction], q: Sequence[Fraction]) -> Poly:
    out: Poly = ()
    for a in reversed(p):
        out = _padd(_pmul(out, q), (a,))
    return out


def _peval(p: Sequence[Fraction], x: Fraction) -> Fraction:
    out = Fraction(0)
    for a in reversed(p):
        out = out * x + a
    return out


_ONE_MINUS_X2: Poly = (Fraction(1), Fraction(0), Fraction(-1))
_X: Poly = (Fraction(0), Fraction(1))


@dataclass(frozen=True)
class CosPolynomial:
    """sin^p(theta) * sum_k coeffs[k] cos^k(theta), with exact rational coefficients.

    The sin prefactor is kept canonical (p in {0, 1}) by absorbing sin^2 = 1 - x^2,
    so equal polynomials compare equal.
    """
    coeffs: Poly = ()
    sin_prefactor_power: int = 0

    def __post_init__(self):
        power = self.sin_prefactor_power
        if not isinstance(power, (int, np.integer)) or power < 0:
            raise BasisError(f"sin prefactor power must be a non-negative integer, got {power!r}")
        coeffs = _trim(as_fraction(c) for c in self.coeffs)
        power = int(power)
        while power >= 2:
            coeffs = _pmul(coeffs, _ONE_MINUS_X2)
            power -= 2
        if not coeffs:
            power = 0
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "sin_prefactor_power", power)

    # --- constructors ---
    @classmethod
    def constant(cls, value: Number) -> "CosPolynomial":
        return cls((as_fraction(value),))

    @classmethod
    def cos(cls) -> "CosPolynomial":
        return cls(_X)

    @classmethod
    def affine(cls, c0: Number, c1: Number) -> "CosPolynomial":
        return cls((as_fraction(c0), as_fraction(c1)))

    # --- properties ---
    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, k: int) -> Fraction:
        return self.coeffs[k] if k < len(self.coeffs) else Fraction(0)

    def max_abs_coefficient(self) -> Fraction:
        return max((abs(c) for c in self.coeffs), default=Fraction(0))

    # --- arithmetic ---
    def _check_parity(self, other: "CosPolynomial") -> None:
        if self.sin_prefactor_power != other.sin_prefactor_power and not (self.is_zero or other.is_zero):
            raise BasisError("cannot add polynomials with different sin-prefactor parity")

    def __add__(self, other):
        if not isinstance(other, CosPolynomial):
            other = CosPolynomial.constant(other)
        self._check_parity(other)
        power = other.sin_prefactor_power if self.is_zero else self.sin_prefactor_power
        return CosPolynomial(_padd(self.coeffs, other.coeffs), power)

    __radd__ = __add__

    def __neg__(self):
        return CosPolynomial(_pscale(self.coeffs, Fraction(-1)), self.sin_prefactor_power)

    def __sub__(self, other):
        if not isinstance(other, CosPolynomial):
            other = CosPolynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CosPolynomial):
            return CosPolynomial(_pmul(self.coeffs, other.coeffs),
                                 self.sin_prefactor_power + other.sin_prefactor_power)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor: Number) -> "CosPolynomial":
        return CosPolynomial(_pscale(self.coeffs, as_fraction(factor)), self.sin_prefactor_power)

    def times_sin(self, power: int = 1) -> "CosPolynomial":
        return CosPolynomial(self.coeffs, self.sin_prefactor_power + power)

    def times_cos(self) -> "CosPolynomial":
        return CosPolynomial(_pmul(self.coeffs, _X), self.sin_prefactor_power)

    def divide_by_sin(self) -> "CosPolynomial":
        """Exact division by sin(theta); the result must still be a CosPolynomial."""
        if self.is_zero:
            return self
        if self.sin_prefactor_power == 1:
            return CosPolynomial(self.coeffs, 0)
        quot, rem = _pdivmod(self.coeffs, _ONE_MINUS_X2)
        if rem:
            raise BasisError("polynomial does not vanish at the poles; cannot divide by sin(theta)")
        return CosPolynomial(quot, 1)

    def divide_by_sin_squared(self) -> "CosPolynomial":
        if self.is_zero:
            return self
        quot, rem = _pdivmod(self.coeffs, _ONE_MINUS_X2)
        if rem:
            raise BasisError("polynomial does not vanish to second order at the poles")
        return CosPolynomial(quot, self.sin_prefactor_power)

    def d_theta(self) -> "CosPolynomial":
        """Exact derivative with respect to theta (dx/dtheta = -sin)."""
        f = self.coeffs
        if self.sin_prefactor_power == 0:
            return CosPolynomial(_pscale(_pderiv(f), Fraction(-1)), 1)
        # d/dtheta (sin f) = x f - (1 - x^2) f'
        return CosPolynomial(_padd(_pmul(_X, f), _pscale(_pmul(_ONE_MINUS_X2, _pderiv(f)), Fraction(-1))), 0)

    def compose_shift(self, pole: int) -> Poly:
        """Coefficients of f(pole - pole*u), i.e. f expanded in u = 1 - pole*x about x = pole."""
        return _pcompose(self.coeffs, (Fraction(pole), Fraction(-pole)))

    def affine_part(self) -> Tuple[Fraction, Fraction]:
        if self.sin_prefactor_power != 0:
            return Fraction(0), Fraction(0)
        return self.coefficient(0), self.coefficient(1)

    def without_affine_part(self) -> "CosPolynomial":
        if self.sin_prefactor_power != 0:
            return self
        c0, c1 = self.affine_part()
        return self - CosPolynomial.affine(c0, c1)

    # --- evaluation ---
    def value_at_x(self, x: Number) -> Fraction:
        """Exact value of the polynomial part at x (the sin prefactor is not applied)."""
        return _peval(self.coeffs, as_fraction(x))

    def float_coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs] or [0.0])

    def evaluate(self, theta):
        theta_arr = np.asarray(theta, dtype=float)
        values = nppoly.polyval(np.cos(theta_arr), self.float_coeffs())
        if self.sin_prefactor_power:
            values = values * np.sin(theta_arr)
        if np.ndim(theta) == 0:
            return float(values)
        return values

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            power = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
            terms.append(f"{c}{'*' + power if power else ''}")
        body = " + ".join(terms).replace("+ -", "- ")
        return f"sin*({body})" if self.sin_prefactor_power else body


# --- associated Legendre functions ---

def legendre_assoc(l: int, m: int, x):
    """P^m_l(x) with the Condon-Shortley phase, by upward recurrence in l."""
    if not isinstance(l, (int, np.integer)) or not isinstance(m, (int, np.integer)):
        raise DomainError("degree and order must be integers")
    if m < 0 or l < m:
        raise DomainError(f"need l >= m >= 0, got l={l}, m={m}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0):
        raise DomainError("argument must satisfy |x| <= 1")

    sin_theta = np.sqrt(np.clip(1.0 - x_arr * x_arr, 0.0, None))
    pmm = np.ones_like(x_arr)
    for i in range(1, m + 1):
        pmm = -(2 * i - 1) * sin_theta * pmm
    if l == m:
        result = pmm
    else:
        pm1 = x_arr * (2 * m + 1) * pmm
        for ll in range(m + 2, l + 1):
            pmm, pm1 = pm1, ((2 * ll - 1) * x_arr * pm1 - (ll + m - 1) * pmm) / (ll - m)
        result = pm1
    return float(result) if np.ndim(x) == 0 else result


@lru_cache(maxsize=None)
def legendre_poly(l: int) -> Poly:
    """Exact coefficients of the Legendre polynomial P_l via Rodrigues' formula."""
    base = _ppow((Fraction(-1), Fraction(0), Fraction(1)), l)
    for _ in range(l):
        base = _pderiv(base)
    return _pscale(base, Fraction(1, 2 ** l * factorial(l)))


@lru_cache(maxsize=None)
def associated_legendre_factor(l: int, m: int) -> Poly:
    """The polynomial g with P^m_l(x) = (1 - x^2)^(m/2) g(x), i.e. (-1)^m d^m P_l / dx^m."""
    if m < 0 or l < m:
        raise DomainError(f"need l >= m >= 0, got l={l}, m={m}")
    g = legendre_poly(l)
    for _ in range(m):
        g = _pderiv(g)
    return _pscale(g, Fraction((-1) ** m))


def legendre_assoc_poly(l: int, m: int) -> CosPolynomial:
    """P^m_l(cos theta) as an exact CosPolynomial."""
    return CosPolynomial(associated_legendre_factor(l, m), m)


def trig_mode(l: int, cosine: bool = False) -> CosPolynomial:
    """sin^(2l+2) theta, or cos(theta) sin^(2l+2) theta."""
    return CosPolynomial(_X if cosine else (Fraction(1),), 2 * l + 2)


def legendre_mode(n: int, l: int) -> CosPolynomial:
    """sin^(2+n) theta P^n_l(cos theta)."""
    return legendre_assoc_poly(l, n).times_sin(2 + n)


# --- changes of basis ---

def _trig_sum(a: Sequence[Fraction], b: Sequence[Fraction]) -> Poly:
    """sum_j (a_j + b_j x) (1 - x^2)^j."""
    out: Poly = ()
    weight: Poly = (Fraction(1),)
    for j in range(max(len(a), len(b))):
        aj = a[j] if j < len(a) else Fraction(0)
        bj = b[j] if j < len(b) else Fraction(0)
        out = _padd(out, _pmul((aj, bj), weight))
        weight = _pmul(weight, _ONE_MINUS_X2)
    return out


def _poly_to_trig(h: Sequence[Fraction]) -> Tuple[List[Fraction], List[Fraction]]:
    """Inverse of _trig_sum: split h into even/odd parts in x and expand in powers of 1 - x^2."""
    even = tuple(h[0::2])
    odd = tuple(h[1::2])
    one_minus_z = (Fraction(1), Fraction(-1))
    a = list(_pcompose(even, one_minus_z))
    b = list(_pcompose(odd, one_minus_z))
    size = max(len(a), len(b))
    a += [Fraction(0)] * (size - len(a))
    b += [Fraction(0)] * (size - len(b))
    return a, b


def trig_to_legendre(tail_a: Sequence[Number], tail_b: Sequence[Number], n: int) -> List[Fraction]:
    """Legendre coefficients c_l (index 0 is l = n) of sum_{l>=n} (a_l + b_l cos) sin^(2l+2)."""
    h = list(_trig_sum([as_fraction(v) for v in tail_a], [as_fraction(v) for v in tail_b]))
    if not h:
        return []
    c = [Fraction(0)] * len(h)
    for d in range(len(h) - 1, -1, -1):
        if h[d] == 0:
            continue
        g = associated_legendre_factor(n + d, n)
        coef = h[d] / g[d]
        c[d] = coef
        h = list(_padd(h, _pscale(g, -coef)))
        h += [Fraction(0)] * (d - len(h))
    return list(_trim(c))


def legendre_to_trig(legendre_c: Sequence[Number], n: int) -> Tuple[List[Fraction], List[Fraction]]:
    """Inverse of trig_to_legendre: tail coefficients (a_l, b_l), index 0 is l = n."""
    h: Poly = ()
    for i, c in enumerate(legendre_c):
        c = as_fraction(c)
        if c:
            h = _padd(h, _pscale(associated_legendre_factor(n + i, n), c))
    a, b = _poly_to_trig(h)
    while a and a[-1] == 0 and b[-1] == 0:
        a.pop()
        b.pop()
    return a, b


@dataclass(frozen=True)
class AstigmatismCoefficients:
    """Mixed decomposition of s: trig modes for l < n, Legendre modes for l >= n.

    s = sum_{l<n} (a_l + b_l cos) sin^(2l+2) + sin^(2+n) sum_{l>=n} c_l P^n_l(cos).
    `exact` is False when the coefficients came from floating point.
    """
    n: int
    trig_a: Tuple[Fraction, ...] = ()
    trig_b: Tuple[Fraction, ...] = ()
    legendre_c: Tuple[Fraction, ...] = ()
    exact: bool = True

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise BasisError(f"flow integer n must be >= 0, got {self.n!r}")
        for name in ("trig_a", "trig_b"):
            values = [as_fraction(v) for v in getattr(self, name)]
            if len(values) > self.n:
                raise BasisError(f"{name} has {len(values)} entries but only l < n={self.n} are trig modes")
            object.__setattr__(self, name, tuple(values + [Fraction(0)] * (self.n - len(values))))
        object.__setattr__(self, "legendre_c", _trim(as_fraction(v) for v in self.legendre_c))
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def zero(cls, n: int) -> "AstigmatismCoefficients":
        return cls(n)

    @classmethod
    def from_trig(cls, a: Sequence[Number], b: Sequence[Number], n: int,
                  exact: bool = True) -> "AstigmatismCoefficients":
        """Split a full trig decomposition at n."""
        a = [as_fraction(v) for v in a]
        b = [as_fraction(v) for v in b]
        size = max(len(a), len(b), n)
        a += [Fraction(0)] * (size - len(a))
        b += [Fraction(0)] * (size - len(b))
        return cls(n, tuple(a[:n]), tuple(b[:n]), tuple(trig_to_legendre(a[n:], b[n:], n)), exact)

    @classmethod
    def from_cos_polynomial(cls, s: CosPolynomial, n: int, exact: bool = True) -> "AstigmatismCoefficients":
        if s.is_zero:
            return cls(n, exact=exact)
        if s.sin_prefactor_power != 0:
            raise BasisError("astigmatism must be a polynomial in cos(theta) without an odd sin factor")
        a, b = _poly_to_trig(s.divide_by_sin_squared().coeffs)
        return cls.from_trig(a, b, n, exact)

    def rebased(self, n: int) -> "AstigmatismCoefficients":
        """The same astigmatism split for a different flow integer."""
        if n == self.n:
            return self
        a, b = self.full_trig()
        return AstigmatismCoefficients.from_trig(a, b, n, self.exact)

    def full_trig(self) -> Tuple[List[Fraction], List[Fraction]]:
        tail_a, tail_b = legendre_to_trig(self.legendre_c, self.n)
        a = list(self.trig_a) + tail_a
        b = list(self.trig_b) + tail_b
        while a and a[-1] == 0 and b[-1] == 0:
            a.pop()
            b.pop()
        return a, b

    def reduced_polynomial(self) -> Poly:
        """F = s / sin^2 theta as a polynomial in x."""
        head = _trig_sum(self.trig_a, self.trig_b)
        tail: Poly = ()
        for i, c in enumerate(self.legendre_c):
            if c:
                tail = _padd(tail, _pscale(associated_legendre_factor(self.n + i, self.n), c))
        return _padd(head, _pmul(_ppow(_ONE_MINUS_X2, self.n), tail))

    def to_cos_polynomial(self) -> CosPolynomial:
        return CosPolynomial(self.reduced_polynomial(), 2)

    def evaluate(self, theta):
        return self.to_cos_polynomial().evaluate(theta)

    def is_zero(self) -> bool:
        return not any(self.trig_a) and not any(self.trig_b) and not self.legendre_c

    def max_abs(self) -> Fraction:
        return max((abs(v) for v in self.trig_a + self.trig_b + self.legendre_c), default=Fraction(0))

    def scaled(self, factor: Number) -> "AstigmatismCoefficients":
        factor = as_fraction(factor)
        return AstigmatismCoefficients(self.n, tuple(factor * v for v in self.trig_a),
                                       tuple(factor * v for v in self.trig_b),
                                       tuple(factor * v for v in self.legendre_c), self.exact)


@dataclass(frozen=True)
class TildeCoefficients:
    """Amplitudes of the exponential trig modes: a_l(0) and b_l(0) after decoupling."""
    n: int
    tilde_a: Tuple[Fraction, ...]
    tilde_b: Tuple[Fraction, ...]


# --- quadratures ---

def trig_mode_quadrature(l: int, cosine: bool = False) -> CosPolynomial:
    """Support function of the trig mode with zero constant and cos coefficients.

    sin^(2l+2):      r = -sum_k (-1)^k C(l,k) x^(2k+2) / ((2k+1)(k+1))
    cos sin^(2l+2):  r = -2 sum_k (-1)^k C(l,k) x^(2k+3) / ((2k+2)(2k+3))
    """
    if l < 0:
        raise DomainError(f"mode index must be >= 0, got {l}")
    offset = 3 if cosine else 2
    coeffs = [Fraction(0)] * (2 * l + offset + 1)
    for k in range(l + 1):
        power = 2 * k + offset
        coeffs[power] = Fraction(-2 * (-1) ** k * comb(l, k), (power - 1) * power)
    return CosPolynomial(coeffs)


def legendre_mode_quadrature(n: int, l: int) -> CosPolynomial:
    """Support function of sin^(2+n) P^n_l for l >= n+2, affine part removed.

    r = -2 sin^(2+n) P^(2+n)_l / ((l+n+2)(l+n+1)(l-n)(l-n-1))
    """
    if l < n + 2:
        raise DomainError(f"closed-form Legendre quadrature needs l >= n+2, got n={n}, l={l}")
    denominator = (l + n + 2) * (l + n + 1) * (l - n) * (l - n - 1)
    r = legendre_assoc_poly(l, n + 2).times_sin(2 + n).scale(Fraction(-2, denominator))
    return r.without_affine_part()


def _double_integral(s: CosPolynomial) -> CosPolynomial:
    if s.is_zero:
        return s
    if s.sin_prefactor_power != 0:
        raise BasisError("astigmatism with an odd sin factor does not close up at the poles")
    try:
        reduced = s.divide_by_sin_squared()
    except BasisError as exc:
        raise BasisError("astigmatism does not vanish at both poles; no closed rotationally "
                         "symmetric surface exists") from exc
    f = _pintegrate(_pintegrate(_pscale(reduced.coeffs, Fraction(-2))))
    return CosPolynomial(f)


def quadrature_r_from_s(s: Union[AstigmatismCoefficients, CosPolynomial],
                        C1: Number = 0, C2: Number = 0) -> CosPolynomial:
    """Support function r = C2 + C1 cos + (particular solution with no affine part)."""
    affine = CosPolynomial.affine(C2, C1)
    if isinstance(s, CosPolynomial):
        return _double_integral(s) + affine

    r = affine
    for l in range(s.n):
        if s.trig_a[l]:
            r = r + trig_mode_quadrature(l).scale(s.trig_a[l])
        if s.trig_b[l]:
            r = r + trig_mode_quadrature(l, cosine=True).scale(s.trig_b[l])
    # l = n and n+1 have a vanishing closed-form denominator; route them through trig form
    low_a, low_b = legendre_to_trig(s.legendre_c[:2], s.n)
    for j, (aj, bj) in enumerate(zip(low_a, low_b)):
        if aj:
            r = r + trig_mode_quadrature(s.n + j).scale(aj)
        if bj:
            r = r + trig_mode_quadrature(s.n + j, cosine=True).scale(bj)
    for i, c in enumerate(s.legendre_c[2:], start=2):
        if c:
            r = r + legendre_mode_quadrature(s.n, s.n + i).scale(c)
    return r


def psi_from_r(r: CosPolynomial) -> CosPolynomial:
    """psi = r + (1 / 2 sin) d/dtheta (sin dr/dtheta)."""
    flux = r.d_theta().times_sin()
    return r + flux.d_theta().divide_by_sin().scale(Fraction(1, 2))


def s_from_r(r: CosPolynomial) -> CosPolynomial:
    """s = -(sin / 2) d/dtheta ((1 / sin) dr/dtheta)."""
    return r.d_theta().divide_by_sin().d_theta().times_sin().scale(Fraction(-1, 2))


def codazzi_mainardi_residual(psi: CosPolynomial, s: CosPolynomial) -> CosPolynomial:
    """d(psi + s)/dtheta + 2 cot(theta) s as an exact polynomial."""
    return (psi + s).d_theta() + s.divide_by_sin().times_cos().scale(2)


def astigmatism_operator(s: CosPolynomial, lam: Number) -> CosPolynomial:
    """Right-hand side of the astigmatism equation.

    ((lam-1)/2)(s'' + cot s') - lam cot s' + (1 + cos^2)/sin^2 s
    """
    lam = as_fraction(lam)
    first = s.d_theta()
    second = first.d_theta()
    cot_first = first.divide_by_sin().times_cos()
    reaction = s.divide_by_sin_squared() * CosPolynomial((1, 0, 1))
    return (second + cot_first).scale((lam - 1) / 2) - cot_first.scale(lam) + reaction


def sin_mode_psi_closed_form(l: int) -> CosPolynomial:
    """psi of the normalised sin^(2l+2) quadrature, l >= 1.

    psi = sum_k (-1)^k (k+2)/(k+1) C(l,k) - (1 + 1/(l+1)) sin^(2l+2)
    """
    if l < 1:
        raise DomainError("the closed form degenerates at l = 0; differentiate r instead")
    constant = sum((Fraction((-1) ** k * (k + 2) * comb(l, k), k + 1) for k in range(l + 1)), Fraction(0))
    return CosPolynomial.constant(constant) - trig_mode(l).scale(Fraction(l + 2, l + 1))


def cos_mode_dpsi_closed_form(l: int) -> CosPolynomial:
    """dpsi/dtheta for s = cos sin^(2l+2): -2(l+2) sin^(2l+1) + (2l+5) sin^(2l+3)."""
    return (CosPolynomial((Fraction(1),), 2 * l + 1).scale(-2 * (l + 2))
            + CosPolynomial((Fraction(1),), 2 * l + 3).scale(2 * l + 5))


# --- combinatorial identities ---

def lemma_one_sum(l: int, m: int) -> Fraction:
    """sum_{k=m-1}^{l} (-1)^(k+m) (k+2)/(k+1) C(l,k) C(k+1,m)."""
    if m < 1 or l < m - 1:
        raise DomainError(f"first identity needs l >= m-1 >= 0, got l={l}, m={m}")
    return sum((Fraction((-1) ** (k + m) * (k + 2) * comb(l, k) * comb(k + 1, m), k + 1)
                for k in range(m - 1, l + 1)), Fraction(0))


def lemma_one_value(l: int, m: int) -> Fraction:
    if l == m - 1:
        return Fraction(-1) - Fraction(1, l + 1)
    if l == m:
        return Fraction(1)
    return Fraction(0)


def lemma_two_sum(l: int, m: int) -> Fraction:
    if m < 0 or l < m:
        raise DomainError(f"second identity needs l >= m >= 0, got l={l}, m={m}")
    total = Fraction(1 - (2 * m + 1) * (m + 1)) * comb(l + 1, m)
    for k in range(m + 1, l + 2):
        inner = (Fraction((1 - (2 * k + 1) * (m + 2)) * (2 * m + 2), 2 * k + 1) * comb(k, m + 1)
                 + Fraction((1 - (2 * k + 1) * (m + 1)) * (2 * m + 1), 2 * k + 1) * comb(k, m))
        total += (-1) ** (k + m) * comb(l + 1, k) * inner
    return total


def lemma_two_value(l: int, m: int) -> Fraction:
    return Fraction(2 * (l + 1) * (l + 2)) if l == m else Fraction(0)


def verify_lemma_identities(l: int, m: int) -> Tuple[Optional[bool], Optional[bool]]:
    """Exact check of both identities; an entry is None outside that identity's domain."""
    first = lemma_one_sum(l, m) == lemma_one_value(l, m) if (m >= 1 and l >= m - 1) else None
    second = lemma_two_sum(l, m) == lemma_two_value(l, m) if (m >= 0 and l >= m) else None
    if first is None and second is None:
        raise DomainError(f"(l={l}, m={m}) lies outside the domain of both identities")
    return first, second


# --- sampled input ---

def gauss_theta_nodes(count: int) -> np.ndarray:
    """theta at the Gauss-Legendre nodes, increasing."""
    x, _ = npleg.leggauss(count)
    return np.sort(np.arccos(x))


def _legendre_series_to_poly(c: Sequence[Fraction]) -> Poly:
    out: Poly = ()
    for j, cj in enumerate(c):
        if cj:
            out = _padd(out, _pscale(legendre_poly(j), cj))
    return out


def decompose_samples(samples: Sequence[Tuple[float, float]], n: int, L_max: Optional[int] = None,
                      tol: Optional[float] = None) -> Tuple[AstigmatismCoefficients, float]:
    """Fit sampled s(theta) and return (mixed coefficients, L-infinity residual).

    s / sin^2 is expanded in Legendre polynomials of cos(theta): by Gauss-Legendre
    quadrature when the samples sit on Gauss nodes, by least squares otherwise.
    """
    L_max = DECOMPOSE_CONFIG["max_degree"] if L_max is None else L_max
    tol = DECOMPOSE_CONFIG["residual_tolerance"] if tol is None else tol
    if len(samples) == 0:
        raise BasisError("no samples to decompose")

    theta = np.array([float(t) for t, _ in samples])
    values = np.array([float(v) for _, v in samples])
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(values))):
        raise BasisError("samples contain non-finite values")
    if np.any(theta < 0) or np.any(theta > np.pi):
        raise BasisError("sample angles must lie in [0, pi]")
    if not np.any(values):
        return AstigmatismCoefficients.zero(n), 0.0

    x = np.cos(theta)
    sin2 = 1.0 - x * x
    keep = sin2 > DECOMPOSE_CONFIG["pole_guard"]
    xi = x[keep]
    fi = values[keep] / sin2[keep]
    order = np.argsort(xi)
    xi, fi = xi[order], fi[order]
    if xi.size == 0:
        raise BasisError("no samples away from the poles")

    nodes, weights = npleg.leggauss(xi.size)
    degree = min(L_max, xi.size - 1)
    if np.allclose(xi, nodes, rtol=0.0, atol=1e-12):
        vander = npleg.legvander(xi, degree)
        norms = (2.0 * np.arange(degree + 1) + 1.0) / 2.0
        series = norms * (vander.T @ (weights * fi))
        method = "gauss"
    else:
        series = npleg.legfit(xi, fi, degree)
        method = "lstsq"

    scale = np.max(np.abs(series))
    series[np.abs(series) < DECOMPOSE_CONFIG["drop_tolerance"] * scale] = 0.0
    rational = [Fraction(float(c)).limit_denominator(DECOMPOSE_CONFIG["max_denominator"]) for c in series]
    reduced = CosPolynomial(_legendre_series_to_poly(rational), 2)
    coeffs = AstigmatismCoefficients.from_cos_polynomial(reduced, n, exact=False)

    residual = float(np.max(np.abs(reduced.evaluate(theta) - values)))
    logger.debug("decompose_samples: %s fit, degree %d, residual %.3e", method, degree, residual)
    if residual > tol:
        raise IllConditionedFitError(residual, tol)
    return coeffs, residual
