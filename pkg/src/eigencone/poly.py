"""Exact sparse multivariate polynomials over Q[sqrt(3)].

Coefficients are pairs of rationals ``a + b*sqrt(3)``.  Polynomials are
immutable maps from exponent tuples to nonzero coefficients; canonical
ordering is graded lexicographic so that equality is structural.
"""

from __future__ import annotations

import decimal
import itertools
from fractions import Fraction
from types import MappingProxyType
from typing import Iterator, Mapping, Sequence

import numpy as np

_SQRT3_CTX = decimal.Context(prec=60)
_SQRT3 = _SQRT3_CTX.sqrt(decimal.Decimal(3))


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        raise TypeError("floats are not exact; pass a Fraction, int or 'p/q' string")
    return Fraction(v)


class Scalar:
    """Element ``a + b*sqrt(3)`` of Q[sqrt(3)], exact."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = _frac(a)
        self.b = _frac(b)

    @classmethod
    def _raw(cls, a: Fraction, b: Fraction) -> "Scalar":
        s = object.__new__(cls)
        s.a = a
        s.b = b
        return s

    @classmethod
    def coerce(cls, v) -> "Scalar":
        return v if isinstance(v, Scalar) else cls(v)

    def __add__(self, other):
        o = Scalar.coerce(other)
        return Scalar._raw(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, other):
        o = Scalar.coerce(other)
        return Scalar._raw(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __neg__(self):
        return Scalar._raw(-self.a, -self.b)

    def __mul__(self, other):
        o = Scalar.coerce(other)
        return Scalar._raw(self.a * o.a + 3 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def conjugate(self) -> "Scalar":
        return Scalar._raw(self.a, -self.b)

    def norm(self) -> Fraction:
        """Field norm a^2 - 3 b^2 (zero only for the zero element)."""
        return self.a * self.a - 3 * self.b * self.b

    def __truediv__(self, other):
        o = Scalar.coerce(other)
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q[sqrt(3)]")
        num = self * o.conjugate()
        return Scalar._raw(num.a / n, num.b / n)

    def __rtruediv__(self, other):
        return Scalar.coerce(other) / self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def is_rational(self) -> bool:
        return self.b == 0

    def to_float(self) -> float:
        if self.b == 0:
            return float(self.a)
        ctx = _SQRT3_CTX
        a = ctx.divide(decimal.Decimal(self.a.numerator), decimal.Decimal(self.a.denominator))
        b = ctx.divide(decimal.Decimal(self.b.numerator), decimal.Decimal(self.b.denominator))
        return float(ctx.add(a, ctx.multiply(b, _SQRT3)))

    __float__ = to_float

    def __repr__(self):
        return f"Scalar({_fmt_frac(self.a)!r}, {_fmt_frac(self.b)!r})"

    def __str__(self):
        if self.b == 0:
            return _fmt_frac(self.a)
        if self.a == 0:
            return f"{_fmt_frac(self.b)}*sqrt(3)"
        sign = "+" if self.b > 0 else "-"
        return f"{_fmt_frac(self.a)}{sign}{_fmt_frac(abs(self.b))}*sqrt(3)"


def _fmt_frac(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


ZERO = Scalar(0)
ONE = Scalar(1)
SQRT3 = Scalar(0, 1)

Exponent = tuple


def grlex_key(exp: Exponent):
    return (sum(exp), exp)


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables with Q[sqrt(3)] coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        clean: dict = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} has length {len(exp)}, expected {nvars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = Scalar.coerce(c)
            if c:
                clean[exp] = clean.get(exp, ZERO) + c
        self.nvars = nvars
        self._terms = {e: c for e, c in clean.items() if c}
        self._hash = None

    @classmethod
    def _from_clean(cls, nvars: int, terms: dict) -> "Polynomial":
        p = object.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls._from_clean(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c=1) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def monomial(cls, exp: Sequence[int], c=1) -> "Polynomial":
        return cls(len(exp), {tuple(exp): c})

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> Mapping[Exponent, Scalar]:
        return MappingProxyType(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[Exponent, Scalar]]:
        return iter(self.sorted_terms())

    def sorted_terms(self) -> list[tuple[Exponent, Scalar]]:
        return sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]))

    def coefficient(self, exp: Sequence[int]) -> Scalar:
        return self._terms.get(tuple(exp), ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Maximum total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def is_homogeneous(self, d: int) -> bool:
        return all(sum(e) == d for e in self._terms)

    def least_term(self) -> tuple[Exponent, Scalar]:
        """Graded-lex least term; used to recover proportionality constants."""
        if not self._terms:
            raise ValueError("zero polynomial has no terms")
        exp = min(self._terms, key=grlex_key)
        return exp, self._terms[exp]

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: "Polynomial"):
        if not isinstance(other, Polynomial):
            raise TypeError(f"expected Polynomial, got {type(other).__name__}")
        if other.nvars != self.nvars:
            raise ValueError(f"dimension mismatch: {self.nvars} vs {other.nvars} variables")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            return self + Polynomial.constant(self.nvars, other)
        self._check(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e)
            v = c if v is None else v + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Polynomial._from_clean(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._from_clean(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            return self + (-Scalar.coerce(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = Scalar.coerce(c)
        if not c:
            return Polynomial.zero(self.nvars)
        return Polynomial._from_clean(self.nvars, {e: c * v for e, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        return Polynomial._from_clean(self.nvars, {e: c for e, c in out.items() if c})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    # -- calculus ---------------------------------------------------------
    def partial(self, i: int) -> "Polynomial":
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range for {self.nvars} variables")
        out = {}
        for e, c in self._terms.items():
            k = e[i]
            if k:
                ne = e[:i] + (k - 1,) + e[i + 1:]
                out[ne] = c * k
        return Polynomial._from_clean(self.nvars, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.partial(i) for i in range(self.nvars)]

    def laplacian(self) -> "Polynomial":
        out = Polynomial.zero(self.nvars)
        for i in range(self.nvars):
            out = out + self.partial(i).partial(i)
        return out

    def permute(self, perm: Sequence[int]) -> "Polynomial":
        """Substitute x_i -> x_{perm[i]}."""
        if sorted(perm) != list(range(self.nvars)):
            raise ValueError("not a permutation")
        out = {}
        for e, c in self._terms.items():
            ne = [0] * self.nvars
            for i, k in enumerate(e):
                ne[perm[i]] = k
            out[tuple(ne)] = c
        return Polynomial._from_clean(self.nvars, out)

    # -- numerics ---------------------------------------------------------
    def eval(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.nvars,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.nvars},)")
        total = 0.0
        for e, c in self._terms.items():
            m = c.to_float()
            for xi, k in zip(x, e):
                if k:
                    m *= xi**k
            total += m
        return float(total)

    __call__ = eval

    def __repr__(self):
        return f"Polynomial({self.nvars}, {len(self._terms)} terms)"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def first_difference(p: Polynomial, q: Polynomial) -> tuple[Exponent, Scalar, Scalar] | None:
    """Graded-lex first monomial where ``p`` and ``q`` differ, with both coefficients."""
    d = p - q
    if d.is_zero():
        return None
    exp, _ = d.least_term()
    return exp, p.coefficient(exp), q.coefficient(exp)


# -- named polynomials -----------------------------------------------------

def norm_sq(n: int) -> Polynomial:
    if n < 1:
        raise ValueError("n must be positive")
    terms = {}
    for i in range(n):
        e = [0] * n
        e[i] = 2
        terms[tuple(e)] = 1
    return Polynomial(n, terms)


def cartan_p5() -> Polynomial:
    """Cartan isoparametric cubic in variables (x1, x2, z1, z2, z3)."""
    half3 = Fraction(3, 2)
    s = Scalar(0, Fraction(3, 2))  # 3*sqrt(3)/2
    t = {
        (3, 0, 0, 0, 0): 1,
        (1, 0, 2, 0, 0): half3,
        (1, 0, 0, 2, 0): half3,
        (1, 0, 0, 0, 2): -2 * half3,
        (1, 2, 0, 0, 0): -2 * half3,
        (0, 1, 2, 0, 0): s,
        (0, 1, 0, 2, 0): -s,
        (0, 0, 1, 1, 1): 2 * s,
    }
    return Polynomial(5, t)


def lawson_p4() -> Polynomial:
    """x3 (x1^2 - x2^2) + 2 x1 x2 x4."""
    return Polynomial(4, {(2, 0, 1, 0): 1, (0, 2, 1, 0): -1, (1, 1, 0, 1): 2})


def cayley_dickson_mul(x: Sequence[int], y: Sequence[int]) -> list[int]:
    """Product in the 2^k-dimensional Cayley-Dickson algebra, (a,b)(c,d) = (ac - d*b, da + bc*)."""
    n = len(x)
    if n == 1:
        return [x[0] * y[0]]
    h = n // 2
    a, b, c, d = x[:h], x[h:], y[:h], y[h:]

    def conj(v):
        return [v[0]] + [-t for t in v[1:]]

    ac = cayley_dickson_mul(a, c)
    db = cayley_dickson_mul(conj(d), b)
    da = cayley_dickson_mul(d, a)
    bc = cayley_dickson_mul(b, conj(c))
    return [u - v for u, v in zip(ac, db)] + [u + v for u, v in zip(da, bc)]


def _triple_real_part(dim: int, assoc: str) -> Polynomial:
    basis = [[1 if i == k else 0 for i in range(dim)] for k in range(dim)]
    terms = {}
    for i, j, k in itertools.product(range(dim), repeat=3):
        if assoc == "left":
            v = cayley_dickson_mul(cayley_dickson_mul(basis[i], basis[j]), basis[k])
        elif assoc == "right":
            v = cayley_dickson_mul(basis[i], cayley_dickson_mul(basis[j], basis[k]))
        else:
            raise ValueError("assoc must be 'left' or 'right'")
        if v[0]:
            e = [0] * (3 * dim)
            e[i] += 1
            e[dim + j] += 1
            e[2 * dim + k] += 1
            terms[tuple(e)] = v[0]
    return Polynomial(3 * dim, terms)


def quaternion_p12(assoc: str = "left") -> Polynomial:
    """Re(q1 q2 q3) on H^3 = R^12, blocks of four coordinates."""
    return _triple_real_part(4, assoc)


def octonion_p24(assoc: str = "left") -> Polynomial:
    """Re((o1 o2) o3) on O^3 = R^24; ``assoc='right'`` builds Re(o1 (o2 o3))."""
    return _triple_real_part(8, assoc)


NAMED = {
    "P4": lawson_p4,
    "P5": cartan_p5,
    "P12": quaternion_p12,
    "P24": octonion_p24,
}


# -- text serialization ----------------------------------------------------

def dumps(p: Polynomial) -> str:
    """One line per term, ``coeff_a coeff_b : e1 ... en``, graded-lex sorted."""
    lines = [f"# nvars {p.nvars}"]
    for e, c in p.sorted_terms():
        lines.append(f"{_fmt_frac(c.a)} {_fmt_frac(c.b)} : {' '.join(map(str, e))}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Polynomial:
    nvars = None
    terms = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            bits = line[1:].split()
            if len(bits) == 2 and bits[0] == "nvars":
                nvars = int(bits[1])
            continue
        try:
            lhs, rhs = line.split(":")
            a, b = lhs.split()
            exp = tuple(int(t) for t in rhs.split())
        except ValueError as err:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}") from err
        if exp in terms:
            raise ValueError(f"line {lineno}: duplicate monomial {exp}")
        terms[exp] = Scalar(Fraction(a), Fraction(b))
    if nvars is None:
        if not terms:
            raise ValueError("empty polynomial text without '# nvars' header")
        nvars = len(next(iter(terms)))
    return Polynomial(nvars, terms)


def compile_derivatives(p: Polynomial) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Float tables for batched evaluation of p, its gradient and Hessian.

    Returns ``(exps, c0, c1, c2)`` with ``exps`` of shape (K, n) listing every
    monomial that occurs in p or its first/second partials, and coefficient
    arrays of shapes (K,), (n, K), (n, n, K).
    """
    n = p.nvars
    grad = p.gradient()
    hess = [[g.partial(j) for j in range(n)] for g in grad]
    monos: dict = {}

    def idx(e):
        return monos.setdefault(e, len(monos))

    entries0 = [(idx(e), c.to_float()) for e, c in p.terms.items()]
    entries1 = [(i, idx(e), c.to_float()) for i, g in enumerate(grad) for e, c in g.terms.items()]
    entries2 = [
        (i, j, idx(e), c.to_float())
        for i in range(n)
        for j in range(n)
        for e, c in hess[i][j].terms.items()
    ]
    k = max(len(monos), 1)
    exps = np.zeros((k, n), dtype=np.int64)
    for e, m in monos.items():
        exps[m] = e
    c0 = np.zeros(k)
    c1 = np.zeros((n, k))
    c2 = np.zeros((n, n, k))
    for m, v in entries0:
        c0[m] = v
    for i, m, v in entries1:
        c1[i, m] = v
    for i, j, m, v in entries2:
        c2[i, j, m] = v
    return exps, c0, c1, c2


def eval_monomials(x: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """Monomial values for a batch of points: (N, n) x (K, n) -> (N, K)."""
    x = np.asarray(x, dtype=float)
    out = np.ones((x.shape[0], exps.shape[0]))
    for j in range(exps.shape[1]):
        col = exps[:, j]
        top = int(col.max()) if col.size else 0
        if top == 0:
            continue
        powers = np.ones((x.shape[0], top + 1))
        for k in range(1, top + 1):
            powers[:, k] = powers[:, k - 1] * x[:, j]
        out *= powers[:, col]
    return out

