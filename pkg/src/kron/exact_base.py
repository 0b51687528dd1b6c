"""Exact arithmetic kernels.

Finite fields F_{p^k} (table driven, Conway-style moduli), polynomials and
rational functions over F_q, truncated Laurent series for the local fields
F_{q^f}((u)) with u^e = 1/T, log-absolute values, and the truncated
s-expansion ring with coefficients in Q[L] where L stands for ln q.

Conventions
-----------
* ``k = F_q(T)`` with the degree place at infinity, uniformizer ``1/T``.
* A local field described by ``FieldDesc(q, e, f)`` is ``F_{q^f}((u))`` with
  ``u^e = 1/T``; so ``|u| = q^(-1/e)`` in the extended absolute value.
* Every absolute value is stored as a base-q logarithm (``LogValue``).
"""

from __future__ import annotations

import ast
import contextlib
import contextvars
import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence


class KronError(Exception):
    """Base class for library errors."""


class PrecisionExhausted(KronError):
    """A valuation could not be certified at the available precision."""


class SingularMatrix(KronError):
    """A matrix expected to be invertible is singular (or uncertifiably so)."""


class ParseError(KronError):
    """An algebraic expression could not be parsed."""


DEFAULT_PRECISION = 64
PRECISION_CAP = 1024

_precision: contextvars.ContextVar[int] = contextvars.ContextVar(
    "kron_precision", default=DEFAULT_PRECISION
)


def current_precision() -> int:
    return _precision.get()


@contextlib.contextmanager
def precision(terms: int):
    """Temporarily set the number of Laurent terms used for inexact series."""
    token = _precision.set(int(terms))
    try:
        yield
    finally:
        _precision.reset(token)


def with_precision_retry(fn: Callable, *args, start: int | None = None, cap: int = PRECISION_CAP, **kwargs):
    """Run ``fn`` doubling the precision on ``PrecisionExhausted`` up to ``cap``."""
    terms = start or current_precision()
    last = None
    while terms <= cap:
        with precision(terms):
            try:
                return fn(*args, **kwargs)
            except PrecisionExhausted as exc:
                last = exc
        terms *= 2
    raise PrecisionExhausted(f"precision cap {cap} reached: {last}")


# ---------------------------------------------------------------------------
# finite fields

# Conway polynomials, coefficients from the constant term upwards.
CONWAY = {
    (2, 1): (1, 1), (2, 2): (1, 1, 1), (2, 3): (1, 1, 0, 1), (2, 4): (1, 1, 0, 0, 1),
    (2, 5): (1, 0, 1, 0, 0, 1), (2, 6): (1, 1, 0, 1, 1, 0, 1), (2, 8): (1, 0, 1, 1, 1, 0, 0, 0, 1),
    (3, 1): (1, 1), (3, 2): (2, 2, 1), (3, 3): (1, 2, 0, 1), (3, 4): (2, 0, 0, 2, 1),
    (5, 1): (3, 1), (5, 2): (2, 4, 1), (5, 3): (3, 3, 0, 1),
    (7, 1): (4, 1), (7, 2): (3, 6, 1),
    (11, 1): (9, 1), (11, 2): (2, 7, 1), (13, 1): (11, 1), (13, 2): (2, 12, 1),
}


def prime_power(q: int) -> tuple[int, int]:
    """Return ``(p, k)`` with ``q = p^k``; raise ``ValueError`` otherwise."""
    if q < 2:
        raise ValueError(f"{q} is not a prime power")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    k, rest = 0, q
    while rest % p == 0:
        rest //= p
        k += 1
    if rest != 1:
        raise ValueError(f"{q} is not a prime power")
    return p, k


class FiniteField:
    """F_{p^k} with elements encoded as integers whose base-p digits are the
    coordinates in powers of a root of the Conway polynomial."""

    def __init__(self, order: int):
        p, k = prime_power(order)
        if (p, k) not in CONWAY:
            raise ValueError(f"no Conway polynomial tabulated for {p}^{k}")
        self.order, self.p, self.degree = order, p, k
        self.modulus = CONWAY[(p, k)]
        if k == 1:
            self.generator = (-self.modulus[0]) % p
        else:
            self.generator = p
        digits = [self._digits(a) for a in range(order)]
        self.add = [[self._undigits([(x + y) % p for x, y in zip(da, db)]) for db in digits] for da in digits]
        self.neg = [self._undigits([(-x) % p for x in da]) for da in digits]
        self.sub = [[self.add[a][self.neg[b]] for b in range(order)] for a in range(order)]
        exp = [1]
        for _ in range(order - 2):
            exp.append(self._mul_by_gen(exp[-1]))
        log = [0] * order
        for i, a in enumerate(exp):
            log[a] = i
        if len(set(exp)) != order - 1:
            raise ValueError(f"modulus for F_{order} is not primitive")
        n = order - 1
        self.exp, self.log = exp, log
        self.mul = [[0] * order for _ in range(order)]
        for a in range(1, order):
            row = self.mul[a]
            la = log[a]
            for b in range(1, order):
                row[b] = exp[(la + log[b]) % n]
        self.inv = [0] + [exp[(-log[a]) % n] for a in range(1, order)]

    def _digits(self, a: int) -> list[int]:
        out = []
        for _ in range(self.degree):
            out.append(a % self.p)
            a //= self.p
        return out

    def _undigits(self, ds: Sequence[int]) -> int:
        a = 0
        for d in reversed(ds):
            a = a * self.p + d
        return a

    def _mul_by_gen(self, a: int) -> int:
        p, k = self.p, self.degree
        if k == 1:
            return (a * self.generator) % p
        ds = [0] + self._digits(a)
        top = ds[k]
        for i in range(k):
            ds[i] = (ds[i] - top * self.modulus[i]) % p
        return self._undigits(ds[:k])

    def power(self, a: int, n: int) -> int:
        if a == 0:
            return 0 if n > 0 else 1
        return self.exp[(self.log[a] * n) % (self.order - 1)]

    def from_int(self, n: int) -> int:
        return n % self.p

    @functools.cache
    def embedding_from(self, small_order: int) -> tuple[int, ...]:
        """Images of the elements of F_{small_order} under the Conway-compatible embedding."""
        if small_order == self.order:
            return tuple(range(self.order))
        small = gf(small_order)
        if small.p != self.p or self.degree % small.degree:
            raise ValueError(f"F_{small_order} does not embed in F_{self.order}")
        if small.degree == 1:
            return tuple(range(self.p))
        gamma = self.exp[(self.order - 1) // (small_order - 1)]
        images = []
        for a in range(small_order):
            acc, power = 0, 1
            for d in small._digits(a):
                acc = self.add[acc][self.mul[self.from_int(d)][power]]
                power = self.mul[power][gamma]
            images.append(acc)
        return tuple(images)

    def format(self, a: int, symbol: str = "g") -> str:
        if self.degree == 1:
            return str(a)
        terms = []
        for i, d in reversed(list(enumerate(self._digits(a)))):
            if d == 0:
                continue
            mono = "" if i == 0 else (symbol if i == 1 else f"{symbol}^{i}")
            if not mono:
                terms.append(str(d))
            else:
                terms.append(mono if d == 1 else f"{d}*{mono}")
        return "+".join(terms) if terms else "0"

    def __repr__(self):
        return f"GF({self.order})"


@functools.cache
def gf(order: int) -> FiniteField:
    return FiniteField(order)


# ---------------------------------------------------------------------------
# polynomials and rational functions over F_q


class Poly:
    """Polynomial over a finite field; coefficients from the constant term up."""

    __slots__ = ("F", "c")

    def __init__(self, F: FiniteField, coeffs: Iterable[int]):
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        self.F = F
        self.c = tuple(c)

    @classmethod
    def const(cls, F: FiniteField, a: int) -> "Poly":
        return cls(F, (a,))

    @classmethod
    def monomial(cls, F: FiniteField, d: int, a: int = 1) -> "Poly":
        return cls(F, [0] * d + [a])

    @property
    def deg(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def lc(self) -> int:
        return self.c[-1] if self.c else 0

    def __eq__(self, other):
        return isinstance(other, Poly) and self.F is other.F and self.c == other.c

    def __hash__(self):
        return hash((self.F.order, self.c))

    def __add__(self, other: "Poly") -> "Poly":
        add = self.F.add
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, y in enumerate(b):
            out[i] = add[out[i]][y]
        return Poly(self.F, out)

    def __neg__(self) -> "Poly":
        neg = self.F.neg
        return Poly(self.F, [neg[x] for x in self.c])

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.c or not other.c:
            return Poly(self.F, ())
        add, mul = self.F.add, self.F.mul
        out = [0] * (len(self.c) + len(other.c) - 1)
        for i, x in enumerate(self.c):
            if x == 0:
                continue
            row = mul[x]
            for j, y in enumerate(other.c):
                if y:
                    out[i + j] = add[out[i + j]][row[y]]
        return Poly(self.F, out)

    def scale(self, a: int) -> "Poly":
        row = self.F.mul[a]
        return Poly(self.F, [row[x] for x in self.c])

    def shift(self, d: int) -> "Poly":
        return Poly(self.F, [0] * d + list(self.c)) if self.c else self

    def __divmod__(self, other: "Poly"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        F = self.F
        rem = list(self.c)
        db = other.deg
        inv_lc = F.inv[other.lc()]
        quot = [0] * max(0, len(rem) - db)
        for i in range(len(rem) - 1, db - 1, -1):
            coef = rem[i]
            if coef == 0:
                continue
            factor = F.mul[coef][inv_lc]
            quot[i - db] = factor
            row = F.mul[factor]
            for j, y in enumerate(other.c):
                rem[i - db + j] = F.sub[rem[i - db + j]][row[y]]
        return Poly(F, quot), Poly(F, rem)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def monic(self) -> "Poly":
        return self.scale(self.F.inv[self.lc()]) if self.c else self

    def gcd(self, other: "Poly") -> "Poly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a % b
        return a.monic()

    def to_str(self, var: str = "T") -> str:
        if not self.c:
            return "0"
        terms = []
        F = self.F
        for i in range(len(self.c) - 1, -1, -1):
            a = self.c[i]
            if a == 0:
                continue
            coef = F.format(a)
            mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
            if not mono:
                terms.append(coef if F.degree == 1 or "+" not in coef else f"({coef})")
            elif coef == "1":
                terms.append(mono)
            else:
                coef = f"({coef})" if "+" in coef else coef
                terms.append(f"{coef}*{mono}")
        return "+".join(terms)

    def __repr__(self):
        return f"Poly({self.to_str()})"


class RatFunc:
    """Element of F_q(T) in lowest terms with monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None, *, reduced: bool = False):
        if den is None:
            den = Poly.const(num.F, 1)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if not reduced:
            if num.is_zero():
                den = Poly.const(num.F, 1)
            else:
                g = num.gcd(den)
                if g.deg > 0:
                    num, den = num // g, den // g
                lc_inv = num.F.inv[den.lc()]
                num, den = num.scale(lc_inv), den.scale(lc_inv)
        self.num, self.den = num, den

    @property
    def F(self) -> FiniteField:
        return self.num.F

    @classmethod
    def const(cls, F: FiniteField, a: int) -> "RatFunc":
        return cls(Poly.const(F, a), reduced=True)

    @classmethod
    def T(cls, F: FiniteField) -> "RatFunc":
        return cls(Poly.monomial(F, 1), reduced=True)

    @classmethod
    def zero(cls, F: FiniteField) -> "RatFunc":
        return cls(Poly(F, ()), reduced=True)

    @classmethod
    def one(cls, F: FiniteField) -> "RatFunc":
        return cls.const(F, 1)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.deg == 0

    def degree(self) -> int | None:
        """log_q |x|_inf, or None for zero."""
        if self.num.is_zero():
            return None
        return self.num.deg - self.den.deg

    def leading_coeff(self) -> int:
        return self.F.mul[self.num.lc()][self.F.inv[self.den.lc()]]

    def split(self) -> tuple[Poly, "RatFunc"]:
        """Polynomial part and proper fractional part (degree < 0 or zero)."""
        quot, rem = divmod(self.num, self.den)
        return quot, RatFunc(rem, self.den, reduced=True) if not rem.is_zero() else RatFunc.zero(self.F)

    def __eq__(self, other):
        if isinstance(other, int):
            other = RatFunc.const(self.F, other % self.F.p)
        return isinstance(other, RatFunc) and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __add__(self, other: "RatFunc") -> "RatFunc":
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den, reduced=True)

    def __sub__(self, other: "RatFunc") -> "RatFunc":
        return self + (-other)

    def __mul__(self, other: "RatFunc") -> "RatFunc":
        return RatFunc(self.num * other.num, self.den * other.den)

    def inverse(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other: "RatFunc") -> "RatFunc":
        return self * other.inverse()

    def __pow__(self, n: int) -> "RatFunc":
        base = self if n >= 0 else self.inverse()
        out = RatFunc.one(self.F)
        for _ in range(abs(n)):
            out = out * base
        return out

    def to_str(self) -> str:
        if self.is_poly():
            s = self.num.scale(self.F.inv[self.den.lc()]).to_str()
            return s
        n, d = self.num.to_str(), self.den.to_str()
        n = f"({n})" if any(ch in n for ch in "+*^") else n
        d = f"({d})" if any(ch in d for ch in "+*^") else d
        return f"{n}/{d}"

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"RatFunc({self.to_str()})"


# ---------------------------------------------------------------------------
# expression parsing via the stdlib ast module


class Algebra:
    """Callbacks used by ``parse_expr``; subclasses map names and integers."""

    def const(self, n: int):
        raise NotImplementedError

    def symbol(self, name: str):
        raise ParseError(f"unknown symbol {name!r}")


def parse_expr(text: str, algebra: Algebra):
    """Parse ``text`` (operators + - * / ^ and parentheses) into ``algebra``."""
    try:
        tree = ast.parse(text.replace("^", "**").replace("·", "*"), mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc}") from exc

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return algebra.const(node.value)
        if isinstance(node, ast.Name):
            return algebra.symbol(node.id)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = walk(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                if not (isinstance(node.right, ast.Constant) and isinstance(node.right.value, int)):
                    exponent = node.right
                    if isinstance(exponent, ast.UnaryOp) and isinstance(exponent.op, ast.USub) \
                            and isinstance(exponent.operand, ast.Constant):
                        return walk(node.left) ** (-exponent.operand.value)
                    raise ParseError(f"non-integer exponent in {text!r}")
                return walk(node.left) ** node.right.value
            left, right = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                return left / right
        raise ParseError(f"unsupported syntax in {text!r}")

    return walk(tree)


class _RatFuncAlgebra(Algebra):
    def __init__(self, F: FiniteField):
        self.F = F

    def const(self, n):
        return RatFunc.const(self.F, n % self.F.p)

    def symbol(self, name):
        if name == "T":
            return RatFunc.T(self.F)
        if name == "g" and self.F.degree > 1:
            return RatFunc.const(self.F, self.F.generator)
        raise ParseError(f"unknown symbol {name!r} in F_{self.F.order}(T)")


def parse_ratfunc(text: str | int, q: int) -> RatFunc:
    """Parse a rational function in T over F_q (``g`` names the field generator)."""
    F = gf(q)
    if isinstance(text, int):
        return RatFunc.const(F, text % F.p)
    value = parse_expr(str(text), _RatFuncAlgebra(F))
    return value


def poly_T(F: FiniteField, coeffs: Sequence[int]) -> RatFunc:
    return RatFunc(Poly(F, coeffs), reduced=True)


# ---------------------------------------------------------------------------
# log absolute values


@functools.total_ordering
class LogValue:
    """Base-q logarithm of an absolute value; ``BOTTOM`` stands for |0| = 0."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = None if value is None else Fraction(value)

    @property
    def is_bottom(self) -> bool:
        return self.value is None

    def __eq__(self, other):
        if isinstance(other, LogValue):
            return self.value == other.value
        if other is None:
            return self.value is None
        return self.value is not None and self.value == other

    def __lt__(self, other):
        other = other if isinstance(other, LogValue) else LogValue(other)
        if self.value is None:
            return other.value is not None
        if other.value is None:
            return False
        return self.value < other.value

    def __hash__(self):
        return hash(self.value)

    def __add__(self, other):
        other = other if isinstance(other, LogValue) else LogValue(other)
        if self.value is None or other.value is None:
            return BOTTOM
        return LogValue(self.value + other.value)

    __radd__ = __add__

    def __sub__(self, other):
        other = other if isinstance(other, LogValue) else LogValue(other)
        if other.value is None:
            raise ZeroDivisionError("division by |0|")
        if self.value is None:
            return BOTTOM
        return LogValue(self.value - other.value)

    def scaled(self, factor) -> "LogValue":
        return BOTTOM if self.value is None else LogValue(self.value * factor)

    def to_json(self) -> str:
        return "bottom" if self.value is None else str(self.value)

    def __repr__(self):
        return f"LogValue({self.to_json()})"


BOTTOM = LogValue(None)


# ---------------------------------------------------------------------------
# local fields and Laurent series


@dataclass(frozen=True)
class FieldDesc:
    """Local field F_{q^f}((u)) with u^e = 1/T over k_inf = F_q((1/T))."""

    q: int
    e: int = 1
    f: int = 1

    def __post_init__(self):
        prime_power(self.q)
        if self.e < 1 or self.f < 1:
            raise ValueError("e and f must be positive")

    @property
    def n(self) -> int:
        return self.e * self.f

    def to_json(self) -> dict:
        return {"q": self.q, "e": self.e, "f": self.f}


class LocalField:
    """Arithmetic context for a ``FieldDesc``: coefficient tables and the
    fixed basis xi^i u^j over the base completion."""

    def __init__(self, desc: FieldDesc):
        self.desc = desc
        self.q, self.e, self.f = desc.q, desc.e, desc.f
        self.base = gf(desc.q)
        self.coeff = gf(desc.q ** desc.f)
        self.embed = self.coeff.embedding_from(desc.q)
        self.xi = self.coeff.generator if desc.f > 1 else 1
        xi_pows = [1]
        for _ in range(desc.f - 1):
            xi_pows.append(self.coeff.mul[xi_pows[-1]][self.xi])
        self.xi_powers = tuple(xi_pows)
        coords = {}
        C = self.coeff
        for idx in range(desc.q ** desc.f):
            digits = []
            rest = idx
            for _ in range(desc.f):
                digits.append(rest % desc.q)
                rest //= desc.q
            acc = 0
            for a, xp in zip(digits, xi_pows):
                acc = C.add[acc][C.mul[self.embed[a]][xp]]
            coords[acc] = tuple(digits)
        if len(coords) != desc.q ** desc.f:
            raise ValueError("xi does not generate the residue extension")
        self.coords = tuple(coords[a] for a in range(desc.q ** desc.f))

    def __repr__(self):
        return f"LocalField(q={self.q}, e={self.e}, f={self.f})"


@functools.cache
def local_field(q: int, e: int = 1, f: int = 1) -> LocalField:
    return LocalField(FieldDesc(q, e, f))


def base_field(q: int) -> LocalField:
    return local_field(q, 1, 1)


class LaurentElem:
    """Truncated Laurent series sum c_k u^k over F_{q^f}.

    ``val`` is the exponent of ``coeffs[0]`` (nonzero unless the element is a
    zero), ``prec`` the absolute precision: every coefficient with exponent
    below ``prec`` is exact; ``prec is None`` marks an exact finite series.
    """

    __slots__ = ("K", "val", "coeffs", "prec")

    def __init__(self, K: LocalField, val: int, coeffs: Sequence[int], prec: int | None):
        c = list(coeffs)
        if prec is not None and val + len(c) > prec:
            del c[max(0, prec - val):]
        start = 0
        while start < len(c) and c[start] == 0:
            start += 1
        val += start
        c = c[start:]
        while c and c[-1] == 0:
            c.pop()
        if not c:
            val = prec if prec is not None else 0
        self.K, self.val, self.coeffs, self.prec = K, val, tuple(c), prec

    # constructors -----------------------------------------------------------
    @classmethod
    def zero(cls, K: LocalField) -> "LaurentElem":
        return cls(K, 0, (), None)

    @classmethod
    def const(cls, K: LocalField, a: int) -> "LaurentElem":
        """Constant from F_{q^f} (already in coefficient-field encoding)."""
        return cls(K, 0, (a,), None)

    @classmethod
    def uniformizer(cls, K: LocalField, power: int = 1) -> "LaurentElem":
        return cls(K, power, (1,), None)

    @classmethod
    def from_poly(cls, K: LocalField, p: Poly) -> "LaurentElem":
        if p.is_zero():
            return cls.zero(K)
        e, emb = K.e, K.embed
        d = p.deg
        coeffs = [0] * (e * d + 1)
        for i, a in enumerate(p.c):
            coeffs[e * (d - i)] = emb[a]
        return cls(K, -e * d, coeffs, None)

    @classmethod
    def from_ratfunc(cls, K: LocalField, x: RatFunc, terms: int | None = None) -> "LaurentElem":
        num = cls.from_poly(K, x.num)
        if x.den.deg == 0:
            return num.scale(K.embed[K.base.inv[x.den.lc()]])
        return num * cls.from_poly(K, x.den).inverse(terms)

    # basic queries ----------------------------------------------------------
    @property
    def exact(self) -> bool:
        return self.prec is None

    def is_certified_zero(self) -> bool:
        return not self.coeffs and self.prec is None

    def is_nonzero(self) -> bool:
        return bool(self.coeffs)

    def valuation(self) -> int:
        """Exact u-adic valuation; raises if not certified."""
        if not self.coeffs:
            raise PrecisionExhausted("valuation of a series that vanishes to working precision")
        return self.val

    def log_abs(self) -> LogValue:
        """log_q |x| in the extended (F-) normalization."""
        if self.is_certified_zero():
            return BOTTOM
        return LogValue(Fraction(-self.valuation(), self.K.e))

    def log_upper_bound(self) -> Fraction | None:
        """Upper bound on log_q |x|; None for a certified zero."""
        if self.coeffs:
            return Fraction(-self.val, self.K.e)
        if self.prec is None:
            return None
        return Fraction(-self.prec, self.K.e)

    def leading(self) -> int:
        return self.coeffs[0] if self.coeffs else 0

    def coeff(self, k: int) -> int:
        if self.prec is not None and k >= self.prec:
            raise PrecisionExhausted(f"coefficient u^{k} beyond precision {self.prec}")
        i = k - self.val
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return 0

    def rel_precision(self) -> int | None:
        if self.prec is None:
            return None
        return self.prec - self.val

    # arithmetic ---------------------------------------------------------------
    def _combine(self, other: "LaurentElem", subtract: bool) -> "LaurentElem":
        K = self.K
        C = K.coeff
        op = C.sub if subtract else C.add
        prec = _min_prec(self.prec, other.prec)
        if not other.coeffs:
            if subtract:
                return LaurentElem(K, self.val, self.coeffs, prec)
            return LaurentElem(K, self.val, self.coeffs, prec)
        if not self.coeffs:
            base = other.neg() if subtract else other
            return LaurentElem(K, base.val, base.coeffs, prec)
        lo = min(self.val, other.val)
        hi = max(self.val + len(self.coeffs), other.val + len(other.coeffs))
        if prec is not None:
            hi = min(hi, prec)
        if hi <= lo:
            return LaurentElem(K, lo, (), prec)
        out = [0] * (hi - lo)
        for i, a in enumerate(self.coeffs):
            j = self.val - lo + i
            if j < len(out):
                out[j] = a
        for i, b in enumerate(other.coeffs):
            j = other.val - lo + i
            if j < len(out):
                out[j] = op[out[j]][b]
        return LaurentElem(K, lo, out, prec)

    def __add__(self, other: "LaurentElem") -> "LaurentElem":
        return self._combine(other, False)

    def __sub__(self, other: "LaurentElem") -> "LaurentElem":
        return self._combine(other, True)

    def neg(self) -> "LaurentElem":
        neg = self.K.coeff.neg
        return LaurentElem(self.K, self.val, [neg[a] for a in self.coeffs], self.prec)

    __neg__ = neg

    def scale(self, a: int) -> "LaurentElem":
        if a == 0:
            return LaurentElem.zero(self.K) if self.prec is None else LaurentElem(self.K, self.prec, (), self.prec)
        row = self.K.coeff.mul[a]
        return LaurentElem(self.K, self.val, [row[x] for x in self.coeffs], self.prec)

    def shift(self, k: int) -> "LaurentElem":
        """Multiply by u^k."""
        return LaurentElem(self.K, self.val + k, self.coeffs, None if self.prec is None else self.prec + k)

    def __mul__(self, other: "LaurentElem") -> "LaurentElem":
        K = self.K
        if self.is_certified_zero() or other.is_certified_zero():
            return LaurentElem.zero(K)
        # absolute precision of the product
        bounds = []
        if self.prec is not None:
            bounds.append(self.prec + (other.val if other.coeffs else other.prec))
        if other.prec is not None:
            bounds.append(other.prec + (self.val if self.coeffs else self.prec))
        prec = min(bounds) if bounds else None
        if not self.coeffs or not other.coeffs:
            return LaurentElem(K, prec, (), prec)
        lo = self.val + other.val
        n = len(self.coeffs) + len(other.coeffs) - 1
        if prec is not None:
            n = min(n, prec - lo)
        if n <= 0:
            return LaurentElem(K, lo, (), prec)
        C = K.coeff
        add, mul = C.add, C.mul
        out = [0] * n
        b = other.coeffs
        lb = len(b)
        for i, x in enumerate(self.coeffs):
            if i >= n:
                break
            if x == 0:
                continue
            row = mul[x]
            top = min(lb, n - i)
            for j in range(top):
                y = b[j]
                if y:
                    out[i + j] = add[out[i + j]][row[y]]
        return LaurentElem(K, lo, out, prec)

    def inverse(self, terms: int | None = None) -> "LaurentElem":
        """Multiplicative inverse with relative precision ``terms`` (or inherited)."""
        if not self.coeffs:
            raise PrecisionExhausted("inverse of a series that vanishes to working precision")
        K = self.K
        C = K.coeff
        rel = self.rel_precision()
        if rel is None:
            if len(self.coeffs) == 1:
                return LaurentElem(K, -self.val, (C.inv[self.coeffs[0]],), None)
            rel = terms or current_precision()
        elif terms is not None:
            rel = min(rel, terms)
        a = self.coeffs
        inv0 = C.inv[a[0]]
        out = [0] * rel
        out[0] = inv0
        add, mul, neg = C.add, C.mul, C.neg
        la = len(a)
        for k in range(1, rel):
            acc = 0
            for j in range(1, min(k, la - 1) + 1):
                if a[j] and out[k - j]:
                    acc = add[acc][mul[a[j]][out[k - j]]]
            out[k] = mul[neg[acc]][inv0]
        return LaurentElem(K, -self.val, out, -self.val + rel)

    def __truediv__(self, other: "LaurentElem") -> "LaurentElem":
        return self * other.inverse()

    def __pow__(self, n: int) -> "LaurentElem":
        if n < 0:
            return self.inverse() ** (-n)
        out = LaurentElem.const(self.K, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def truncate(self, prec: int) -> "LaurentElem":
        return LaurentElem(self.K, self.val, self.coeffs, _min_prec(self.prec, prec))

    def to_base_coords(self) -> list["LaurentElem"]:
        """Coordinates over k_inf in the fixed basis xi^i u^j (i outer, j inner)."""
        K = self.K
        B = base_field(K.q)
        e, f = K.e, K.f
        buckets = [[dict() for _ in range(e)] for _ in range(f)]
        for idx, c in enumerate(self.coeffs):
            if c == 0:
                continue
            k = self.val + idx
            m, j = divmod(k, e)
            digits = K.coords[c]
            for i in range(f):
                if digits[i]:
                    buckets[i][j][m] = digits[i]
        out = []
        for i in range(f):
            for j in range(e):
                prec = None if self.prec is None else -((j - self.prec) // e)
                terms = buckets[i][j]
                if not terms:
                    out.append(LaurentElem(B, prec if prec is not None else 0, (), prec))
                    continue
                lo, hi = min(terms), max(terms)
                coeffs = [terms.get(m, 0) for m in range(lo, hi + 1)]
                out.append(LaurentElem(B, lo, coeffs, prec))
        return out

    @classmethod
    def from_base_coords(cls, K: LocalField, coords: Sequence["LaurentElem"]) -> "LaurentElem":
        """Inverse of ``to_base_coords``."""
        e, f = K.e, K.f
        acc = LaurentElem.zero(K)
        for i in range(f):
            for j in range(e):
                y = coords[i * e + j]
                lifted = y.lift_to(K)
                acc = acc + lifted.scale(K.xi_powers[i]).shift(j)
        return acc

    def lift_to(self, K: LocalField) -> "LaurentElem":
        """View an element of k_inf inside the extension K (u_F = u^e)."""
        if self.K is K:
            return self
        e, emb = K.e, K.embed
        if not self.coeffs:
            return LaurentElem(K, 0 if self.prec is None else self.prec * e, (), None if self.prec is None else self.prec * e)
        coeffs = [0] * (e * (len(self.coeffs) - 1) + 1)
        for i, a in enumerate(self.coeffs):
            coeffs[e * i] = emb[a]
        prec = None if self.prec is None else self.prec * e
        return LaurentElem(K, self.val * e, coeffs, prec)

    def to_json(self) -> dict:
        """Exact form: coefficient codes of u^val, u^(val+1), ... and the precision (null if exact)."""
        return {"val": self.val, "coeffs": list(self.coeffs), "prec": self.prec}

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:6])
        more = "..." if len(self.coeffs) > 6 else ""
        return f"LaurentElem(u^{self.val}*[{head}{more}], prec={self.prec})"


def _min_prec(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def laurent_expand(x: RatFunc, field: FieldDesc | LocalField, terms: int | None = None) -> LaurentElem:
    """Expansion of a rational function at infinity, certified via the retry ladder."""
    K = field if isinstance(field, LocalField) else local_field(field.q, field.e, field.f)
    if x.is_zero():
        return LaurentElem.zero(K)
    start = terms or current_precision()
    size = start
    while size <= PRECISION_CAP:
        out = LaurentElem.from_ratfunc(K, x, size)
        if out.coeffs:
            return out
        size *= 2
    raise PrecisionExhausted("expansion failed to certify a leading coefficient")


def certified_valuation(x: LaurentElem) -> LogValue:
    return x.log_abs()


# ---------------------------------------------------------------------------
# Q[L] and truncated s-expansions


class QL:
    """Polynomial in the formal symbol L = ln q with rational coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable = ()):
        c = [Fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.c = tuple(c)

    @classmethod
    def const(cls, x) -> "QL":
        return cls((x,))

    @classmethod
    def L(cls, x=1, power: int = 1) -> "QL":
        return cls([0] * power + [x])

    def coeff(self, i: int) -> Fraction:
        return self.c[i] if i < len(self.c) else Fraction(0)

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def __eq__(self, other):
        if not isinstance(other, QL):
            other = QL.const(other)
        return self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def __add__(self, other: "QL") -> "QL":
        if not isinstance(other, QL):
            other = QL.const(other)
        n = max(len(self.c), len(other.c))
        return QL(self.coeff(i) + other.coeff(i) for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> "QL":
        return QL(-x for x in self.c)

    def __sub__(self, other: "QL") -> "QL":
        if not isinstance(other, QL):
            other = QL.const(other)
        return self + (-other)

    def __mul__(self, other) -> "QL":
        if not isinstance(other, QL):
            other = Fraction(other)
            return QL(x * other for x in self.c)
        if not self.c or not other.c:
            return QL()
        out = [Fraction(0)] * (len(self.c) + len(other.c) - 1)
        for i, x in enumerate(self.c):
            for j, y in enumerate(other.c):
                out[i + j] += x * y
        return QL(out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "QL":
        if isinstance(other, QL):
            if other.degree != 0:
                raise ZeroDivisionError("division in Q[L] requires a nonzero rational divisor")
            other = other.c[0]
        other = Fraction(other)
        if other == 0:
            raise ZeroDivisionError("division by zero in Q[L]")
        return QL(x / other for x in self.c)

    def evaluate(self, q: int) -> float:
        L = math.log(q)
        return math.fsum(float(x) * L ** i for i, x in enumerate(self.c))

    def to_json(self) -> dict:
        out = {"c0": str(self.coeff(0))}
        for i in range(1, len(self.c)):
            out["cL" if i == 1 else f"cL{i}"] = str(self.c[i])
        return out

    def __str__(self):
        if not self.c:
            return "0"
        parts = []
        for i, x in enumerate(self.c):
            if x == 0:
                continue
            mono = "" if i == 0 else ("L" if i == 1 else f"L^{i}")
            if not mono:
                parts.append(str(x))
            elif x == 1:
                parts.append(mono)
            elif x == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{x}·{mono}")
        return "+".join(parts).replace("+-", "-")

    def __repr__(self):
        return f"QL({self})"


class TaylorExpansion:
    """Truncated power series sum_j coeffs[j] s^j with coefficients in Q[L]."""

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: Sequence, order: int | None = None):
        cs = [c if isinstance(c, QL) else QL.const(c) for c in coeffs]
        if order is None:
            order = len(cs) - 1
        cs = cs[: order + 1] + [QL()] * (order + 1 - len(cs))
        self.order = order
        self.coeffs = tuple(cs)

    @classmethod
    def constant(cls, x, order: int = 2) -> "TaylorExpansion":
        return cls([x], order)

    def _coerce(self, other) -> "TaylorExpansion":
        if isinstance(other, TaylorExpansion):
            return other
        return TaylorExpansion.constant(other, self.order)

    def __add__(self, other) -> "TaylorExpansion":
        other = self._coerce(other)
        n = min(self.order, other.order)
        return TaylorExpansion([self.coeffs[i] + other.coeffs[i] for i in range(n + 1)], n)

    __radd__ = __add__

    def __neg__(self) -> "TaylorExpansion":
        return TaylorExpansion([-c for c in self.coeffs], self.order)

    def __sub__(self, other) -> "TaylorExpansion":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "TaylorExpansion":
        if not isinstance(other, TaylorExpansion):
            other_ql = other if isinstance(other, QL) else QL.const(other)
            return TaylorExpansion([c * other_ql for c in self.coeffs], self.order)
        n = min(self.order, other.order)
        out = [QL() for _ in range(n + 1)]
        for i in range(n + 1):
            for j in range(n + 1 - i):
                out[i + j] = out[i + j] + self.coeffs[i] * other.coeffs[j]
        return TaylorExpansion(out, n)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "TaylorExpansion":
        if not isinstance(other, TaylorExpansion):
            other_ql = other if isinstance(other, QL) else QL.const(other)
            return TaylorExpansion([c / other_ql for c in self.coeffs], self.order)
        d0 = other.coeffs[0]
        if d0.degree != 0:
            raise ZeroDivisionError("series division needs a nonzero rational constant term")
        n = min(self.order, other.order)
        out: list[QL] = []
        for k in range(n + 1):
            acc = self.coeffs[k]
            for j in range(1, k + 1):
                acc = acc - other.coeffs[j] * out[k - j]
            out.append(acc / d0)
        return TaylorExpansion(out, n)

    def divide_by_s(self) -> "TaylorExpansion":
        if not self.coeffs[0].is_zero():
            raise ZeroDivisionError("constant term must vanish to divide by s")
        return TaylorExpansion(self.coeffs[1:], self.order - 1)

    def times_s(self, power: int = 1) -> "TaylorExpansion":
        return TaylorExpansion([QL()] * power + list(self.coeffs), self.order)

    def __eq__(self, other):
        return isinstance(other, TaylorExpansion) and self.coeffs[: min(self.order, other.order) + 1] == \
            other.coeffs[: min(self.order, other.order) + 1]

    def __hash__(self):
        return hash(self.coeffs)

    def to_json(self) -> list:
        return [c.to_json() for c in self.coeffs]

    def __repr__(self):
        return "TaylorExpansion(" + " + ".join(f"({c})s^{i}" for i, c in enumerate(self.coeffs)) + ")"


def taylor_qpow(alpha, order: int = 2) -> TaylorExpansion:
    """Expansion of q^(alpha s) = sum (alpha L)^n s^n / n!."""
    alpha = Fraction(alpha)
    return TaylorExpansion([QL.L(alpha ** n / math.factorial(n), n) for n in range(order + 1)], order)


def taylor_read(t: TaylorExpansion) -> tuple[QL, QL]:
    if t.order < 1:
        raise ValueError("need order >= 1")
    return t.coeffs[0], t.coeffs[1]


class ExpSum:
    """Finite exponential sum sum_alpha c_alpha q^(alpha s) with rational data."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        clean = {}
        for a, c in (terms or {}).items():
            if c:
                clean[Fraction(a)] = clean.get(Fraction(a), 0) + Fraction(c)
        self.terms = {a: c for a, c in clean.items() if c}

    def __add__(self, other: "ExpSum") -> "ExpSum":
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0) + c
        return ExpSum(out)

    def __sub__(self, other: "ExpSum") -> "ExpSum":
        return self + other.scale(-1)

    def scale(self, c) -> "ExpSum":
        c = Fraction(c)
        return ExpSum({a: v * c for a, v in self.terms.items()})

    def shift(self, alpha) -> "ExpSum":
        """Multiply by q^(alpha s)."""
        alpha = Fraction(alpha)
        return ExpSum({a + alpha: v for a, v in self.terms.items()})

    def add_term(self, alpha, c) -> None:
        alpha = Fraction(alpha)
        v = self.terms.get(alpha, 0) + c
        if v:
            self.terms[alpha] = v
        else:
            self.terms.pop(alpha, None)

    def at_zero(self) -> Fraction:
        return sum(self.terms.values(), Fraction(0))

    def to_taylor(self, order: int = 2) -> TaylorExpansion:
        moments = [Fraction(0)] * (order + 1)
        for a, c in self.terms.items():
            p = Fraction(c)
            for n in range(order + 1):
                moments[n] += p
                p *= a
        return TaylorExpansion([QL.L(moments[n] / math.factorial(n), n) for n in range(order + 1)], order)

    def evaluate(self, s: float, q: int) -> float:
        lq = math.log(q)
        return math.fsum(float(c) * math.exp(float(a) * s * lq) for a, c in self.terms.items())

    def __eq__(self, other):
        return isinstance(other, ExpSum) and self.terms == other.terms

    def __repr__(self):
        return f"ExpSum({dict(sorted(self.terms.items()))})"


def frac_str(x) -> str:
    return str(Fraction(x))
