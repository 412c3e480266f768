"""Exact Gaussian-rational scalars and sparse exact row reduction.

Vectors are dicts mapping a sortable key to a nonzero scalar. Keys are
compared with the usual tuple/int ordering; the largest key of a vector
is its pivot.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class RationalComplex:
    """Complex number with arbitrary-precision rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)

    @classmethod
    def coerce(cls, x) -> "RationalComplex":
        if isinstance(x, RationalComplex):
            return x
        if isinstance(x, complex):
            raise TypeError("floating complex values are not exact; pass rationals")
        return cls(x)

    def __add__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return RationalComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return RationalComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        if not o.im and not self.im:
            return RationalComplex(self.re * o.re)
        return RationalComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        if not o:
            raise ZeroDivisionError("division by exact zero")
        if not o.im:
            return RationalComplex(self.re / o.re, self.im / o.re)
        den = o.re * o.re + o.im * o.im
        return RationalComplex((self.re * o.re + self.im * o.im) / den,
                               (self.im * o.re - self.re * o.im) / den)

    def __rtruediv__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return RationalComplex(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self) -> "RationalComplex":
        return RationalComplex(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im)) if self.im else hash(self.re)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return f"RationalComplex({self.re})"
        return f"RationalComplex({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


def _coerce(x):
    if isinstance(x, RationalComplex):
        return x
    if isinstance(x, (int, Fraction, Rational)):
        return RationalComplex(x)
    return NotImplemented


ZERO = RationalComplex(0)
ONE = RationalComplex(1)


def rational_str(q: Fraction) -> str:
    """Serialize as ``"p/q"`` (denominator always written)."""
    return f"{q.numerator}/{q.denominator}"


def axpy(y: dict, a, x: dict) -> dict:
    """Return ``y + a*x`` as a new sparse vector without zero entries."""
    out = dict(y)
    for k, v in x.items():
        s = out.get(k, ZERO) + a * v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


class SparseEchelon:
    """Incremental exact echelon form over sparse vectors.

    ``insert`` reduces a vector against the stored rows and keeps it when
    it is independent. Each stored row is tagged with the combination of
    inserted vectors it came from, which is what :func:`kernel` uses.
    """

    def __init__(self, track: bool = False):
        self.rows: dict = {}  # pivot key -> (row, combo)
        self.track = track

    def __len__(self):
        return len(self.rows)

    def reduce(self, v: dict, combo: dict | None = None):
        v = dict(v)
        combo = dict(combo) if combo is not None else None
        while v:
            k = max(v)
            hit = self.rows.get(k)
            if hit is None:
                break
            row, rcombo = hit
            f = -(v[k] / row[k])
            v = axpy(v, f, row)
            if combo is not None:
                combo = axpy(combo, f, rcombo)
        return v, combo

    def insert(self, v: dict, tag=None) -> bool:
        """Insert ``v``; returns True iff it was independent of the rows so far."""
        combo = {tag: ONE} if self.track else None
        r, combo = self.reduce(v, combo)
        if not r:
            return False
        self.rows[max(r)] = (r, combo)
        return True

    def contains(self, v: dict) -> bool:
        r, _ = self.reduce(v)
        return not r


def kernel(images: list[dict]) -> list[dict]:
    """Exact kernel of the linear map sending basis vector ``i`` to ``images[i]``.

    Returns a list of coefficient vectors ``{i: c_i}`` spanning the kernel.
    """
    ech = SparseEchelon(track=True)
    out = []
    for i, img in enumerate(images):
        r, combo = ech.reduce(img, {i: ONE})
        if r:
            ech.rows[max(r)] = (r, combo)
        else:
            out.append(combo)
    return out


def rank(vectors) -> int:
    ech = SparseEchelon()
    for v in vectors:
        ech.insert(v)
    return len(ech)
