"""Exact scalar arithmetic over the Gaussian rationals.

Every coefficient in the toolkit is a :class:`Scalar`: a pair of
arbitrary-precision rationals (real and imaginary part).  Purely real
values keep ``im == 0`` and cost little extra over a bare ``Fraction``.
Floats only ever appear through the explicit lossy views
(:meth:`Scalar.to_float`, :meth:`Scalar.to_complex`).
"""

from __future__ import annotations

import math
import re as _re
from fractions import Fraction

_FRACTION_RE = _re.compile(r"^[+-]?\d+(/\d+)?$")


def parse_fraction(text: str) -> Fraction:
    """Parse ``p`` or ``p/q`` into an exact Fraction."""
    text = text.strip()
    if not _FRACTION_RE.match(text):
        from .errors import ParseError

        raise ParseError(f"not a rational literal: {text!r}")
    return Fraction(text)


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


class Scalar:
    """A Gaussian rational ``re + im*i`` with exact arithmetic."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    # -- constructors -------------------------------------------------
    @classmethod
    def from_float(cls, x: float, y: float = 0.0) -> "Scalar":
        """Exact embed of binary floats (no rounding)."""
        if not (math.isfinite(x) and math.isfinite(y)):
            from .errors import NonFinite

            raise NonFinite(f"non-finite value {x}+{y}i")
        return cls(Fraction(x), Fraction(y))

    # -- predicates ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def is_one(self) -> bool:
        return self.re == 1 and not self.im

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "Scalar") -> "Scalar":
        return Scalar(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "Scalar":
        return Scalar(-self.re, -self.im)

    def __mul__(self, other: "Scalar") -> "Scalar":
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return Scalar(a * c)
        return Scalar(a * c - b * d, a * d + b * c)

    def __truediv__(self, other: "Scalar") -> "Scalar":
        m = other.abs2()
        if not m:
            raise ZeroDivisionError("division by zero Scalar")
        a, b, c, d = self.re, self.im, other.re, other.im
        return Scalar((a * c + b * d) / m, (b * c - a * d) / m)

    def conj(self) -> "Scalar":
        return Scalar(self.re, -self.im)

    def abs2(self) -> Fraction:
        """|z|^2 as an exact rational."""
        return self.re * self.re + self.im * self.im

    def abs_upper(self) -> Fraction:
        """Cheap exact upper bound on |z| (|re| + |im|)."""
        return abs(self.re) + abs(self.im)

    # -- comparisons / hashing ------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, Scalar):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    # -- lossy views -----------------------------------------------------
    def to_float(self) -> float:
        if self.im:
            raise ValueError(f"{self} is not real")
        return float(self.re)

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    # -- text ------------------------------------------------------------
    def __repr__(self):
        return f"Scalar({self.re!r}, {self.im!r})"

    def __str__(self):
        if not self.im:
            return format_fraction(self.re)
        sign = "+" if self.im >= 0 else ""
        return f"({format_fraction(self.re)}{sign}{format_fraction(self.im)}i)"

    @classmethod
    def parse(cls, text: str) -> "Scalar":
        """Parse ``p/q`` or ``(p/q+r/s i)`` (parentheses optional)."""
        from .errors import ParseError

        s = text.strip()
        if s.startswith("(") and s.endswith(")"):
            s = s[1:-1].strip()
        if s.endswith("i"):
            body = s[:-1].strip()
            # split real and imaginary on the last top-level +/- (not a sign)
            for k in range(len(body) - 1, 0, -1):
                if body[k] in "+-" and body[k - 1] not in "+-/":
                    re_part = body[:k].strip()
                    im_part = body[k + 1 :].strip() or "1"
                    im = parse_fraction(im_part)
                    if body[k] == "-":
                        im = -im
                    return cls(parse_fraction(re_part), im)
            # pure imaginary like "1/2 i" or "-i"
            if body in ("", "+", "-"):
                body += "1"
            return cls(Fraction(0), parse_fraction(body))
        if "i" in s:
            raise ParseError(f"malformed scalar: {text!r}")
        return cls(parse_fraction(s))


ZERO = Scalar(0)
ONE = Scalar(1)
MINUS_ONE = Scalar(-1)
I = Scalar(0, 1)
MINUS_I = Scalar(0, -1)
