"""Exact rational arithmetic backend.

Everything in this package that carries mathematical meaning is an exact
rational.  This module picks the fastest available implementation at import
time: gmpy2's mpq (a compiled GMP wrapper) when installed, else the stdlib
fractions.Fraction.  Both register as numbers.Rational and expose
.numerator/.denominator, and all package code goes through rat()/format_rat/
parse_rat, so the two are interchangeable.

Set LIPCHECK_PURE_RATIONAL=1 to force the pure-Python backend (used by the
benchmark script and by tests that pin backend-independent behaviour).

Serialization format is deliberately strict so that reports are canonical:
an integer renders as "5", everything else as "p/q" in lowest terms with
q > 1 and the sign on the numerator.  parse_rat rejects anything else
("2/4", "5/1", "+2", "1/0", whitespace).
"""

from __future__ import annotations

import os
import re
from fractions import Fraction
from typing import Union

_FORCE_PURE = os.environ.get("LIPCHECK_PURE_RATIONAL", "") == "1"

if not _FORCE_PURE:
    try:
        from gmpy2 import mpq as _mpq

        BACKEND = "gmpy2"
    except ImportError:
        _mpq = None
        BACKEND = "fractions"
else:
    _mpq = None
    BACKEND = "fractions"

Rat = Union[Fraction, "_mpq"]  # either backend; duck-typed via numbers.Rational

_RAT_RE = re.compile(r"^(0|-?[1-9][0-9]*)(?:/([1-9][0-9]*))?$")


def rat(num, den=None) -> Rat:
    """Build a rational from ints, a rational, or a canonical string."""
    if isinstance(num, str):
        if den is not None:
            raise ValueError("string input takes no denominator")
        return parse_rat(num)
    if isinstance(num, float) or isinstance(den, float):
        raise TypeError("rat() takes exact inputs, not floats")
    if den is None:
        if _mpq is not None:
            return _mpq(num)
        return Fraction(num)
    if _mpq is not None:
        return _mpq(num, den)
    return Fraction(num, den)


def is_rational(x) -> bool:
    import numbers

    return isinstance(x, numbers.Rational)


def format_rat(x) -> str:
    """Canonical string: "5" for integers, else reduced "p/q" with q > 1."""
    n, d = x.numerator, x.denominator
    if d == 1:
        return str(int(n))
    return "%d/%d" % (n, d)


def parse_rat(s: str) -> Rat:
    """Inverse of format_rat; rejects non-canonical spellings."""
    m = _RAT_RE.match(s)
    if not m:
        raise ValueError("not a canonical rational: %r" % (s,))
    num = int(m.group(1))
    if m.group(2) is None:
        return rat(num)
    den = int(m.group(2))
    if den == 1:
        raise ValueError("non-canonical rational (denominator 1): %r" % (s,))
    from math import gcd

    if gcd(abs(num), den) != 1:
        raise ValueError("non-canonical rational (not reduced): %r" % (s,))
    return rat(num, den)


ZERO = rat(0)
ONE = rat(1)
