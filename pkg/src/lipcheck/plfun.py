"""Exact piecewise-linear functions on an interval of the line.

A function is a strictly increasing list of rational breakpoints with a
value at each, linearly interpolated in between, optionally extended by a
constant beyond either endpoint. The base coordinate (default 0) must be a
breakpoint with value 0. The norm is the largest absolute segment slope:
the two-point slope between any p < q is a convex combination of the
segment slopes crossed, so segments dominate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .metric import PreconditionError, StructureError
from .rational import Rat, ZERO, ONE, format_rat, parse_rat, rat


@dataclass(frozen=True)
class PLFn:
    breakpoints: tuple
    values: tuple
    left_extension: bool = True
    right_extension: bool = True
    base: Rat = ZERO

    def __post_init__(self):
        if not self.breakpoints:
            raise StructureError("need at least one breakpoint")
        if len(self.values) != len(self.breakpoints):
            raise StructureError("breakpoint/value length mismatch")
        for a, b in zip(self.breakpoints, self.breakpoints[1:]):
            if not a < b:
                raise StructureError("breakpoints must be strictly increasing")
        if self.base not in self.breakpoints:
            raise PreconditionError("base coordinate must be a breakpoint")
        if self.values[self.breakpoints.index(self.base)] != ZERO:
            raise PreconditionError("function must vanish at the base coordinate")


def plfn(breakpoints, values, left_extension=True, right_extension=True, base=0) -> PLFn:
    return PLFn(
        tuple(rat(x) for x in breakpoints),
        tuple(rat(v) for v in values),
        left_extension,
        right_extension,
        rat(base),
    )


def pl_eval(f: PLFn, x) -> Rat:
    x = rat(x)
    bps = f.breakpoints
    if x < bps[0]:
        if not f.left_extension:
            raise PreconditionError("x left of the domain and no extension")
        return f.values[0]
    if x > bps[-1]:
        if not f.right_extension:
            raise PreconditionError("x right of the domain and no extension")
        return f.values[-1]
    for i in range(len(bps) - 1):
        if bps[i] <= x <= bps[i + 1]:
            if x == bps[i]:
                return f.values[i]
            t = (x - bps[i]) / (bps[i + 1] - bps[i])
            return f.values[i] + t * (f.values[i + 1] - f.values[i])
    return f.values[-1]


def segment_slopes(f: PLFn):
    return [
        (f.values[i + 1] - f.values[i]) / (f.breakpoints[i + 1] - f.breakpoints[i])
        for i in range(len(f.breakpoints) - 1)
    ]


def pl_norm(f: PLFn) -> Rat:
    """Largest absolute segment slope; a single breakpoint gives 0."""
    best = ZERO
    for s in segment_slopes(f):
        if s < ZERO:
            s = -s
        if s > best:
            best = s
    return best


def pl_pointwise_sup(f: PLFn, x) -> Rat:
    """Largest |slope| from x to any other point, computed over breakpoints.

    Restricting partners to breakpoints is sound because the slope from a
    fixed x, as the partner moves along one linear segment, is monotone;
    the implementation asserts that on each segment via a midpoint sample.
    Constant extensions only shrink quotients past the end breakpoints.
    """
    x = rat(x)
    bps = f.breakpoints
    if x < bps[0] or x > bps[-1]:
        raise PreconditionError("x outside the function's domain")
    fx = pl_eval(f, x)

    def quot(q):
        return (pl_eval(f, q) - fx) / (q - x)

    best = ZERO
    for q in bps:
        if q == x:
            continue
        s = quot(q)
        if s < ZERO:
            s = -s
        if s > best:
            best = s
    for i in range(len(bps) - 1):
        a, b = bps[i], bps[i + 1]
        if a == x or b == x:
            continue
        qa, qb, qm = quot(a), quot(b), quot((a + b) / rat(2))
        lo, hi = (qa, qb) if qa <= qb else (qb, qa)
        assert lo <= qm <= hi, "segment monotonicity violated"
    return best


@dataclass(frozen=True)
class AttainmentFlags:
    sna: bool
    pna_points: tuple
    der_points: tuple
    ldira_points: tuple

    def to_json(self) -> dict:
        return {
            "sna": self.sna,
            "pna_points": [format_rat(x) for x in self.pna_points],
            "der_points": [[format_rat(x), side] for x, side in self.der_points],
            "ldira_points": [format_rat(x) for x in self.ldira_points],
        }


def classify(f: PLFn) -> AttainmentFlags:
    """Attainment taxonomy of a finite PL function.

    Finite PL functions always strongly attain (the endpoints of a
    maximal-slope segment witness it). A one-sided derivative at a
    breakpoint is the adjacent segment slope, so the derivative and
    locally-directional flags are read off the same slope list.
    """
    norm = pl_norm(f)
    slopes = segment_slopes(f)
    bps = f.breakpoints

    pna = tuple(b for b in bps if pl_pointwise_sup(f, b) == norm)

    der = []
    ldira = set()
    for i, s in enumerate(slopes):
        mag = -s if s < ZERO else s
        if mag == norm:
            der.append((bps[i], "right"))
            der.append((bps[i + 1], "left"))
            ldira.add(bps[i])
            ldira.add(bps[i + 1])
    return AttainmentFlags(
        sna=True,
        pna_points=pna,
        der_points=tuple(sorted(der)),
        ldira_points=tuple(sorted(ldira)),
    )


# ---------------------------------------------------------------------------
# Generators


def gen_tents(n: int) -> PLFn:
    """The n-th unit tent on [0, 1].

    Support is ]2^(-n^2), 2^(-(n-1)^2)[ with peak (2^(2n-1)-1)/2^(n^2+1)
    at x = (2^(2n-1)+1)/2^(n^2+1); both flanks have slope magnitude 1.
    """
    if n < 1:
        raise PreconditionError("tent index must be >= 1")
    left = rat(1, 2 ** (n * n))
    right = rat(1, 2 ** ((n - 1) * (n - 1)))
    center = rat(2 ** (2 * n - 1) + 1, 2 ** (n * n + 1))
    peak = rat(2 ** (2 * n - 1) - 1, 2 ** (n * n + 1))
    bps = [ZERO, left, center, right]
    vals = [ZERO, ZERO, peak, ZERO]
    if right != ONE:
        bps.append(ONE)
        vals.append(ZERO)
    return PLFn(tuple(bps), tuple(vals))


def tent_sum(a) -> PLFn:
    """Sum of a_n times the n-th tent; supports are pairwise disjoint."""
    coeffs = [rat(c) for c in a]
    tents = [gen_tents(n) for n in range(1, len(coeffs) + 1)]
    cuts = {ZERO, ONE}
    for t in tents:
        cuts.update(t.breakpoints)
    bps = tuple(sorted(cuts))
    vals = []
    for x in bps:
        total = ZERO
        for c, t in zip(coeffs, tents):
            total += c * pl_eval(t, x)
        vals.append(total)
    return PLFn(bps, tuple(vals))


def gen_zigzag(eps, eta, K: int) -> PLFn:
    """Zigzag of K cones on [0, 1] whose tips lie on the line y = eps*x.

    Cone n spans [p_{n+1}, p_n] with flank slopes +-(1 - eta^n); the tip
    q_n is where the right flank through (p_n, 0) meets y = eps*x. The
    function is 0 on [0, p_{K+1}].
    """
    eps, eta = rat(eps), rat(eta)
    if K < 1:
        raise PreconditionError("zigzag needs K >= 1")
    if not (ZERO < eps < ONE and ZERO < eta < ONE):
        raise PreconditionError("zigzag needs 0 < eps, eta < 1")
    if eps >= ONE - eta:
        raise PreconditionError("zigzag needs eps < 1 - eta so cones stay right of 0")

    p = ONE
    tips = []  # (qx, qy) per cone, feet p_{n+1} alongside
    feet = [p]
    for n in range(1, K + 1):
        s = ONE - eta ** n
        qx = s * p / (eps + s)
        qy = eps * qx
        p = qx - qy / s
        tips.append((qx, qy))
        feet.append(p)

    bps = [ZERO, feet[-1]]
    vals = [ZERO, ZERO]
    for n in range(K, 0, -1):
        qx, qy = tips[n - 1]
        bps.extend([qx, feet[n - 1]])
        vals.extend([qy, ZERO])
    return PLFn(tuple(bps), tuple(vals))


def gen_example62(K: int) -> PLFn:
    """Slope-1/2 head, then K ever-steeper risers separated by plateaus.

    The corner points t_k sit on y = x/2 and obey
    t_{k+1} = (t_k.x * 2^(-(k+1)), t_k.x * 2^(-(k+2))) from t_1 = (1, 1/2);
    each plateau left end is s_k = (t_k.x * (1/2 + 2^(-(k+1))), t_k.y),
    the factor forced by requiring the riser below it to have slope
    1 - 2^(-(k+1)). The norm is 1 - 2^(-(K+1)); the slope at 0 stays 1/2.
    """
    if K < 1:
        raise PreconditionError("needs K >= 1")
    tx, ty = ONE, rat(1, 2)
    t_pts = [(tx, ty)]
    s_pts = []
    for k in range(1, K + 1):
        delta = rat(1, 2 ** (k + 1))
        s_pts.append((tx * (rat(1, 2) + delta), ty))
        tx, ty = tx * delta, tx * delta / rat(2)
        t_pts.append((tx, ty))

    bps = [ZERO, t_pts[K][0]]
    vals = [ZERO, t_pts[K][1]]
    for k in range(K, 0, -1):
        bps.extend([s_pts[k - 1][0], t_pts[k - 1][0]])
        vals.extend([t_pts[k - 1][1], t_pts[k - 1][1]])
    return PLFn(tuple(bps), tuple(vals))


def symmetrize(f: PLFn) -> PLFn:
    """Even reflection of a function on [0, b] to [-b, b]."""
    if f.breakpoints[0] != ZERO or f.values[0] != ZERO:
        raise PreconditionError("symmetrize needs a function on [0, b] with f(0) = 0")
    bps = tuple(-x for x in reversed(f.breakpoints[1:])) + f.breakpoints
    vals = tuple(reversed(f.values[1:])) + f.values
    return PLFn(bps, vals, f.right_extension, f.right_extension)


# ---------------------------------------------------------------------------
# JSON interchange


def pl_to_json(f: PLFn) -> dict:
    if f.left_extension and f.right_extension:
        extend = "constant"
    elif not f.left_extension and not f.right_extension:
        extend = "none"
    else:
        extend = {"left": f.left_extension, "right": f.right_extension}
    return {
        "breakpoints": [format_rat(x) for x in f.breakpoints],
        "values": [format_rat(v) for v in f.values],
        "extend": extend,
    }


def pl_from_json(obj) -> PLFn:
    if not isinstance(obj, dict) or "breakpoints" not in obj or "values" not in obj:
        raise StructureError("PL JSON needs 'breakpoints' and 'values'")
    extend = obj.get("extend", "constant")
    if extend == "constant":
        left = right = True
    elif extend == "none":
        left = right = False
    elif isinstance(extend, dict):
        left, right = bool(extend.get("left")), bool(extend.get("right"))
    else:
        raise StructureError(f"unknown extension spec {extend!r}")
    try:
        bps = tuple(parse_rat(x) for x in obj["breakpoints"])
        vals = tuple(parse_rat(v) for v in obj["values"])
    except ValueError as exc:
        raise StructureError(str(exc)) from None
    base = parse_rat(obj["base"]) if "base" in obj else ZERO
    return PLFn(bps, vals, left, right, base)
