"""Hypothesis checkers, function-family builders, and exact isometry verification.

Each supported construction follows the same pattern: a checker tests the
construction's hypothesis on a concrete space (finite clauses on the
truncation, limit clauses through the model's declared tail data), a builder
produces the explicit Lipschitz family, and ``verify_isometry`` confirms the
norm identities for a battery of coefficient vectors.

Families come in three flavors and the verification carries that expectation
explicitly instead of pretending everything is attained at finite scale:

- "exact": lip_norm(f_a) equals the coefficient norm outright, with a
  nameable witness pair (and a zero pointwise defect where claimed);
- "asymptotic": the norm stays strictly below the coefficient norm on every
  truncation; we pin the exact finite value through an independent
  recomputation from the model's closed forms, check the designated witness
  slopes, and track the pointwise defect at the designated point;
- "deflated": the norm equals the coefficient norm times an explicit
  truncation factor, with the remaining gap at the base pinned exactly.

All arithmetic is exact; no tolerances anywhere.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional

from .rational import ONE, Rat, ZERO, format_rat, rat
from .lipfun import LipFn, combine, defect, lip_norm, lipfn, pointwise_sup, slope, strong_pairs
from .metric import (
    CheckResult,
    FiniteMetricSpace,
    LipcheckError,
    MetricModel,
    ModelError,
    PreconditionError,
    TailDataError,
    catalog,
    integer_line,
    min_positive_radius,
    truncate,
)

BATTERY_SEED = 20260815
BATTERY_RANDOM_COUNT = 100
SIGN_SUPPORT_LIMIT = 5


class DichotomyError(LipcheckError):
    """The comparison splitting bounded-sequence models is not uniform."""


class ConstructionError(LipcheckError):
    """A pipeline construction invariant failed on this truncation."""


# ---------------------------------------------------------------------------
# Small number-theory helpers (orbit families index members by primes)


def first_primes(count: int):
    """The first ``count`` primes, by trial division (counts here are tiny)."""
    primes = []
    n = 2
    while len(primes) < count:
        if all(n % p for p in primes):
            primes.append(n)
        n += 1
    return primes


def prime_orbits(limit: int):
    """Prime-power orbits {r, r^2, ...} inside 1..limit with >= 2 points.

    Returns a list of (prime, positions) in increasing prime order. Orbits
    with a single in-range point are dropped: a one-point member cannot
    carry its witness pair.
    """
    orbits = []
    sieve = [True] * (limit + 1)
    primes = []
    for n in range(2, limit + 1):
        if sieve[n]:
            primes.append(n)
            for k in range(n * n, limit + 1, n):
                sieve[k] = False
    for r in primes:
        positions = []
        v = r
        while v <= limit:
            positions.append(v)
            v *= r
        if len(positions) >= 2:
            orbits.append((r, tuple(positions)))
    return orbits


def _radius(space: FiniteMetricSpace, p: int) -> Rat:
    return min_positive_radius(space, p)


def _check_anchor_rows(space, rows, what: str):
    seen = set()
    for r in rows:
        if not isinstance(r, int) or not (0 <= r < space.n_points):
            raise PreconditionError(f"{what} index {r!r} out of range")
        if r in seen:
            raise PreconditionError(f"{what} indices must be distinct")
        seen.add(r)


# ---------------------------------------------------------------------------
# Hypothesis checkers


def check_prop31(space: FiniteMetricSpace, points, partners) -> CheckResult:
    """Spike-family hypothesis: each point's partner realizes its radius and
    the points are pairwise separated by the sum of the partner distances.

    Clause "radius": d(p, q) == R(p) for every (point, partner).
    Clause "separation": d(p_a, p_b) >= d(p_a, q_a) + d(p_b, q_b).
    """
    points = tuple(points)
    partners = tuple(partners)
    if len(points) != len(partners):
        raise PreconditionError("points and partners must have equal length")
    _check_anchor_rows(space, points, "point")
    for p, q in zip(points, partners):
        if not isinstance(q, int) or not (0 <= q < space.n_points):
            raise PreconditionError(f"partner index {q!r} out of range")
        if q == p:
            raise PreconditionError("partner must differ from its point")
    for p, q in zip(points, partners):
        r = _radius(space, p)
        if space.d(p, q) != r:
            return CheckResult(False, "prop31", "radius", (p, q), (space.d(p, q), r))
    k = len(points)
    for i in range(k):
        for j in range(i + 1, k):
            lhs = space.d(points[i], points[j])
            rhs = space.d(points[i], partners[i]) + space.d(points[j], partners[j])
            if lhs < rhs:
                return CheckResult(
                    False, "prop31", "separation", (points[i], points[j]), (lhs, rhs)
                )
    return CheckResult(True, "prop31")


def check_thm34(space: FiniteMetricSpace, pairs) -> CheckResult:
    """Balanced two-point family hypothesis.

    Clause "radius": R(p), R(q) >= d(p, q)/2 for each pair.
    Clause "cross-gap": d(p_a, q_a) + d(p_b, q_b) <= 2 min over the four
    distances between the two pairs.
    """
    pairs = tuple(tuple(pq) for pq in pairs)
    flat = [r for pq in pairs for r in pq]
    _check_anchor_rows(space, flat, "pair")
    half = rat(1, 2)
    for p, q in pairs:
        dpq = space.d(p, q)
        for r in (p, q):
            if _radius(space, r) < half * dpq:
                return CheckResult(
                    False, "thm34", "radius", (p, q), (_radius(space, r), half * dpq)
                )
    k = len(pairs)
    for i in range(k):
        for j in range(i + 1, k):
            pa, qa = pairs[i]
            pb, qb = pairs[j]
            lhs = space.d(pa, qa) + space.d(pb, qb)
            cross = min(
                space.d(pa, pb), space.d(pa, qb), space.d(qa, pb), space.d(qa, qb)
            )
            if lhs > 2 * cross:
                return CheckResult(
                    False, "thm34", "cross-gap", (i, j), (lhs, 2 * cross)
                )
    return CheckResult(True, "thm34")


def check_thm37(space: FiniteMetricSpace, pairs) -> CheckResult:
    """Radius-shifted two-point family hypothesis (four inequalities).

    With d_a = d(p_a, q_a):
      (1) d_a <= R(p_a) + R(q_a) for each pair;
      (2) d_a + d_b + R(p_a) + R(p_b) - R(q_a) - R(q_b) <= 2 d(p_a, p_b);
      (3) d_a + d_b + R(p_a) - R(p_b) - R(q_a) + R(q_b) <= 2 d(p_a, q_b),
          checked in both orders because it is not symmetric;
      (4) d_a + d_b - R(p_a) - R(p_b) + R(q_a) + R(q_b) <= 2 d(q_a, q_b).
    """
    pairs = tuple(tuple(pq) for pq in pairs)
    flat = [r for pq in pairs for r in pq]
    _check_anchor_rows(space, flat, "pair")
    rad = {r: _radius(space, r) for r in flat}
    dd = {i: space.d(p, q) for i, (p, q) in enumerate(pairs)}
    for i, (p, q) in enumerate(pairs):
        if dd[i] > rad[p] + rad[q]:
            return CheckResult(
                False, "thm37", "pair-radius", (p, q), (dd[i], rad[p] + rad[q])
            )
    k = len(pairs)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            pa, qa = pairs[i]
            pb, qb = pairs[j]
            base = dd[i] + dd[j]
            if i < j:
                lhs2 = base + rad[pa] + rad[pb] - rad[qa] - rad[qb]
                if lhs2 > 2 * space.d(pa, pb):
                    return CheckResult(
                        False, "thm37", "pp", (i, j), (lhs2, 2 * space.d(pa, pb))
                    )
                lhs4 = base - rad[pa] - rad[pb] + rad[qa] + rad[qb]
                if lhs4 > 2 * space.d(qa, qb):
                    return CheckResult(
                        False, "thm37", "qq", (i, j), (lhs4, 2 * space.d(qa, qb))
                    )
            lhs3 = base + rad[pa] - rad[pb] - rad[qa] + rad[qb]
            if lhs3 > 2 * space.d(pa, qb):
                return CheckResult(
                    False, "thm37", "pq", (i, j), (lhs3, 2 * space.d(pa, qb))
                )
    return CheckResult(True, "thm37")


def check_prop42(space: FiniteMetricSpace, points) -> CheckResult:
    """Spike-family pointwise hypothesis: d(p_n, p_m) >= R(p_n) + R(p_m)."""
    points = tuple(points)
    _check_anchor_rows(space, points, "point")
    rad = {p: _radius(space, p) for p in points}
    k = len(points)
    for i in range(k):
        for j in range(i + 1, k):
            lhs = space.d(points[i], points[j])
            rhs = rad[points[i]] + rad[points[j]]
            if lhs < rhs:
                return CheckResult(
                    False, "prop42", "separation", (points[i], points[j]), (lhs, rhs)
                )
    return CheckResult(True, "prop42")


def _seq_radius(model: MetricModel, space: FiniteMetricSpace, n: int) -> Rat:
    return min_positive_radius(space, model.seq_row(n))


def check_thm43(model: MetricModel, N: int) -> CheckResult:
    """Bounded-sequence orbit family hypothesis.

    Finite clauses on the truncation, limit clauses through declared tails:
      "monotone": d(p_n, p_m) non-increasing in each index (the tail part
      needs the model's monotone_tails declaration);
      "radius": R(p_k) >= L(k) - L/2;
      "tail-sum": L(k) + L(l) <= L + d(p_k, p_l).
    """
    if not model.is_sequence_model:
        raise ModelError(f"model {model.name!r} has no sequence structure")
    model.phi(1, 2)  # raises TailDataError when limits are undeclared
    space = truncate(model, N)
    ns = model.n_seq(N)
    for n in range(1, ns + 1):
        for m in range(1, ns + 1):
            if m == n:
                continue
            d_here = model.d_seq(n, m)
            if m + 1 <= ns and m + 1 != n and d_here < model.d_seq(n, m + 1):
                return CheckResult(
                    False, "thm43", "monotone", (n, m), (d_here, model.d_seq(n, m + 1))
                )
            if n + 1 <= ns and n + 1 != m and d_here < model.d_seq(n + 1, m):
                return CheckResult(
                    False, "thm43", "monotone", (n, m), (d_here, model.d_seq(n + 1, m))
                )
    if not model.monotone_tails:
        return CheckResult(False, "thm43", "monotone-tail-undeclared", (), ())
    half_l = model.L / 2
    for k in range(1, ns + 1):
        r = _seq_radius(model, space, k)
        bound = model.L_pair(k) - half_l
        if r < bound:
            return CheckResult(False, "thm43", "radius", (k,), (r, bound))
    for k in range(1, ns + 1):
        for l in range(k + 1, ns + 1):
            lhs = model.L_pair(k) + model.L_pair(l)
            rhs = model.L + model.d_seq(k, l)
            if lhs > rhs:
                return CheckResult(False, "thm43", "tail-sum", (k, l), (lhs, rhs))
    return CheckResult(True, "thm43")


def check_thm45(model: MetricModel, subseq, N: int) -> CheckResult:
    """Constant-orbit family hypothesis on a selected subsequence.

    ``subseq`` lists the model's sequence indices (strictly increasing) that
    play the roles p_1, p_2, ... With D the model's declared base-distance
    limit:
      "positive-limit": D > 0;
      "radius-equality": d(p_s, 0) == R(p_s);
      "decreasing": base distances non-increasing along the subsequence and
      never below D;
      "separation": 2D <= d(p_s, p_t).
    """
    if not model.is_sequence_model:
        raise ModelError(f"model {model.name!r} has no sequence structure")
    subseq = tuple(int(s) for s in subseq)
    if len(subseq) < 2:
        raise PreconditionError("subsequence needs at least two indices")
    if any(b <= a for a, b in zip(subseq, subseq[1:])):
        raise PreconditionError("subsequence indices must be strictly increasing")
    ns = model.n_seq(N)
    lo = 2 if model.base_aliases_p1 else 1
    if subseq[0] < lo or subseq[-1] > ns:
        raise PreconditionError("subsequence indices out of the truncated range")
    if model.base_limit is None:
        raise TailDataError(f"limits unavailable for model {model.name!r}")
    dlim = model.base_limit
    if dlim <= ZERO:
        return CheckResult(False, "thm45", "positive-limit", (), (dlim,))
    space = truncate(model, N)
    for s in subseq:
        db = model.d_base(s)
        r = _seq_radius(model, space, s)
        if db != r:
            return CheckResult(False, "thm45", "radius-equality", (s,), (db, r))
    for a, b in zip(subseq, subseq[1:]):
        if model.d_base(a) < model.d_base(b):
            return CheckResult(
                False, "thm45", "decreasing", (a, b), (model.d_base(a), model.d_base(b))
            )
    for s in subseq:
        if model.d_base(s) < dlim:
            return CheckResult(
                False, "thm45", "decreasing", (s,), (model.d_base(s), dlim)
            )
    for i in range(len(subseq)):
        for j in range(i + 1, len(subseq)):
            d = model.d_seq(subseq[i], subseq[j])
            if 2 * dlim > d:
                return CheckResult(
                    False, "thm45", "separation", (subseq[i], subseq[j]), (2 * dlim, d)
                )
    return CheckResult(True, "thm45")


def _eps_values(model: MetricModel, eps_seq, ns: int, lo: int):
    if callable(eps_seq):
        return {n: rat(eps_seq(n)) for n in range(lo, ns + 1)}
    eps_list = list(eps_seq)
    if len(eps_list) < ns - lo + 1:
        raise PreconditionError(
            f"epsilon sequence too short: need {ns - lo + 1} values, got {len(eps_list)}"
        )
    return {n: rat(eps_list[n - lo]) for n in range(lo, ns + 1)}


def check_thm46(model: MetricModel, eps_seq, N: int) -> CheckResult:
    """Shifted-orbit family hypothesis with an explicit epsilon assignment.

    For models whose base aliases the first sequence element, the working
    sequence starts at its successor. With g_n = d(p_n, 0) - eps_n:
      "ratio": g_n + g_m <= d(p_n, p_m);
      "radius-window": 0 <= g_n <= R(p_n);
      "ratio-limit": the slope ratio must tend to one, which the finite data
      cannot certify; the model's declaration covers it, and only for the
      model's own canonical epsilon assignment.
    """
    if not model.is_sequence_model:
        raise ModelError(f"model {model.name!r} has no sequence structure")
    ns = model.n_seq(N)
    lo = 2 if model.base_aliases_p1 else 1
    eps = _eps_values(model, eps_seq, ns, lo)
    for n in range(lo, ns + 1):
        if eps[n] < ZERO:
            raise PreconditionError(f"epsilon values must be nonnegative, got {eps[n]}")
    if model.eps is None or not model.ratio_tends_to_one:
        raise TailDataError(
            f"limits unavailable for model {model.name!r}: no declared slope-ratio limit"
        )
    for n in range(lo, ns + 1):
        if eps[n] != model.eps(n):
            raise TailDataError(
                "limits unavailable: epsilon sequence differs from the model's "
                f"declared closed form at n={n}"
            )
    space = truncate(model, N)
    g = {n: model.d_base(n) - eps[n] for n in range(lo, ns + 1)}
    for n in range(lo, ns + 1):
        if g[n] < ZERO:
            return CheckResult(False, "thm46", "radius-window", (n,), (g[n], ZERO))
        r = _seq_radius(model, space, n)
        if g[n] > r:
            return CheckResult(False, "thm46", "radius-window", (n,), (g[n], r))
    for n in range(lo, ns + 1):
        for m in range(n + 1, ns + 1):
            if g[n] + g[m] > model.d_seq(n, m):
                return CheckResult(
                    False, "thm46", "ratio", (n, m), (g[n] + g[m], model.d_seq(n, m))
                )
    return CheckResult(True, "thm46")


# ---------------------------------------------------------------------------
# Family plumbing


@dataclass(frozen=True)
class FamilySpec:
    """What to build: a construction id, the space it lives on, anchor rows,
    and rational parameters. Model-backed constructions also carry the model
    and the truncation size so the hypothesis checker can run."""

    theorem_id: str
    space: FiniteMetricSpace
    anchors: tuple = ()
    parameters: dict = field(default_factory=dict)
    model: Optional[MetricModel] = None
    N: Optional[int] = None


@dataclass(frozen=True)
class RuleData:
    """Independent recomputation of the quantities an asymptotic family must
    hit at finite scale: the exact norm value, per-member witness slopes, and
    the pointwise supremum at the designated attainment point."""

    expected_norm: Rat
    member_checks: tuple  # (member_key, row_u, row_v, expected_abs_slope)
    designated_point: int
    expected_sup: Rat


@dataclass(frozen=True)
class Expectation:
    """What finite-scale attainment should look like for a family."""

    kind: str  # "exact" | "asymptotic" | "deflated"
    designated_point: object = None  # row, or callable(coeffs) -> row, or None
    witness_pair: Optional[Callable] = None  # coeffs -> (u, v) positively oriented
    rule: Optional[Callable] = None  # coeffs -> RuleData (asymptotic only)
    norm_factor: Rat = ONE  # deflated: expected norm = coeff norm * factor
    base_gap_factor: Rat = ZERO  # deflated: coeff norm - sup@designated
    strict: bool = True  # asymptotic: truncation norm strictly below the target


@dataclass(frozen=True)
class WitnessRecord:
    coeffs: tuple
    norm: Rat
    pair: Optional[tuple]
    point: Optional[int]
    point_defect: Optional[Rat]


@dataclass(frozen=True)
class VerificationReport:
    """Battery outcome. ``exact_pass`` is the literal statement that every
    tested combination's Lipschitz norm equals the coefficient norm;
    asymptotic families keep it False by design and pass through
    ``expectation_pass`` instead."""

    target: str
    coefficient_set: tuple
    exact_pass: bool
    worst_defect: Rat
    witnesses: tuple
    expectation_kind: str
    expectation_pass: bool
    failures: tuple = ()
    seed: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "coeff_count": len(self.coefficient_set),
            "exact_pass": self.exact_pass,
            "worst_defect": format_rat(self.worst_defect),
            "expectation_kind": self.expectation_kind,
            "expectation_pass": self.expectation_pass,
            "seed": self.seed,
            "failures": list(self.failures),
        }


@dataclass(frozen=True)
class BuiltFamily:
    spec: FamilySpec
    functions: tuple
    target: str  # "sup-norm" | "sum-norm"
    expectation: Expectation
    members: tuple  # descriptive member keys (anchor index, prime, depth, ...)
    checker: Optional[CheckResult] = None

    @property
    def size(self) -> int:
        return len(self.functions)


def _spike(space, row, value) -> LipFn:
    vals = [ZERO] * space.n_points
    vals[row] = rat(value)
    return lipfn(space, vals)


def _two_point(space, prow, qrow, pval, qval) -> LipFn:
    vals = [ZERO] * space.n_points
    vals[prow] = rat(pval)
    vals[qrow] = rat(qval)
    return lipfn(space, vals)


def _values_fn(space, value_map) -> LipFn:
    vals = [ZERO] * space.n_points
    for row, v in value_map.items():
        vals[row] = rat(v)
    return lipfn(space, vals)


def _sign_bit(group: int, member: int) -> Rat:
    """Sign pattern used by the group families: member n reads bit n-1."""
    return ONE if (group >> (member - 1)) & 1 else -ONE


def _pattern_index(coeffs) -> int:
    """Group whose sign pattern matches the coefficient signs (zero -> +)."""
    g = 0
    for n, a in enumerate(coeffs, start=1):
        if a >= ZERO:
            g |= 1 << (n - 1)
    return g


def _build_raw(spec: FamilySpec):
    """Dispatch to the construction builders.

    Returns (functions, members, aux) where ``aux`` carries builder-specific
    structure the verification rules need (orbit maps, value maps).
    """
    tid = spec.theorem_id
    space = spec.space
    aux = {}

    if tid == "prop23":
        points = spec.anchors or tuple(range(1, space.n_points))
        _check_anchor_rows(space, points, "point")
        if 0 in points:
            raise PreconditionError("family cannot be anchored at the base point")
        fns = tuple(_spike(space, p, ONE) for p in points)
        return fns, tuple(points), aux

    if tid in ("prop31", "prop42"):
        points = spec.anchors[0] if tid == "prop31" else spec.anchors
        points = tuple(points)
        if 0 in points:
            raise PreconditionError("family cannot be anchored at the base point")
        fns = tuple(_spike(space, p, _radius(space, p)) for p in points)
        return fns, points, aux

    if tid == "thm34":
        pairs = tuple(tuple(pq) for pq in spec.anchors)
        if any(0 in pq for pq in pairs):
            raise PreconditionError("family cannot be anchored at the base point")
        half = rat(1, 2)
        fns = tuple(
            _two_point(space, p, q, half * space.d(p, q), -half * space.d(p, q))
            for p, q in pairs
        )
        return fns, pairs, aux

    if tid == "thm37":
        pairs = tuple(tuple(pq) for pq in spec.anchors)
        if any(0 in pq for pq in pairs):
            raise PreconditionError("family cannot be anchored at the base point")
        half = rat(1, 2)
        fns = []
        for p, q in pairs:
            dpq = space.d(p, q)
            rp, rq = _radius(space, p), _radius(space, q)
            fns.append(
                _two_point(space, p, q, half * (dpq + rp - rq), half * (-dpq + rp - rq))
            )
        return tuple(fns), pairs, aux

    if tid == "thm43":
        model, N = spec.model, spec.N
        ns = model.n_seq(N)
        orbits = prime_orbits(ns)
        half_l = model.L / 2
        fns, members, maps = [], [], []
        for r, positions in orbits:
            vmap = {}
            vmap[positions[0]] = model.L_pair(r) - half_l
            for k in positions[1:]:
                vmap[k] = -half_l
            fns.append(
                _values_fn(space, {model.seq_row(k): v for k, v in vmap.items()})
            )
            members.append(r)
            maps.append(vmap)
        aux["orbits"] = orbits
        aux["value_maps"] = maps
        return tuple(fns), tuple(members), aux

    if tid == "thm45":
        model, N = spec.model, spec.N
        subseq = tuple(spec.anchors)
        dlim = model.base_limit
        orbits = prime_orbits(len(subseq))
        fns, members, maps = [], [], []
        for r, positions in orbits:
            vmap = {subseq[k - 1]: dlim for k in positions}
            fns.append(
                _values_fn(space, {model.seq_row(s): v for s, v in vmap.items()})
            )
            members.append(r)
            maps.append(vmap)
        aux["orbits"] = orbits
        aux["value_maps"] = maps
        aux["subseq"] = subseq
        return tuple(fns), tuple(members), aux

    if tid == "thm46":
        model, N = spec.model, spec.N
        ns = model.n_seq(N)
        lo = 2 if model.base_aliases_p1 else 1
        eps = _eps_values(model, spec.parameters["eps"], ns, lo)
        g = {n: model.d_base(n) - eps[n] for n in range(lo, ns + 1)}
        orbits = prime_orbits(ns - lo + 1)
        fns, members, maps = [], [], []
        for r, positions in orbits:
            vmap = {}
            head = positions[0] + lo - 1
            vmap[head] = g[head]
            for k in positions[1:]:
                idx = k + lo - 1
                vmap[idx] = -g[idx]
            fns.append(
                _values_fn(space, {model.seq_row(n): v for n, v in vmap.items()})
            )
            members.append(r)
            maps.append(vmap)
        aux["orbits"] = orbits
        aux["value_maps"] = maps
        aux["g"] = g
        aux["lo"] = lo
        return tuple(fns), tuple(members), aux

    if tid == "thm51":
        levels = int(spec.parameters["levels"])
        n_groups_present = space.n_points // 2
        fns = []
        for n in range(1, levels + 1):
            vmap = {}
            for g in range(n_groups_present):
                prow = 2 * g + 1
                if prow < space.n_points:
                    vmap[prow] = _sign_bit(g, n)
            fns.append(_values_fn(space, vmap))
        return tuple(fns), tuple(range(1, levels + 1)), aux

    if tid == "prop53":
        levels = int(spec.parameters["levels"])
        half = rat(1, 2)
        n_pairs_present = (space.n_points - 1) // 2
        fns = []
        for n in range(1, levels + 1):
            vmap = {}
            for g in range(n_pairs_present):
                s = _sign_bit(g, n)
                vmap[2 * g + 1] = s * half
                if 2 * g + 2 < space.n_points:
                    vmap[2 * g + 2] = -s * half
            fns.append(_values_fn(space, vmap))
        return tuple(fns), tuple(range(1, levels + 1)), aux

    if tid == "thm57":
        c = rat(spec.parameters["c"])
        groups = int(spec.parameters["groups"])
        levels = int(spec.parameters["levels"])
        if c <= ONE:
            raise PreconditionError("group family needs c > 1")
        depth = groups.bit_length() - 1  # largest B with 2^B <= groups
        fns = []
        for n in range(1, depth + 1):
            vmap = {}
            for j in range(1, groups + 1):
                s = _sign_bit(j - 1, n)
                for k in range(1, levels + 1):
                    row = (j - 1) * levels + k
                    if row < space.n_points:
                        vmap[row] = s * (ONE - c ** (-k))
            fns.append(_values_fn(space, vmap))
        aux["depth"] = depth
        return tuple(fns), tuple(range(1, depth + 1)), aux

    if tid == "thm49ii":
        # anchors: ((sigma_row, tau_row), ...) in the family's space;
        # parameters: L plus per-pair phi(sigma, tau), psi(sigma), psi(tau).
        big_l = rat(spec.parameters["L"])
        phis = spec.parameters["phi_st"]
        psis = spec.parameters["psi_s"]
        psit = spec.parameters["psi_t"]
        half = rat(1, 2)
        fns = []
        for i, (srow, trow) in enumerate(spec.anchors):
            pval = half * (big_l + phis[i] + psis[i] - psit[i])
            qval = -half * (big_l + phis[i] - psis[i] + psit[i])
            fns.append(_two_point(space, srow, trow, pval, qval))
        return tuple(fns), tuple(range(1, len(spec.anchors) + 1)), aux

    if tid == "thm49case2":
        # space: the greedily selected subspace (selection order = rows);
        # parameters["c"]: the weight recurrence values along the selection.
        cvals = tuple(rat(x) for x in spec.parameters["c"])
        count = len(cvals)
        orbits = prime_orbits(count)
        fns, members, maps = [], [], []
        for r, positions in orbits:
            vmap = {positions[0]: cvals[positions[0] - 1]}
            for k in positions[1:]:
                vmap[k] = -cvals[k - 1]
            fns.append(_values_fn(space, {k - 1: v for k, v in vmap.items()}))
            members.append(r)
            maps.append(vmap)
        aux["orbits"] = orbits
        aux["value_maps"] = maps
        return tuple(fns), tuple(members), aux

    raise PreconditionError(f"unknown construction id {tid!r}")


_CHECKED = {"prop31", "thm34", "thm37", "prop42", "thm43", "thm45", "thm46"}


def run_checker(spec: FamilySpec) -> Optional[CheckResult]:
    """The hypothesis check matching a family spec, or None when the
    construction has no separate hypothesis."""
    tid = spec.theorem_id
    if tid not in _CHECKED:
        return None
    if tid == "prop31":
        points, partners = spec.anchors
        return check_prop31(spec.space, points, partners)
    if tid == "thm34":
        return check_thm34(spec.space, spec.anchors)
    if tid == "thm37":
        return check_thm37(spec.space, spec.anchors)
    if tid == "prop42":
        return check_prop42(spec.space, spec.anchors)
    if spec.model is None or spec.N is None:
        raise PreconditionError(f"{tid} needs the model and truncation size")
    if tid == "thm43":
        return check_thm43(spec.model, spec.N)
    if tid == "thm45":
        return check_thm45(spec.model, spec.anchors, spec.N)
    return check_thm46(spec.model, spec.parameters["eps"], spec.N)


def build_family(spec: FamilySpec, override: bool = False):
    """Build the family after running its hypothesis check (when one exists).

    A failing check raises PreconditionError unless ``override`` is set;
    overriding is how the shape-without-hypothesis direction gets exercised.
    """
    checker = None if override else run_checker(spec)
    if checker is not None and not checker.ok:
        raise PreconditionError(
            f"hypothesis check failed for {spec.theorem_id}: clause "
            f"{checker.clause!r} at {checker.witness_indices}; "
            "pass override=True to build the shape anyway"
        )
    fns, _, _ = _build_raw(spec)
    return fns


# ---------------------------------------------------------------------------
# Coefficient batteries


def coefficient_norm(coeffs, target: str) -> Rat:
    vals = [abs(rat(a)) for a in coeffs]
    if target == "sup-norm":
        best = ZERO
        for v in vals:
            if v > best:
                best = v
        return best
    if target == "sum-norm":
        total = ZERO
        for v in vals:
            total = total + v
        return total
    raise PreconditionError(f"unknown target {target!r}")


def standard_battery(size: int, seed: int = BATTERY_SEED, rand_count: int = BATTERY_RANDOM_COUNT,
                     support: Optional[int] = None):
    """Sign-or-zero vectors on the first min(size, support) coordinates plus
    seeded random rational vectors with entries in [-3, 3]. The sign support
    defaults to SIGN_SUPPORT_LIMIT to keep the enumeration below 3^5."""
    if size < 1:
        raise PreconditionError("battery needs at least one family member")
    head = min(size, SIGN_SUPPORT_LIMIT if support is None else support)
    vectors = []
    for signs in product((-1, 0, 1), repeat=head):
        vec = tuple(rat(s) for s in signs) + tuple([ZERO] * (size - head))
        vectors.append(vec)
    rng = random.Random(seed)
    for _ in range(rand_count):
        entries = []
        for _ in range(size):
            den = rng.randint(1, 20)
            num = rng.randint(-3 * den, 3 * den)
            entries.append(rat(num, den))
        vectors.append(tuple(entries))
    return tuple(vectors)


# ---------------------------------------------------------------------------
# Isometry verification


def _resolve_point(designated, coeffs):
    if designated is None:
        return None
    if callable(designated):
        return designated(coeffs)
    return designated


def verify_isometry(family, target: str, coeff_set, expectation: Expectation,
                    seed: Optional[int] = None) -> VerificationReport:
    """Check the norm identity and the attainment expectation for every
    coefficient vector. Failures are collected, never raised."""
    family = tuple(family)
    if not family:
        raise PreconditionError("empty family")
    exact_all = True
    expect_all = True
    worst = ZERO
    witnesses = []
    failures = []

    def fail(msg):
        nonlocal expect_all
        expect_all = False
        if len(failures) < 8:
            failures.append(msg)

    for coeffs in coeff_set:
        coeffs = tuple(rat(a) for a in coeffs)
        cn = coefficient_norm(coeffs, target)
        f = combine(family, coeffs)
        ln = lip_norm(f)
        gap = cn - ln if cn >= ln else ln - cn
        if gap > worst:
            worst = gap
        if ln != cn:
            exact_all = False
        label = "(" + ",".join(format_rat(a) for a in coeffs) + ")"
        point = None
        point_defect = None
        pair = None

        if expectation.kind == "exact":
            if ln != cn:
                fail(f"a={label}: norm {format_rat(ln)} != {format_rat(cn)}")
            point = _resolve_point(expectation.designated_point, coeffs)
            if point is not None:
                point_defect = defect(f, point)
                if point_defect != ZERO:
                    fail(f"a={label}: defect {format_rat(point_defect)} at {point}")
            if expectation.witness_pair is not None and cn > ZERO:
                pair = expectation.witness_pair(coeffs)
                if pair is not None and slope(f, pair[0], pair[1]) != cn:
                    fail(f"a={label}: witness pair {pair} misses the norm")

        elif expectation.kind == "deflated":
            expected = cn * expectation.norm_factor
            if ln != expected:
                fail(f"a={label}: norm {format_rat(ln)} != {format_rat(expected)}")
            point = _resolve_point(expectation.designated_point, coeffs)
            if point is not None:
                sup_here = pointwise_sup(f, point)
                point_defect = ln - sup_here
                if sup_here != expected:
                    fail(f"a={label}: sup at {point} is {format_rat(sup_here)}")
                if cn - sup_here != cn * expectation.base_gap_factor:
                    fail(f"a={label}: base gap {format_rat(cn - sup_here)} off rule")
            if expectation.witness_pair is not None and cn > ZERO:
                pair = expectation.witness_pair(coeffs)
                if pair is not None and slope(f, pair[0], pair[1]) != expected:
                    fail(f"a={label}: witness pair {pair} misses the norm")

        elif expectation.kind == "asymptotic":
            if cn == ZERO:
                if ln != ZERO:
                    fail(f"a={label}: zero vector with nonzero norm")
            else:
                data = expectation.rule(coeffs)
                if ln != data.expected_norm:
                    fail(
                        f"a={label}: norm {format_rat(ln)} != rule value "
                        f"{format_rat(data.expected_norm)}"
                    )
                if ln > cn:
                    fail(f"a={label}: truncation norm exceeds the target")
                elif expectation.strict and ln == cn:
                    fail(f"a={label}: truncation norm not strictly below target")
                for key, u, v, expected_slope in data.member_checks:
                    got = slope(f, u, v)
                    if abs(got) != expected_slope:
                        fail(
                            f"a={label}: member {key} slope {format_rat(abs(got))} "
                            f"!= {format_rat(expected_slope)}"
                        )
                point = data.designated_point
                sup_here = pointwise_sup(f, point)
                point_defect = ln - sup_here
                if sup_here != data.expected_sup:
                    fail(f"a={label}: sup at {point} is {format_rat(sup_here)}")
        else:
            raise PreconditionError(f"unknown expectation kind {expectation.kind!r}")

        if pair is None and ln > ZERO:
            sp = strong_pairs(f)
            pair = sp[0] if sp else None
        witnesses.append(WitnessRecord(coeffs, ln, pair, point, point_defect))

    return VerificationReport(
        target=target,
        coefficient_set=tuple(tuple(a) for a in coeff_set),
        exact_pass=exact_all,
        worst_defect=worst,
        witnesses=tuple(witnesses),
        expectation_kind=expectation.kind,
        expectation_pass=expect_all,
        failures=tuple(failures),
        seed=seed,
    )


def _argmax_member(coeffs):
    """Smallest position carrying the largest absolute coefficient."""
    best = None
    pos = None
    for i, a in enumerate(coeffs):
        v = abs(a)
        if best is None or v > best:
            best, pos = v, i
    return pos


def _orbit_rule(members, value_maps, nodes, dist, row_of, orbits, designated_node):
    """Build the asymptotic-rule closure for an orbit family.

    ``nodes`` are the model-side indices the rule loops over (sequence
    indices, or selection indices); ``dist`` and ``row_of`` translate them.
    The recomputation walks every node pair with the closed-form distances,
    entirely apart from the truncated-matrix path the LipFn route uses.
    """
    def rule(coeffs):
        val = {node: ZERO for node in nodes}
        support = []
        for i, a in enumerate(coeffs):
            if a == ZERO:
                continue
            support.append(i)
            for node, v in value_maps[i].items():
                val[node] = val[node] + a * v
        best = ZERO
        node_list = list(nodes)
        for x in range(len(node_list)):
            for y in range(x + 1, len(node_list)):
                u, v = node_list[x], node_list[y]
                dv = val[u] - val[v]
                if dv == ZERO:
                    continue
                s = abs(dv) / dist(u, v)
                if s > best:
                    best = s
        checks = []
        for i in support:
            vm = value_maps[i]
            head_node = min(vm.keys())
            deep_node = max(vm.keys())
            su = abs(coeffs[i]) * abs(vm[head_node] - vm[deep_node]) / dist(
                head_node, deep_node
            )
            checks.append((members[i], row_of(head_node), row_of(deep_node), su))
        n0 = _argmax_member(coeffs)
        x0 = designated_node(members[n0], value_maps[n0])
        sup_best = ZERO
        for u in nodes:
            if u == x0:
                continue
            dv = val[x0] - val[u]
            if dv == ZERO:
                continue
            s = abs(dv) / dist(x0, u)
            if s > sup_best:
                sup_best = s
        return RuleData(best, tuple(checks), row_of(x0), sup_best)

    return rule


def _model_nodes(model: MetricModel, ns: int):
    """Node keys and closed-form distance for a model-backed rule loop.

    Node 0 stands for a separate base point; alias models use sequence
    index 1 directly (its family value is always zero)."""
    if model.base_aliases_p1:
        nodes = tuple(range(1, ns + 1))
    else:
        nodes = (0,) + tuple(range(1, ns + 1))

    def dist(u, v):
        if u == 0:
            return model.d_base(v)
        if v == 0:
            return model.d_base(u)
        return model.d_seq(u, v)

    def row_of(node):
        return 0 if node == 0 else model.seq_row(node)

    return nodes, dist, row_of


# ---------------------------------------------------------------------------
# Standard instantiations (one per supported construction)


def _exact_witness_pairs(members_pairs):
    """Witness rule for two-point families: the dominant pair, oriented so
    the slope is positive."""

    def witness(coeffs):
        n0 = _argmax_member(coeffs)
        if abs(coeffs[n0]) == ZERO:
            return None
        p, q = members_pairs[n0]
        return (q, p) if coeffs[n0] > ZERO else (p, q)

    return witness


def standard_family(theorem_id: str, N: Optional[int] = None, **params) -> BuiltFamily:
    """The catalog instantiation of each supported construction, with its
    checker outcome and finite-scale expectation wired in."""

    if theorem_id == "prop23":
        N = N or 16
        model = catalog("prop23")
        space = truncate(model, N)
        points = tuple(range(1, N))
        spec = FamilySpec("prop23", space, anchors=points, model=model, N=N)
        fns, members, _ = _build_raw(spec)

        def witness(coeffs):
            n0 = _argmax_member(coeffs)
            if abs(coeffs[n0]) == ZERO:
                return None
            p = points[n0]
            return (0, p) if coeffs[n0] > ZERO else (p, 0)

        exp = Expectation("exact", designated_point=0, witness_pair=witness)
        return BuiltFamily(spec, fns, "sup-norm", exp, members, None)

    if theorem_id == "prop31":
        N = N or 10
        space = truncate(integer_line(), N)
        points = tuple(range(1, N, 2))
        partners = tuple(p - 1 for p in points)
        spec = FamilySpec("prop31", space, anchors=(points, partners))
        checker = run_checker(spec)
        fns, members, _ = _build_raw(spec)

        def witness(coeffs):
            n0 = _argmax_member(coeffs)
            if abs(coeffs[n0]) == ZERO:
                return None
            p, q = points[n0], partners[n0]
            return (q, p) if coeffs[n0] > ZERO else (p, q)

        exp = Expectation("exact", witness_pair=witness)
        return BuiltFamily(spec, fns, "sup-norm", exp, members, checker)

    if theorem_id == "thm34":
        N = N or 16
        space = truncate(catalog("discrete"), N)
        pairs = tuple((2 * k + 1, 2 * k + 2) for k in range((N - 1) // 2))
        spec = FamilySpec("thm34", space, anchors=pairs)
        checker = run_checker(spec)
        fns, members, _ = _build_raw(spec)
        exp = Expectation("exact", witness_pair=_exact_witness_pairs(pairs))
        return BuiltFamily(spec, fns, "sup-norm", exp, members, checker)

    if theorem_id == "thm37":
        N = N or 10
        space = truncate(catalog("example35"), N)
        pairs = tuple((2 * k + 1, 2 * k + 2) for k in range((N - 1) // 2))
        spec = FamilySpec("thm37", space, anchors=pairs)
        checker = run_checker(spec)
        fns, members, _ = _build_raw(spec)
        exp = Expectation("exact", witness_pair=_exact_witness_pairs(pairs))
        return BuiltFamily(spec, fns, "sup-norm", exp, members, checker)

    if theorem_id == "prop42":
        N = N or 12
        space = truncate(integer_line(), N)
        points = tuple(range(1, N, 2))
        spec = FamilySpec("prop42", space, anchors=points)
        checker = run_checker(spec)
        fns, members, _ = _build_raw(spec)

        def witness(coeffs):
            n0 = _argmax_member(coeffs)
            if abs(coeffs[n0]) == ZERO:
                return None
            p = points[n0]
            return (p - 1, p) if coeffs[n0] > ZERO else (p, p - 1)

        def designated(coeffs):
            return points[_argmax_member(coeffs)]

        exp = Expectation("exact", designated_point=designated, witness_pair=witness)
        return BuiltFamily(spec, fns, "sup-norm", exp, members, checker)

    if theorem_id == "thm43":
        N = N or 30
        model = catalog("dmqr41")
        space = truncate(model, N)
        spec = FamilySpec("thm43", space, model=model, N=N)
        checker = run_checker(spec)
        fns, members, aux = _build_raw(spec)
        ns = model.n_seq(N)
        nodes, dist, row_of = _model_nodes(model, ns)

        def designated_node(member_prime, vmap):
            return min(vmap.keys())  # the orbit head

        rule = _orbit_rule(
            members, aux["value_maps"], nodes, dist, row_of, aux["orbits"], designated_node
        )
        exp = Expectation("asymptotic", rule=rule)
        return BuiltFamily(spec, fns, "sup-norm", exp, members, checker)

    if theorem_id == "thm45":
        N = N or 30
        model = catalog("example44")
        space = truncate(model, N)
        subseq = tuple(range(2, model.n_seq(N) + 1))
        spec = FamilySpec("thm45", space, anchors=subseq, model=model, N=N)
        checker = run_checker(spec)
        fns, members, aux = _build_raw(spec)
        nodes, dist, row_of = _model_nodes(model, model.n_seq(N))
        base_node = 0 if not model.base_aliases_p1 else 1

        def designated_node(member_prime, vmap):
            return base_node  # the constant orbit attains toward the base

        rule = _orbit_rule(
            members, aux["value_maps"], nodes, dist, row_of, aux["orbits"], designated_node
        )

        def rule_with_base_pairs(coeffs):
            data = rule(coeffs)
            # the member witness pair is (deepest orbit point, base)
            checks = []
            for i, a in enumerate(coeffs):
                if a == ZERO:
                    continue
                vmap = aux["value_maps"][i]
                deep = max(vmap.keys())
                s = abs(a * vmap[deep]) / dist(deep, base_node)
                checks.append((members[i], row_of(deep), row_of(base_node), s))
            return RuleData(
                data.expected_norm, tuple(checks), data.designated_point, data.expected_sup
            )

        exp = Expectation("asymptotic", rule=rule_with_base_pairs)
        return BuiltFamily(spec, fns, "sup-norm", exp, members, checker)

    if theorem_id == "thm46":
        N = N or 20
        c = params.get("c", 1)
        model = catalog("dmqr44", c=c)
        space = truncate(model, N)
        spec = FamilySpec(
            "thm46", space, parameters={"eps": model.eps}, model=model, N=N
        )
        checker = run_checker(spec)
        fns, members, aux = _build_raw(spec)
        nodes, dist, row_of = _model_nodes(model, model.n_seq(N))

        def designated_node(member_prime, vmap):
            return min(vmap.keys())

        rule = _orbit_rule(
            members, aux["value_maps"], nodes, dist, row_of, aux["orbits"], designated_node
        )
        exp = Expectation("asymptotic", rule=rule)
        return BuiltFamily(spec, fns, "sup-norm", exp, members, checker)

    if theorem_id == "thm51":
        levels = int(params.get("levels", 5))
        model = catalog("thm51star", levels=levels)
        N = N or model.max_points
        space = truncate(model, N)
        spec = FamilySpec("thm51", space, parameters={"levels": levels}, model=model, N=N)
        fns, members, _ = _build_raw(spec)

        def witness(coeffs):
            g0 = _pattern_index(coeffs)
            return (2 * g0, 2 * g0 + 1)

        exp = Expectation("exact", witness_pair=witness)
        return BuiltFamily(spec, fns, "sum-norm", exp, members, None)

    if theorem_id == "prop53":
        levels = int(params.get("levels", 5))
        model = catalog("prop53", levels=levels)
        N = N or model.max_points
        space = truncate(model, N)
        spec = FamilySpec("prop53", space, parameters={"levels": levels}, model=model, N=N)
        fns, members, _ = _build_raw(spec)

        def witness(coeffs):
            g0 = _pattern_index(coeffs)
            return (2 * g0 + 2, 2 * g0 + 1)

        exp = Expectation("exact", witness_pair=witness)
        return BuiltFamily(spec, fns, "sum-norm", exp, members, None)

    if theorem_id == "thm57":
        c = rat(params.get("c", 2))
        groups = int(params.get("groups", 8))
        levels = int(params.get("levels", 8))
        model = catalog("thm57", c=c, groups=groups, levels=levels)
        N = N or model.max_points
        space = truncate(model, N)
        spec = FamilySpec(
            "thm57",
            space,
            parameters={"c": c, "groups": groups, "levels": levels},
            model=model,
            N=N,
        )
        fns, members, aux = _build_raw(spec)

        def witness(coeffs):
            j0 = _pattern_index(coeffs) + 1
            return (0, j0 * levels)

        factor = ONE - c ** (-levels)
        exp = Expectation(
            "deflated",
            designated_point=0,
            witness_pair=witness,
            norm_factor=factor,
            base_gap_factor=c ** (-levels),
        )
        return BuiltFamily(spec, fns, "sum-norm", exp, members, None)

    raise PreconditionError(f"unknown construction id {theorem_id!r}")


def verify_standard(built: BuiltFamily, seed: int = BATTERY_SEED) -> VerificationReport:
    battery = standard_battery(built.size, seed=seed)
    return verify_isometry(built.functions, built.target, battery, built.expectation, seed=seed)


def report_json(theorem: str, space_name: str, N: int, checker, report: VerificationReport) -> dict:
    """The consolidated verification record the command line emits."""
    samples = []
    for rec in report.witnesses[:5]:
        samples.append(
            {
                "coeffs": [format_rat(a) for a in rec.coeffs],
                "norm": format_rat(rec.norm),
                "pair": list(rec.pair) if rec.pair is not None else None,
                "point": rec.point,
                "point_defect": format_rat(rec.point_defect)
                if rec.point_defect is not None
                else None,
            }
        )
    return {
        "theorem": theorem,
        "space": space_name,
        "N": N,
        "checker": bool(checker) if checker is not None else None,
        "coeff_count": len(report.coefficient_set),
        "exact_pass": report.exact_pass,
        "expectation_kind": report.expectation_kind,
        "expectation_pass": report.expectation_pass,
        "worst_defect": format_rat(report.worst_defect),
        "seed": report.seed,
        "witness_samples": samples,
    }


# ---------------------------------------------------------------------------
# Main pipeline: pick the construction a model supports and run it


@dataclass(frozen=True)
class PipelineResult:
    """Iterable as (case, subspace, family, report); the construction data
    (epsilons, selected pairs, weights) rides along for inspection."""

    case: str
    subspace: tuple
    family: tuple
    report: VerificationReport
    data: dict

    def __iter__(self):
        return iter((self.case, self.subspace, self.family, self.report))


def _classify_bounded(model: MetricModel, ns: int) -> str:
    """The uniform comparison between pair gaps and tail gaps, or an error
    naming the first disagreeing pairs."""
    sign = None
    sign_pair = None
    for n in range(1, ns + 1):
        for m in range(n + 1, ns + 1):
            here = model.phi(n, m) >= model.psi(n) + model.psi(m)
            if sign is None:
                sign, sign_pair = here, (n, m)
            elif here != sign:
                raise DichotomyError(
                    "dichotomy not uniform on range: pairs "
                    f"{sign_pair} and {(n, m)} disagree"
                )
    return "I-(i)" if sign else "I-(ii)"


def _pipeline_case_i1(model: MetricModel, trunc: FiniteMetricSpace, N: int) -> PipelineResult:
    ns = model.n_seq(N)
    half_l = model.L / 2
    eps = {}
    g = {}
    for n in range(2, ns + 1):
        eps[n] = half_l + model.phi(1, n) - model.psi(n)
        g[n] = half_l + model.psi(n)
        if model.d_seq(1, n) - eps[n] != g[n]:
            raise ConstructionError("epsilon assignment does not match the closed form")
        if g[n] < ZERO:
            raise ConstructionError(f"negative shifted distance at n={n}")
    for n in range(2, ns + 1):
        for m in range(n + 1, ns + 1):
            if g[n] + g[m] > model.d_seq(n, m):
                raise ConstructionError(f"shifted sum exceeds the distance at ({n},{m})")

    # the subspace keeps only sequence points, re-based at the first
    rows = [model.seq_row(k) for k in range(1, ns + 1)]
    sub = trunc.subspace(rows)
    for k in range(2, ns + 1):
        r_sub = min_positive_radius(sub, k - 1)
        if g[k] > r_sub:
            raise ConstructionError(f"shifted distance exceeds the radius at n={k}")

    count = ns - 1  # working sequence indices 2..ns, one step shifted
    orbits = prime_orbits(count)
    members = []
    value_maps = []  # keyed by model sequence index
    fns = []
    for r, positions in orbits:
        vmap = {}
        head = positions[0] + 1
        vmap[head] = g[head]
        for k in positions[1:]:
            vmap[k + 1] = -g[k + 1]
        members.append(r)
        value_maps.append(vmap)
        fns.append(_values_fn(sub, {n - 1: v for n, v in vmap.items()}))

    nodes = tuple(range(1, ns + 1))

    def dist(u, v):
        return model.d_seq(u, v)

    def row_of(node):
        return node - 1  # position inside the re-based subspace

    def designated_node(member_prime, vmap):
        return min(vmap.keys())

    rule = _orbit_rule(members, value_maps, nodes, dist, row_of, orbits, designated_node)
    # the case boundary allows pair gaps to meet tail gaps exactly, so the
    # combined norm may touch the target on a truncation; only the rule
    # equality is asserted
    exp = Expectation("asymptotic", rule=rule, strict=False)
    battery = standard_battery(len(fns))
    report = verify_isometry(fns, "sup-norm", battery, exp, seed=BATTERY_SEED)
    return PipelineResult(
        "I-(i)", tuple(rows), tuple(fns), report, {"eps": eps, "g": g}
    )


def _pipeline_case_i2(model: MetricModel, trunc: FiniteMetricSpace, N: int) -> PipelineResult:
    model.need_envelopes()
    ns = model.n_seq(N)
    if ns < 2:
        raise ConstructionError("need at least two sequence points")
    sigma = [1]
    tau = [2]
    eps = []
    while True:
        s, t = sigma[-1], tau[-1]
        e = (-model.phi(s, t) + model.psi(s) + model.psi(t)) / 6
        if e <= ZERO:
            raise ConstructionError(f"nonpositive epsilon at pair ({s},{t})")
        eps.append(e)
        nxt = None
        for cand in range(t + 1, ns):  # need cand + 1 <= ns for the tau partner
            if (
                model.env_phi(cand) < e
                and model.env_psi(cand) < e
                and model.env_dev(s, cand) < e
                and model.env_dev(t, cand) < e
            ):
                nxt = cand
                break
        if nxt is None:
            break
        sigma.append(nxt)
        tau.append(nxt + 1)

    used = set(sigma) | set(tau)
    base_idx = None
    for n in range(1, ns + 1):
        if n not in used:
            base_idx = n
            break
    if base_idx is None:
        raise ConstructionError("no unused sequence index left to serve as the base")

    order = [base_idx] + [n for n in range(1, ns + 1) if n != base_idx]
    rows = [model.seq_row(n) for n in order]
    sub = trunc.subspace(rows)
    pos = {n: i for i, n in enumerate(order)}

    anchor_rows = tuple((pos[s], pos[t]) for s, t in zip(sigma, tau))
    spec = FamilySpec(
        "thm49ii",
        sub,
        anchors=anchor_rows,
        parameters={
            "L": model.L,
            "phi_st": tuple(model.phi(s, t) for s, t in zip(sigma, tau)),
            "psi_s": tuple(model.psi(s) for s in sigma),
            "psi_t": tuple(model.psi(t) for t in tau),
        },
    )
    fns, members, _ = _build_raw(spec)
    for i, (srow, trow) in enumerate(anchor_rows):
        diff = fns[i].values[srow] - fns[i].values[trow]
        if diff != sub.d(srow, trow):
            raise ConstructionError(f"pair values do not span the distance at member {i + 1}")

    def witness(coeffs):
        n0 = _argmax_member(coeffs)
        if abs(coeffs[n0]) == ZERO:
            return None
        srow, trow = anchor_rows[n0]
        return (trow, srow) if coeffs[n0] > ZERO else (srow, trow)

    exp = Expectation("exact", witness_pair=witness)
    battery = standard_battery(len(fns))
    report = verify_isometry(fns, "sup-norm", battery, exp, seed=BATTERY_SEED)
    return PipelineResult(
        "I-(ii)",
        tuple(rows),
        tuple(fns),
        report,
        {"sigma": tuple(sigma), "tau": tuple(tau), "eps": tuple(eps), "base": base_idx},
    )


def _pipeline_case_ii(trunc: FiniteMetricSpace) -> PipelineResult:
    n_rows = trunc.n_points
    selected = [0]
    cvals = [ONE]
    while True:
        n = len(selected)
        inner = None
        for a in selected:
            ca = cvals[selected.index(a)]
            for b in selected:
                v = trunc.d(a, b) + ca
                if inner is None or v > inner:
                    inner = v
        bound = rat(n) * inner
        nxt = None
        for r in range(n_rows):
            if r in selected:
                continue
            if all(trunc.d(k, r) > bound for k in selected):
                nxt = r
                break
        if nxt is None:
            break
        selected.append(nxt)
        diam = max(
            trunc.d(a, b) for a in selected for b in selected
        )
        cvals.append(diam - inner)

    if len(selected) < 2:
        raise ConstructionError("growth selection found no second point")
    for c in cvals:
        if c <= ZERO:
            raise ConstructionError("nonpositive weight in the growth recurrence")
    k_sel = len(selected)
    for i in range(k_sel):
        for j in range(i + 1, k_sel):
            if cvals[i] + cvals[j] > trunc.d(selected[i], selected[j]):
                raise ConstructionError(
                    f"weight sum exceeds the distance at selection ({i + 1},{j + 1})"
                )
    sub = trunc.subspace(selected)
    for i in range(k_sel):
        if cvals[i] > min_positive_radius(sub, i):
            raise ConstructionError(f"weight exceeds the radius at selection {i + 1}")

    spec = FamilySpec("thm49case2", sub, parameters={"c": tuple(cvals)})
    fns, members, aux = _build_raw(spec)
    if not fns:
        raise ConstructionError("selection too short to carry any orbit member")

    nodes = tuple(range(1, k_sel + 1))

    def dist(u, v):
        return sub.d(u - 1, v - 1)

    def row_of(node):
        return node - 1

    def designated_node(member_prime, vmap):
        return min(vmap.keys())

    rule = _orbit_rule(members, aux["value_maps"], nodes, dist, row_of, aux["orbits"], designated_node)
    # weight sums may meet the distances exactly (the recurrence allows
    # equality), in which case aligned unit coefficients attain the target
    # norm already at finite scale
    exp = Expectation("asymptotic", rule=rule, strict=False)
    battery = standard_battery(len(fns))
    report = verify_isometry(fns, "sup-norm", battery, exp, seed=BATTERY_SEED)
    return PipelineResult(
        "II", tuple(selected), tuple(fns), report, {"c": tuple(cvals)}
    )


def main_theorem_pipeline(model: MetricModel, N: int) -> PipelineResult:
    """Classify the model, run the matching construction, and verify it.

    Bounded models split by the uniform gap comparison (asymmetric mixes
    raise DichotomyError with the disagreeing pairs); unbounded models go
    through the greedy growth selection. The returned result iterates as
    (case, subspace rows, family, report).
    """
    if not model.is_sequence_model:
        raise ModelError(f"model {model.name!r} has no sequence structure")
    trunc = truncate(model, N)
    if model.bounded:
        ns = model.n_seq(N)
        case = _classify_bounded(model, ns)
        if case == "I-(i)":
            return _pipeline_case_i1(model, trunc, N)
        return _pipeline_case_i2(model, trunc, N)
    return _pipeline_case_ii(trunc)


# ---------------------------------------------------------------------------
# Sign-pattern check for sum-norm families


def ell1_sign_check(family, coeffs, pair, require_strong: bool = False) -> bool:
    """Whether every supported member's slope along ``pair`` equals the
    coefficient's sign exactly.

    With ``require_strong`` the pair must realize the combined function's
    norm with positive slope, otherwise a precondition error is raised; by
    default the orientation is taken as given and the answer is a plain
    boolean, so a flipped coefficient simply reports False.
    """
    family = tuple(family)
    coeffs = tuple(rat(a) for a in coeffs)
    if len(coeffs) > len(family):
        raise PreconditionError("more coefficients than family members")
    u, v = pair
    f = combine(family, coeffs)
    if require_strong:
        if slope(f, u, v) != lip_norm(f) or lip_norm(f) == ZERO:
            raise PreconditionError("pair does not strongly attain the norm")
    for i, a in enumerate(coeffs):
        if a == ZERO:
            continue
        want = ONE if a > ZERO else -ONE
        if slope(family[i], u, v) != want:
            return False
    return True
