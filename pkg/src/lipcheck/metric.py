"""Pointed finite metric spaces, validation, and the model catalog.

Everything in this module is exact. Distances come from closed-form rules
evaluated in rational arithmetic, validation is a literal check of the
metric axioms, and models carry whatever tail data (limits along the index
set) the downstream checkers need. A model that cannot supply a limit says
so through an error instead of letting callers guess one numerically.

Row convention: the base point is always row 0. Models whose base point is
the first sequence element alias row i to p_{i+1}; models with a separate
base map row i to p_i for i >= 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

from .rational import Rat, ZERO, ONE, format_rat, is_rational, parse_rat, rat

BASE_INDEX = 0


class LipcheckError(Exception):
    """Base class for everything this package raises on purpose."""


class StructureError(LipcheckError):
    """Malformed container input (non-square matrix, bad JSON shape)."""


class PreconditionError(LipcheckError):
    """A documented precondition of an operation was violated."""


class ModelError(LipcheckError):
    """Unknown catalog entry, parameter out of range, or a rule that
    produced a non-metric."""


class TailDataError(ModelError):
    """A checker needed a declared limit the model does not supply."""


# ---------------------------------------------------------------------------
# Finite spaces


@dataclass(frozen=True)
class Violation:
    axiom: str
    indices: tuple
    values: tuple


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [
                {
                    "axiom": v.axiom,
                    "indices": list(v.indices),
                    "values": [format_rat(x) for x in v.values],
                }
                for v in self.violations
            ],
        }


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a named condition check; truthy iff the condition holds.

    When a check fails, ``clause`` names the violated condition and the
    witness fields carry the first violating indices with the exact values
    on both sides.
    """

    ok: bool
    name: str
    clause: str = ""
    witness_indices: tuple = ()
    witness_values: tuple = ()

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "name": self.name,
            "clause": self.clause,
            "witness_indices": list(self.witness_indices),
            "witness_values": [format_rat(x) for x in self.witness_values],
        }


@dataclass(frozen=True)
class FiniteMetricSpace:
    """An n-point metric with the base fixed at row 0.

    ``dist`` is a tuple of row tuples of rationals. Construction does not
    validate the axioms; run :func:`validate` for that.
    """

    dist: tuple
    labels: tuple
    name: str = ""

    @property
    def n_points(self) -> int:
        return len(self.dist)

    @property
    def base_index(self) -> int:
        return BASE_INDEX

    def d(self, i: int, j: int) -> Rat:
        return self.dist[i][j]

    def points(self):
        return range(len(self.dist))

    def subspace(self, indices) -> "FiniteMetricSpace":
        """Restrict to ``indices``; the first listed index becomes the base."""
        idx = list(indices)
        if len(idx) < 1:
            raise PreconditionError("subspace needs at least one index")
        if len(set(idx)) != len(idx):
            raise PreconditionError("subspace indices must be distinct")
        rows = tuple(
            tuple(self.dist[a][b] for b in idx) for a in idx
        )
        labs = tuple(self.labels[a] for a in idx)
        return FiniteMetricSpace(rows, labs, name=self.name)


def make_space(dist_rows, labels=None, name: str = "") -> FiniteMetricSpace:
    """Build a space from nested lists, coercing entries with rat()."""
    rows = tuple(tuple(rat(x) for x in row) for row in dist_rows)
    if labels is None:
        labels = tuple(f"x{i}" for i in range(len(rows)))
    else:
        labels = tuple(str(x) for x in labels)
        if len(labels) != len(rows):
            raise StructureError("label count does not match matrix size")
    return FiniteMetricSpace(rows, labels, name=name)


def validate(space: FiniteMetricSpace) -> ValidationReport:
    """Check the three metric axioms and report every violation.

    Positivity covers both the zero diagonal and strictly positive
    off-diagonal entries. Witnesses are the smallest index tuples in
    lexicographic order, since iteration is ordered.
    """
    n = space.n_points
    for i, row in enumerate(space.dist):
        if len(row) != n:
            raise StructureError(f"row {i} has length {len(row)}, expected {n}")
        for x in row:
            if not is_rational(x):
                raise StructureError(f"non-rational entry in row {i}")

    violations = []
    for i in range(n):
        if space.dist[i][i] != ZERO:
            violations.append(Violation("positivity", (i, i), (space.dist[i][i],)))
        for j in range(i + 1, n):
            if space.dist[i][j] <= ZERO:
                violations.append(Violation("positivity", (i, j), (space.dist[i][j],)))
            if space.dist[i][j] != space.dist[j][i]:
                violations.append(
                    Violation("symmetry", (i, j), (space.dist[i][j], space.dist[j][i]))
                )
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            d_ij = space.dist[i][j]
            for k in range(j + 1, n):
                if k == i:
                    continue
                if space.dist[j][k] > d_ij + space.dist[i][k]:
                    violations.append(
                        Violation(
                            "triangle",
                            (j, i, k),
                            (space.dist[j][k], d_ij, space.dist[i][k]),
                        )
                    )
    return ValidationReport(passed=not violations, violations=tuple(violations))


def min_positive_radius(space: FiniteMetricSpace, p: int) -> Rat:
    """Distance from p to the rest of the space (a minimum, finitely)."""
    if space.n_points < 2:
        raise PreconditionError("radius needs at least two points")
    best = None
    for q in space.points():
        if q == p:
            continue
        d = space.dist[p][q]
        if best is None or d < best:
            best = d
    return best


# ---------------------------------------------------------------------------
# Models


@dataclass(frozen=True)
class MetricModel:
    """A countable metric rule plus declared tail data.

    ``row_dist`` is the authoritative rule on row indices. Sequence models
    also expose the 1-based rule ``seq_dist`` (and ``base_dist`` when the
    base is a separate point) so checkers can reason in sequence indices.
    Tail fields are declared closed forms, not computed limits:

    - ``L_pair(n)``  = lim_m d(p_n, p_m)
    - ``L``          = lim_n L_pair(n)
    - ``base_limit`` = lim_n d(0, p_n)
    - ``eps(n)``     = the model's canonical epsilon assignment, if any
    - ``env_phi(s)``   bounds sup_{s<=n<m} |phi(n, m)|
    - ``env_psi(s)``   bounds sup_{n>=s} |psi(n)|
    - ``env_dev(n,s)`` bounds sup_{m>=s} |phi(n, m) - psi(n)| for s > n

    where phi(n, m) = d(p_n, p_m) - L and psi(n) = L_pair(n) - L.
    """

    name: str
    params: dict
    row_dist: Callable
    row_label: Callable
    base_aliases_p1: bool
    max_points: Optional[int] = None
    seq_dist: Optional[Callable] = None
    base_dist: Optional[Callable] = None
    L_pair: Optional[Callable] = None
    L: Optional[Rat] = None
    base_limit: Optional[Rat] = None
    eps: Optional[Callable] = None
    env_phi: Optional[Callable] = None
    env_psi: Optional[Callable] = None
    env_dev: Optional[Callable] = None
    bounded: bool = True
    uniformly_discrete: bool = True
    monotone_tails: bool = False
    liminf_phi_nonneg: Optional[bool] = None
    ratio_tends_to_one: bool = False

    # -- sequence/row bookkeeping ------------------------------------------

    @property
    def is_sequence_model(self) -> bool:
        return self.seq_dist is not None

    def _need_sequence(self):
        if not self.is_sequence_model:
            raise ModelError(f"model {self.name!r} has no sequence structure")

    def n_seq(self, n_points: int) -> int:
        """Number of sequence points inside an n_points truncation."""
        self._need_sequence()
        return n_points if self.base_aliases_p1 else n_points - 1

    def seq_row(self, n: int) -> int:
        self._need_sequence()
        return n - 1 if self.base_aliases_p1 else n

    def row_seq(self, r: int) -> int:
        self._need_sequence()
        if not self.base_aliases_p1 and r == 0:
            raise PreconditionError("row 0 is the base point, not a sequence point")
        return r + 1 if self.base_aliases_p1 else r

    def d_seq(self, n: int, m: int) -> Rat:
        self._need_sequence()
        if n == m:
            return ZERO
        return self.seq_dist(n, m)

    def d_base(self, n: int) -> Rat:
        """d(0, p_n) in sequence indexing."""
        self._need_sequence()
        if self.base_aliases_p1:
            return ZERO if n == 1 else self.seq_dist(1, n)
        return self.base_dist(n)

    # -- declared tails -----------------------------------------------------

    @property
    def has_tails(self) -> bool:
        return self.L is not None and self.L_pair is not None

    def _need_tails(self):
        if not self.has_tails:
            raise TailDataError(f"limits unavailable for model {self.name!r}")

    def phi(self, n: int, m: int) -> Rat:
        self._need_tails()
        return self.d_seq(n, m) - self.L

    def psi(self, n: int) -> Rat:
        self._need_tails()
        return self.L_pair(n) - self.L

    def need_envelopes(self):
        if self.env_phi is None or self.env_psi is None or self.env_dev is None:
            raise TailDataError(f"envelope bounds unavailable for model {self.name!r}")


def truncate(model: MetricModel, N: int) -> FiniteMetricSpace:
    """The metric on the first N row indices of the model, validated."""
    if N < 2:
        raise PreconditionError("truncation needs N >= 2")
    if model.max_points is not None and N > model.max_points:
        raise ModelError(
            f"model {model.name!r} has only {model.max_points} points "
            f"with the given parameters, asked for {N}"
        )
    rows = tuple(
        tuple(ZERO if i == j else model.row_dist(i, j) for j in range(N))
        for i in range(N)
    )
    labels = tuple(model.row_label(i) for i in range(N))
    space = FiniteMetricSpace(rows, labels, name=model.name)
    report = validate(space)
    if not report.passed:
        v = report.violations[0]
        raise ModelError(
            f"truncation of {model.name!r} at N={N} violates {v.axiom} "
            f"at indices {v.indices}"
        )
    return space


# ---------------------------------------------------------------------------
# Catalog builders


def _seq_model(name, params, seq_dist, base_dist=None, **extra) -> MetricModel:
    alias = base_dist is None

    def row_dist(i, j):
        if i == j:
            return ZERO
        if alias:
            return seq_dist(i + 1, j + 1)
        if i == 0:
            return base_dist(j)
        if j == 0:
            return base_dist(i)
        return seq_dist(i, j)

    def row_label(i):
        if alias:
            return f"p{i + 1}"
        return "0" if i == 0 else f"p{i}"

    return MetricModel(
        name=name,
        params=params,
        row_dist=row_dist,
        row_label=row_label,
        base_aliases_p1=alias,
        seq_dist=seq_dist,
        base_dist=base_dist,
        **extra,
    )


def _discrete() -> MetricModel:
    return _seq_model(
        "discrete",
        {},
        seq_dist=lambda n, m: ONE,
        L_pair=lambda n: ONE,
        L=ONE,
        env_phi=lambda s: ZERO,
        env_psi=lambda s: ZERO,
        env_dev=lambda n, s: ZERO,
        monotone_tails=True,
        liminf_phi_nonneg=True,
    )


def _prop23() -> MetricModel:
    two = rat(2)
    return _seq_model(
        "prop23",
        {},
        seq_dist=lambda n, m: two,
        base_dist=lambda n: ONE,
        L_pair=lambda n: two,
        L=two,
        base_limit=ONE,
        env_phi=lambda s: ZERO,
        env_psi=lambda s: ZERO,
        env_dev=lambda n, s: ZERO,
        monotone_tails=True,
        liminf_phi_nonneg=True,
    )


def _prop24() -> MetricModel:
    # Points 1/2^{n^2} on the line accumulating at the base point 0.
    def x(n):
        return rat(1, 2 ** (n * n))

    return _seq_model(
        "prop24",
        {},
        seq_dist=lambda n, m: x(min(n, m)) - x(max(n, m)),
        base_dist=x,
        L_pair=x,
        L=ZERO,
        base_limit=ZERO,
        env_phi=lambda s: x(s),
        env_psi=lambda s: x(s),
        env_dev=lambda n, s: x(s),
        monotone_tails=True,
        liminf_phi_nonneg=True,
        uniformly_discrete=False,
    )


def _example33() -> MetricModel:
    return _seq_model(
        "example33",
        {},
        seq_dist=lambda n, m: ONE + rat(1, min(n, m)),
        L_pair=lambda n: ONE + rat(1, n),
        L=ONE,
        env_phi=lambda s: rat(1, s),
        env_psi=lambda s: rat(1, s),
        # For m > n, phi(n, m) = 1/n = psi(n), so the deviation vanishes.
        env_dev=lambda n, s: ZERO,
        monotone_tails=True,
        liminf_phi_nonneg=True,
    )


def _example35() -> MetricModel:
    return _seq_model(
        "example35",
        {},
        seq_dist=lambda n, m: ONE + rat(1, n) + rat(1, m),
        base_dist=lambda n: ONE + rat(1, n),
        L_pair=lambda n: ONE + rat(1, n),
        L=ONE,
        base_limit=ONE,
        env_phi=lambda s: rat(2, s),
        env_psi=lambda s: rat(1, s),
        env_dev=lambda n, s: rat(1, s),
        monotone_tails=True,
        liminf_phi_nonneg=True,
    )


def _dmqr41() -> MetricModel:
    return _seq_model(
        "dmqr41",
        {},
        seq_dist=lambda n, m: ONE + rat(1, max(n, m)),
        L_pair=lambda n: ONE,
        L=ONE,
        env_phi=lambda s: rat(1, s + 1),
        env_psi=lambda s: ZERO,
        env_dev=lambda n, s: rat(1, s),
        monotone_tails=True,
        liminf_phi_nonneg=True,
    )


def _example44() -> MetricModel:
    half = rat(1, 2)
    return _seq_model(
        "example44",
        {},
        seq_dist=lambda n, m: ONE + rat(1, n + m),
        base_dist=lambda n: half + rat(1, n),
        L_pair=lambda n: ONE,
        L=ONE,
        base_limit=half,
        env_phi=lambda s: rat(1, 2 * s + 1),
        env_psi=lambda s: ZERO,
        env_dev=lambda n, s: rat(1, n + s),
        monotone_tails=True,
        liminf_phi_nonneg=True,
    )


def _example48() -> MetricModel:
    two = rat(2)

    def srule(n, m):
        lo, hi = min(n, m), max(n, m)
        return two - rat(1, 3 ** lo) - rat(2, 3 ** hi)

    return _seq_model(
        "example48",
        {},
        seq_dist=srule,
        L_pair=lambda n: two - rat(1, 3 ** n),
        L=two,
        env_phi=lambda s: rat(5, 3 ** (s + 1)),
        env_psi=lambda s: rat(1, 3 ** s),
        env_dev=lambda n, s: rat(2, 3 ** s),
        monotone_tails=True,
        # phi(n, m) < 0 everywhere but tends to 0, so the liminf is 0.
        liminf_phi_nonneg=True,
    )


def _dmqr44(c) -> MetricModel:
    c = rat(c)
    if c <= ZERO:
        raise ModelError("dmqr44 needs c > 0 so that eps_n stays inside ]0, 1/2[")

    def eps(n):
        return rat(n) / (2 * (rat(n) + c))

    def srule(n, m):
        return rat(n + m) - eps(max(n, m))

    return _seq_model(
        "dmqr44",
        {"c": c},
        seq_dist=srule,
        base_dist=lambda n: rat(n),
        eps=eps,
        bounded=False,
        # residual 1 - (g_n + g_m)/d = eps_min/(n + m - eps_max) -> 0
        ratio_tends_to_one=True,
    )


def _thm51star(levels) -> MetricModel:
    levels = int(levels)
    if levels < 1:
        raise ModelError("thm51star needs levels >= 1")
    two = rat(2)
    n_pairs = 2 ** levels

    def row_dist(i, j):
        if i == j:
            return ZERO
        return ONE if i // 2 == j // 2 else two

    def row_label(i):
        g = i // 2
        return f"q{g}" if i % 2 == 0 else f"p{g}"

    return MetricModel(
        name="thm51star",
        params={"levels": levels},
        row_dist=row_dist,
        row_label=row_label,
        base_aliases_p1=False,
        max_points=2 * n_pairs,
    )


def _prop53(levels) -> MetricModel:
    levels = int(levels)
    if levels < 1:
        raise ModelError("prop53 needs levels >= 1")
    n_pairs = 2 ** levels

    def row_dist(i, j):
        return ZERO if i == j else ONE

    def row_label(i):
        if i == 0:
            return "0"
        g = (i - 1) // 2
        return f"p{g}" if (i - 1) % 2 == 0 else f"q{g}"

    return MetricModel(
        name="prop53",
        params={"levels": levels},
        row_dist=row_dist,
        row_label=row_label,
        base_aliases_p1=False,
        max_points=2 * n_pairs + 1,
    )


def _thm57(c, groups, levels) -> MetricModel:
    c = rat(c)
    groups = int(groups)
    levels = int(levels)
    if c <= ONE:
        raise ModelError("thm57 needs c > 1")
    if groups < 1 or levels < 1:
        raise ModelError("thm57 needs groups >= 1 and levels >= 1")
    two = rat(2)

    def group_of(i):
        return (i - 1) // levels

    def row_dist(i, j):
        if i == j:
            return ZERO
        if i == 0 or j == 0:
            return ONE
        return ONE if group_of(i) == group_of(j) else two

    def row_label(i):
        if i == 0:
            return "0"
        j = group_of(i) + 1
        k = (i - 1) % levels + 1
        return f"p{j}.{k}"

    return MetricModel(
        name="thm57",
        params={"c": c, "groups": groups, "levels": levels},
        row_dist=row_dist,
        row_label=row_label,
        base_aliases_p1=False,
        max_points=1 + groups * levels,
    )


_CATALOG = {
    "discrete": (_discrete, ()),
    "prop23": (_prop23, ()),
    "prop24": (_prop24, ()),
    "example33": (_example33, ()),
    "example35": (_example35, ()),
    "dmqr41": (_dmqr41, ()),
    "example44": (_example44, ()),
    "example48": (_example48, ()),
    "dmqr44": (_dmqr44, ("c",)),
    "thm51star": (_thm51star, ("levels",)),
    "prop53": (_prop53, ("levels",)),
    "thm57": (_thm57, ("c", "groups", "levels")),
}

CATALOG_NAMES = tuple(sorted(_CATALOG))

# Defaults chosen so every entry admits a 64-point truncation.
CATALOG_DEFAULTS = {
    "dmqr44": {"c": 1},
    "thm51star": {"levels": 5},
    "prop53": {"levels": 5},
    "thm57": {"c": 2, "groups": 8, "levels": 8},
}


def catalog(name: str, **params) -> MetricModel:
    """Build a catalog model by identifier, applying documented defaults."""
    if name not in _CATALOG:
        raise ModelError(f"unknown catalog model {name!r}; known: {', '.join(CATALOG_NAMES)}")
    builder, allowed = _CATALOG[name]
    unknown = set(params) - set(allowed)
    if unknown:
        raise ModelError(f"model {name!r} does not take parameters {sorted(unknown)}")
    merged = dict(CATALOG_DEFAULTS.get(name, {}))
    merged.update(params)
    return builder(**merged)


def integer_line() -> MetricModel:
    """Nonnegative integers with |i - j|; base at 0. Not a catalog entry."""
    return _seq_model(
        "integer_line",
        {},
        seq_dist=lambda n, m: rat(abs(n - m)),
        base_dist=lambda n: rat(n),
        bounded=False,
    )


def power_line(ratio=4) -> MetricModel:
    """Points ratio^i on the line, i >= 0, base at ratio^0. Not a catalog entry."""
    ratio = rat(ratio)
    if ratio <= ONE:
        raise ModelError("power_line needs ratio > 1")

    def srule(n, m):
        a = ratio ** (n - 1)
        b = ratio ** (m - 1)
        return a - b if a > b else b - a

    return _seq_model(
        "power_line",
        {"ratio": ratio},
        seq_dist=srule,
        bounded=False,
    )


# ---------------------------------------------------------------------------
# JSON interchange


def space_to_json(space: FiniteMetricSpace) -> dict:
    return {
        "name": space.name,
        "base": BASE_INDEX,
        "points": list(space.labels),
        "dist": [[format_rat(x) for x in row] for row in space.dist],
    }


def space_from_json(obj) -> FiniteMetricSpace:
    """Parse and validate a space. Rejects non-canonical rational strings."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "dist" not in obj:
        raise StructureError("space JSON needs a 'dist' field")
    if obj.get("base", BASE_INDEX) != BASE_INDEX:
        raise StructureError("the base point must be index 0")
    dist = obj["dist"]
    if not isinstance(dist, list):
        raise StructureError("'dist' must be a list of rows")
    try:
        rows = tuple(tuple(parse_rat(x) for x in row) for row in dist)
    except ValueError as exc:
        raise StructureError(str(exc)) from None
    labels = obj.get("points")
    if labels is None:
        labels = [f"x{i}" for i in range(len(rows))]
    if len(labels) != len(rows):
        raise StructureError("label count does not match matrix size")
    space = FiniteMetricSpace(rows, tuple(str(x) for x in labels), name=obj.get("name", ""))
    report = validate(space)
    if not report.passed:
        v = report.violations[0]
        raise ModelError(f"space JSON violates {v.axiom} at indices {v.indices}")
    return space
