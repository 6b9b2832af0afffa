"""Finite pieces of geodesic trees and the embedding route for them.

A weighted tree induces a path-length metric on its vertices. This module
builds those metrics, decides the four-point condition that characterises
them, and computes the structural data the embedding route needs: metric
segments, branching points, and aligned sequences.

The pipeline at the bottom takes a tree-like space and produces a spike
family together with a verification report. It routes through one of two
constructions:

* ``hub-bumps``: some point disconnects the space into at least
  ``hub_threshold`` pieces. Each piece contributes a spike at its closest
  point, all sharing the hub as partner.
* ``aligned-chain``: otherwise the space is path-like. A greedy walk from
  the base builds an aligned sequence; every other chain point gets a spike,
  partnered with its nearest chain neighbour.

Either way the selected (point, partner) pairs must pass the bump-family
hypothesis check before anything is built; a failure is reported as a
structured refusal naming the check, never as a silently degraded family.
"""

from dataclasses import dataclass
from typing import Optional

from .rational import ZERO, format_rat, parse_rat, rat
from .metric import (
    CheckResult,
    FiniteMetricSpace,
    LipcheckError,
    PreconditionError,
    StructureError,
    make_space,
)
from .embeddings import (
    BATTERY_SEED,
    BuiltFamily,
    Expectation,
    FamilySpec,
    VerificationReport,
    _exact_witness_pairs,
    build_family,
    check_prop31,
    standard_battery,
    verify_isometry,
)

# Minimum number of components a single cut point must produce before the
# pipeline takes the hub route. The idealised statement asks for infinitely
# many pieces; at finite scale this threshold stands in for "many" and is
# reported in the result so callers can see which regime was used.
HUB_COMPONENT_THRESHOLD = 3

# Exhaustive aligned-sequence search is exponential in the worst case, so
# above this many points find_aligned switches to greedy extension.
ALIGNED_EXHAUSTIVE_LIMIT = 12


class TreeRefusal(LipcheckError):
    """Raised when the tree pipeline declines to build a family.

    Carries the failed CheckResult so callers can see exactly which
    hypothesis broke and at which points.
    """

    def __init__(self, check: CheckResult):
        super().__init__(
            f"tree pipeline refused: check {check.name!r} clause "
            f"{check.clause!r} failed at {check.witness_indices}"
        )
        self.check = check


# ---------------------------------------------------------------------------
# Weighted trees


@dataclass(frozen=True)
class WeightedTree:
    """A tree on vertices 0..n-1 with positive rational edge lengths.

    Instances are expected to come from :func:`weighted_tree`, which
    validates connectivity and acyclicity; the dataclass itself stores
    already-checked data.
    """

    n_vertices: int
    edges: tuple  # ((u, v, length), ...)
    base: int = 0


def weighted_tree(n_vertices: int, edges, base: int = 0) -> WeightedTree:
    """Validate and build a WeightedTree.

    Requires exactly n-1 edges forming a connected acyclic graph, with
    strictly positive rational lengths. Edge endpoints may come in either
    order; duplicates (in either orientation) are rejected.
    """
    if n_vertices < 1:
        raise StructureError("a tree needs at least one vertex")
    if not 0 <= base < n_vertices:
        raise StructureError(f"base vertex {base} out of range")
    norm_edges = []
    seen = set()
    for entry in edges:
        u, v, w = entry
        u, v = int(u), int(v)
        if not (0 <= u < n_vertices and 0 <= v < n_vertices):
            raise StructureError(f"edge ({u}, {v}) out of range")
        if u == v:
            raise StructureError(f"self-loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise StructureError(f"duplicate edge between {key[0]} and {key[1]}")
        seen.add(key)
        length = rat(w)
        if length <= ZERO:
            raise StructureError(
                f"edge ({u}, {v}) has non-positive length {format_rat(length)}"
            )
        norm_edges.append((u, v, length))
    if len(norm_edges) != n_vertices - 1:
        raise StructureError(
            f"a tree on {n_vertices} vertices needs {n_vertices - 1} edges, "
            f"got {len(norm_edges)}"
        )
    # n-1 edges and connected together force acyclicity.
    reached = {0}
    frontier = [0]
    adj = _adjacency(n_vertices, norm_edges)
    while frontier:
        x = frontier.pop()
        for y, _ in adj[x]:
            if y not in reached:
                reached.add(y)
                frontier.append(y)
    if len(reached) != n_vertices:
        missing = min(set(range(n_vertices)) - reached)
        raise StructureError(f"tree is disconnected: vertex {missing} unreachable")
    return WeightedTree(n_vertices, tuple(norm_edges), base)


def _adjacency(n_vertices: int, edges):
    adj = [[] for _ in range(n_vertices)]
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    return adj


def tree_to_json(tree: WeightedTree) -> dict:
    return {
        "vertices": tree.n_vertices,
        "edges": [[u, v, format_rat(w)] for u, v, w in tree.edges],
        "base": tree.base,
    }


def tree_from_json(obj: dict) -> WeightedTree:
    try:
        n = int(obj["vertices"])
        raw = obj["edges"]
        base = int(obj.get("base", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise StructureError(f"malformed tree JSON: {exc}") from None
    edges = [(int(u), int(v), parse_rat(w)) for u, v, w in raw]
    return weighted_tree(n, edges, base)


def _vertex_order(tree: WeightedTree):
    """Canonical row order for the induced metric: base first, the rest
    ascending by vertex id."""
    return [tree.base] + [v for v in range(tree.n_vertices) if v != tree.base]


def tree_metric(tree: WeightedTree) -> FiniteMetricSpace:
    """Path-length metric of a weighted tree as a FiniteMetricSpace.

    Row 0 is the tree's base vertex; the remaining vertices follow in
    ascending id order. Labels keep the original vertex ids.
    """
    n = tree.n_vertices
    adj = _adjacency(n, tree.edges)
    order = _vertex_order(tree)
    pos = {v: i for i, v in enumerate(order)}

    # One traversal per vertex; the tree has a unique path between any two
    # vertices, so accumulated lengths are the metric.
    dist = [[ZERO] * n for _ in range(n)]
    for src in range(n):
        acc = {src: ZERO}
        stack = [src]
        while stack:
            x = stack.pop()
            for y, w in adj[x]:
                if y not in acc:
                    acc[y] = acc[x] + w
                    stack.append(y)
        for v, d in acc.items():
            dist[pos[src]][pos[v]] = d

    labels = [f"v{v}" for v in order]
    return make_space(dist, labels=labels, name=f"tree{n}")


def branching_points(tree: WeightedTree):
    """Vertices of degree at least 3, ascending."""
    degree = [0] * tree.n_vertices
    for u, v, _ in tree.edges:
        degree[u] += 1
        degree[v] += 1
    return tuple(v for v in range(tree.n_vertices) if degree[v] >= 3)


# ---------------------------------------------------------------------------
# Metric structure


def four_point_check(space: FiniteMetricSpace) -> CheckResult:
    """Decide the four-point condition.

    For every quadruple, of the three ways to split it into two pairs the
    two largest pair-distance sums must agree. Tree metrics always satisfy
    this; a cycle breaks it. Fewer than four points pass vacuously. The
    witness is the lexicographically first violating quadruple with all
    three pairing sums.
    """
    n = space.n_points
    for p in range(n):
        for q in range(p + 1, n):
            for r in range(q + 1, n):
                for s in range(r + 1, n):
                    s1 = space.d(p, q) + space.d(r, s)
                    s2 = space.d(p, r) + space.d(q, s)
                    s3 = space.d(p, s) + space.d(q, r)
                    top = max(s1, s2, s3)
                    if (s1, s2, s3).count(top) < 2:
                        return CheckResult(
                            False, "four-point", "quadruple",
                            (p, q, r, s), (s1, s2, s3),
                        )
    return CheckResult(True, "four-point")


def metric_segment(space: FiniteMetricSpace, p: int, q: int):
    """All points lying metrically between p and q, endpoints included."""
    n = space.n_points
    for r in (p, q):
        if not 0 <= r < n:
            raise PreconditionError(f"row {r} out of range for segment")
    dpq = space.d(p, q)
    return tuple(
        z for z in range(n) if space.d(p, z) + space.d(z, q) == dpq
    )


def _aligned_triple(space, a, b, c) -> bool:
    return space.d(a, c) == space.d(a, b) + space.d(b, c)


def find_aligned(space: FiniteMetricSpace, k: int,
                 exhaustive_limit: int = ALIGNED_EXHAUSTIVE_LIMIT):
    """Search for k distinct points in which every consecutive triple is
    aligned. Returns the first sequence found or None.

    Below ``exhaustive_limit`` points the search is a full backtracking
    enumeration in index order, so the answer is the lexicographically
    first aligned sequence. Above it, each start pair is only extended
    greedily by the smallest-index continuation, which can miss sequences
    that exist; the limit is a parameter precisely so callers can push it
    up when they need certainty on a larger space.
    """
    if k < 3:
        raise PreconditionError("an aligned sequence needs at least 3 points")
    n = space.n_points
    if k > n:
        return None

    exhaustive = n <= exhaustive_limit

    def extend(seq, used):
        if len(seq) == k:
            return tuple(seq)
        a, b = seq[-2], seq[-1]
        for c in range(n):
            if c in used or not _aligned_triple(space, a, b, c):
                continue
            seq.append(c)
            used.add(c)
            if exhaustive:
                out = extend(seq, used)
                if out is not None:
                    return out
                seq.pop()
                used.remove(c)
            else:
                # Greedy mode: commit to the smallest continuation.
                return extend(seq, used)
        return None

    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            out = extend([a, b], {a, b})
            if out is not None:
                return out
    return None


def _split_components(space: FiniteMetricSpace, rows, cut: int):
    """Partition ``rows`` by the relation "the cut point does not lie
    strictly between": in a tree metric these are the pieces left after
    removing the cut point.

    Components come back sorted internally and ordered by smallest member.
    """
    rows = [r for r in rows if r != cut]
    parent = {r: r for r in rows}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, a in enumerate(rows):
        for b in rows[i + 1:]:
            if space.d(a, cut) + space.d(cut, b) != space.d(a, b):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    groups = {}
    for r in rows:
        groups.setdefault(find(r), []).append(r)
    return tuple(tuple(sorted(g)) for _, g in sorted(groups.items()))


def _best_hub(space: FiniteMetricSpace):
    """The row whose removal leaves the most components (tie: lowest row)."""
    n = space.n_points
    best_row, best_count = 0, 0
    for p in range(n):
        count = len(_split_components(space, range(n), p))
        if count > best_count:
            best_row, best_count = p, count
    return best_row, best_count


def _greedy_chain(space: FiniteMetricSpace):
    """Walk from the base, always descending into the largest remaining
    component and stepping to its closest point.

    On a tree metric each step extends an aligned sequence: everything in
    the chosen component lies behind the current point, so the previous
    point, the current one and the next are collinear.
    """
    n = space.n_points
    chain = [0]
    region = set(range(1, n))
    current = 0
    while region:
        comps = _split_components(space, sorted(region), current)
        # Largest component first; ties go to the one with the lowest row.
        comp = sorted(comps, key=lambda c: (-len(c), c[0]))[0]
        nxt = min(comp, key=lambda r: (space.d(current, r), r))
        chain.append(nxt)
        region = set(comp) - {nxt}
        current = nxt
    return chain


def _chain_pairs(space: FiniteMetricSpace, chain):
    """The bump anchors read off an aligned chain: every other chain point,
    each partnered with its nearest chain neighbour (ties toward the start).

    The chain begins at the base point, which cannot anchor a member of a
    vanishing-at-base family, so position 0 is always skipped; the family
    in the idealised statement is infinite and loses nothing by it.
    """
    points, partners = [], []
    for pos in range(2, len(chain), 2):
        p = chain[pos]
        if p == 0:
            continue
        left = chain[pos - 1]
        if pos + 1 < len(chain):
            right = chain[pos + 1]
            if space.d(p, right) < space.d(p, left):
                partners.append(right)
            else:
                partners.append(left)
        else:
            partners.append(left)
        points.append(p)
    return tuple(points), tuple(partners)


# ---------------------------------------------------------------------------
# Pipeline


@dataclass(frozen=True)
class TreeFamilyResult:
    """Outcome of the tree pipeline: which route it took, the structural
    data behind the anchor choice, and the verified family."""

    case: str  # "hub-bumps" | "aligned-chain"
    hub: Optional[int]
    chain: tuple
    points: tuple
    partners: tuple
    threshold: int
    check: CheckResult
    family: BuiltFamily
    report: VerificationReport

    def __iter__(self):
        yield self.family
        yield self.report


def tree_c0_pipeline(space: FiniteMetricSpace, tree: Optional[WeightedTree] = None,
                     vertex_rows: Optional[dict] = None,
                     hub_threshold: int = HUB_COMPONENT_THRESHOLD) -> TreeFamilyResult:
    """Build and verify a spike family on a tree-like space.

    Preconditions, each refused with the failing check attached:

    * the space satisfies the four-point condition;
    * when the generating ``tree`` is supplied, every branching point is
      present in the space (rows are assumed to follow tree_metric's
      canonical order unless ``vertex_rows`` maps vertex ids to rows);
    * the selected anchors pass the bump-family hypothesis check
      (partner at minimal positive distance, pairwise separation).

    Route selection: if some point cuts the space into at least
    ``hub_threshold`` pieces the hub route runs, otherwise the chain route.
    The verification report covers the standard coefficient battery under
    the sup-norm target with exact attainment expected.
    """
    fp = four_point_check(space)
    if not fp.ok:
        raise TreeRefusal(fp)

    if tree is not None:
        if vertex_rows is None:
            order = _vertex_order(tree)
            vertex_rows = {v: i for i, v in enumerate(order) if i < space.n_points}
        for b in branching_points(tree):
            if b not in vertex_rows:
                raise TreeRefusal(CheckResult(
                    False, "tree-pipeline", "branching-points", (b,), ()
                ))

    n = space.n_points
    hub, count = _best_hub(space)
    if count >= hub_threshold:
        case = "hub-bumps"
        chain = ()
        points, partners = [], []
        for comp in _split_components(space, range(n), hub):
            closest = min(comp, key=lambda r: (space.d(hub, r), r))
            if closest == 0:
                # The base cannot anchor a member; the other components
                # still make up the family.
                continue
            points.append(closest)
            partners.append(hub)
        points, partners = tuple(points), tuple(partners)
    else:
        case = "aligned-chain"
        chain = tuple(_greedy_chain(space))
        for i in range(len(chain) - 2):
            a, b, c = chain[i], chain[i + 1], chain[i + 2]
            if not _aligned_triple(space, a, b, c):
                raise TreeRefusal(CheckResult(
                    False, "tree-pipeline", "aligned-chain", (a, b, c),
                    (space.d(a, c), space.d(a, b) + space.d(b, c)),
                ))
        points, partners = _chain_pairs(space, chain)

    if not points:
        raise TreeRefusal(CheckResult(
            False, "tree-pipeline", "no-usable-members", (case,), ()
        ))

    check = check_prop31(space, points, partners)
    if not check.ok:
        raise TreeRefusal(check)

    spec = FamilySpec("prop31", space, anchors=(points, partners))
    fns = build_family(spec, override=True)  # hypothesis check already ran
    expectation = Expectation(
        "exact",
        witness_pair=_exact_witness_pairs(tuple(zip(points, partners))),
    )
    built = BuiltFamily(spec, fns, "sup-norm", expectation,
                        members=tuple(zip(points, partners)), checker=check)
    battery = standard_battery(built.size)
    report = verify_isometry(fns, "sup-norm", battery, expectation,
                             seed=BATTERY_SEED)
    return TreeFamilyResult(
        case=case,
        hub=hub if case == "hub-bumps" else None,
        chain=chain,
        points=points,
        partners=partners,
        threshold=hub_threshold,
        check=check,
        family=built,
        report=report,
    )
