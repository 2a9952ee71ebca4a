"""Operating-region calculus: where in state space each node executes.

The influence region of node i collects the preconditions imposed by its
left uncles: every left uncle under a Sequence parent must report Success,
every left uncle under a Fallback parent must report Failure.  The success
(failure) pathway is the set of nodes whose Success (Failure) propagates to
the root because no right uncle under a Sequence (Fallback) parent can take
over.  The operating region of i is its influence region intersected with
the statuses that keep execution at i:

    i on both pathways   -> influence region alone
    success pathway only -> influence  &  (Running or Success at i)
    failure pathway only -> influence  &  (Running or Failure at i)
    neither              -> influence  &  Running at i

Sibling operating regions partition the parent's, so leaf operating regions
partition the whole state space; the leaf owning x is exactly the leaf tick
delegates to at x.  Everything here is evaluated through the closed-form
status algebra (core._composed), never through tick's delegation, so the two
routes stay independently testable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence as Seq

import numpy as np

from .core import BehaviorTree, Leaf, Status, UnknownNodeKind
from .tree import OrderedTree


class EmptySampler(ValueError):
    pass


@dataclass(frozen=True)
class PathwaySets:
    success: frozenset
    failure: frozenset


def pathways(tree: OrderedTree, node_kinds: Mapping) -> PathwaySets:
    """Success/failure pathway node sets for a tree with tagged composites.

    node_kinds maps every node id to "seq", "fal" or "leaf".
    """
    for i in range(tree.node_count):
        if node_kinds[i] not in ("seq", "fal", "leaf"):
            raise UnknownNodeKind(f"node {i} has kind {node_kinds[i]!r}")
    success, failure = set(), set()
    for i in range(tree.node_count):
        uncles = tree.right_uncles(i)
        if not any(node_kinds[tree.parent_of(j)] == "seq" for j in uncles):
            success.add(i)
        if not any(node_kinds[tree.parent_of(j)] == "fal" for j in uncles):
            failure.add(i)
    return PathwaySets(success=frozenset(success), failure=frozenset(failure))


def pathway_sets(bt: BehaviorTree) -> PathwaySets:
    """pathways() over a BehaviorTree, cached on the instance."""
    if bt._pathways is None:
        bt._pathways = pathways(bt.tree, bt.kinds)
    return bt._pathways


def _status_table(bt: BehaviorTree, x) -> list:
    """Status of every node at x via the composed-region algebra (one pass)."""
    table = [None] * len(bt.nodes)

    def fill(node):
        if isinstance(node, Leaf):
            table[node.node_id] = node.behavior.metadata(x)
        else:
            for c in node.children:
                fill(c)
            table[node.node_id] = _composed_from(node, table)

    fill(bt.root)
    return table


def _composed_from(node, table) -> Status:
    """Composite status from already-computed child statuses (region algebra).

    Evaluates the three composed-region membership predicates literally, the
    same way core._composed does, rather than short-circuiting like tick.
    """
    child = [table[c.node_id] for c in node.children]
    gate = Status.SUCCESS if node.__class__.__name__ == "Sequence" else Status.FAILURE
    flow = Status.FAILURE if gate is Status.SUCCESS else Status.SUCCESS
    if all(s is gate for s in child):
        return gate
    if any(s is flow and all(t is gate for t in child[:j]) for j, s in enumerate(child)):
        return flow
    return Status.RUNNING


def in_influence_region(bt: BehaviorTree, i: int, x, _table=None) -> bool:
    """Is x inside node i's influence region?

    Every left uncle under a Sequence parent must be in Success at x, every
    left uncle under a Fallback parent in Failure.
    """
    table = _status_table(bt, x) if _table is None else _table
    for j in bt.tree.left_uncles(i):
        want = Status.SUCCESS if bt.kinds[bt.tree.parent_of(j)] == "seq" else Status.FAILURE
        if table[j] is not want:
            return False
    return True


def in_operating_region(bt: BehaviorTree, i: int, x, pw: PathwaySets | None = None,
                        _table=None) -> bool:
    """Is x inside node i's operating region (the case split in the module doc)?"""
    pw = pw or pathway_sets(bt)
    table = _status_table(bt, x) if _table is None else _table
    if not in_influence_region(bt, i, x, _table=table):
        return False
    on_s, on_f = i in pw.success, i in pw.failure
    if on_s and on_f:
        return True
    status = table[i]
    if on_s:
        return status in (Status.RUNNING, Status.SUCCESS)
    if on_f:
        return status in (Status.RUNNING, Status.FAILURE)
    return status is Status.RUNNING


def operating_owners(bt: BehaviorTree, x, pw: PathwaySets | None = None) -> list:
    """All leaves whose operating region contains x (should be exactly one)."""
    pw = pw or pathway_sets(bt)
    table = _status_table(bt, x)
    return [
        i for i in bt.leaf_ids if in_operating_region(bt, i, x, pw, _table=table)
    ]


@dataclass(frozen=True)
class SubsystemLeaves:
    """Leaves witnessed to own at least one sample, and the rest.

    Sampling can witness non-emptiness but never certify emptiness, so
    unwitnessed leaves are reported as possibly empty rather than dropped.
    """

    witnessed: frozenset
    possibly_empty: frozenset
    samples_tested: int


def subsystem_leaves(bt: BehaviorTree, points) -> SubsystemLeaves:
    points = _as_points(points)
    pw = pathway_sets(bt)
    seen = set()
    remaining = set(bt.leaf_ids)
    for x in points:
        if not remaining:
            break
        table = _status_table(bt, x)
        for i in tuple(remaining):
            if in_operating_region(bt, i, x, pw, _table=table):
                seen.add(i)
                remaining.discard(i)
    return SubsystemLeaves(
        witnessed=frozenset(seen),
        possibly_empty=frozenset(remaining),
        samples_tested=len(points),
    )


@dataclass
class RegionReport:
    """Partition audit over a sample batch.

    disjointness_violations: (x, owner ids) where two or more leaf operating
    regions claimed x.  coverage_violations: x owned by no leaf.
    equivalence_violations: (x, active leaf, region owner) where the unique
    owner disagrees with tick's delegation.
    """

    samples_tested: int = 0
    disjointness_violations: list = field(default_factory=list)
    coverage_violations: list = field(default_factory=list)
    equivalence_violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (
            self.disjointness_violations
            or self.coverage_violations
            or self.equivalence_violations
        )

    def to_dict(self) -> dict:
        return {
            "samples_tested": self.samples_tested,
            "passed": self.passed,
            "disjointness_violations": [
                {"x": list(x), "owners": list(owners)}
                for x, owners in self.disjointness_violations
            ],
            "coverage_violations": [{"x": list(x)} for x in self.coverage_violations],
            "equivalence_violations": [
                {"x": list(x), "active_leaf": a, "region_owner": o}
                for x, a, o in self.equivalence_violations
            ],
        }


def check_partition(bt: BehaviorTree, points) -> RegionReport:
    """Audit disjointness, coverage, and agreement with tick over samples.

    The region route (status algebra + uncles + pathways) and the delegation
    route (tick) are computed independently per point.  Violations are sorted
    canonically so reports are reproducible regardless of evaluation order.
    """
    points = _as_points(points)
    pw = pathway_sets(bt)
    report = RegionReport(samples_tested=len(points))
    for x in points:
        owners = operating_owners(bt, x, pw)
        active = bt.active_leaf(x)
        if len(owners) > 1:
            report.disjointness_violations.append((tuple(x), tuple(owners)))
        elif not owners:
            report.coverage_violations.append(tuple(x))
        elif owners[0] != active:
            report.equivalence_violations.append((tuple(x), active, owners[0]))
    report.disjointness_violations.sort()
    report.coverage_violations.sort()
    report.equivalence_violations.sort()
    return report


def region_table(bt: BehaviorTree, points) -> list:
    """Rows (x..., owner leaf id, root status letter) for a CSV dump."""
    points = _as_points(points)
    pw = pathway_sets(bt)
    rows = []
    for x in points:
        owners = operating_owners(bt, x, pw)
        owner = owners[0] if len(owners) == 1 else -1
        rows.append((*x, owner, bt.root_status(x).value))
    return rows


def region_csv(bt: BehaviorTree, points) -> str:
    points = _as_points(points)
    n = points.shape[1] if len(points) else 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{k}" for k in range(n)] + ["owner_leaf_id", "root_status"])
    for row in region_table(bt, points):
        w.writerow([repr(float(v)) for v in row[:-2]] + [row[-2], row[-1]])
    return buf.getvalue()


def uniform_points(box: Seq, count: int, seed: int) -> np.ndarray:
    """count points uniform over the axis-aligned box [(lo, hi), ...]."""
    if count <= 0:
        raise EmptySampler("sample count must be positive")
    box = [(float(lo), float(hi)) for lo, hi in box]
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + (hi - lo) * rng.random((count, len(box)))


def grid_points(box: Seq, per_axis: int) -> np.ndarray:
    """Regular grid with per_axis points on each axis, row-major order."""
    if per_axis <= 0:
        raise EmptySampler("grid resolution must be positive")
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.size == 0:
        raise EmptySampler("no sample points supplied")
    return pts
