"""Behavior-tree nodes over continuous state and their pointwise evaluation.

A leaf pairs a state-feedback controller with a metadata map that labels
every state Running, Success or Failure.  Sequence and Fallback compose
children by delegation: a Sequence hands the state to its first child not
reporting Success (all Success: the last child answers), a Fallback to its
first child not reporting Failure.  Evaluating the root at a state x yields
the control that drives the plant at x plus the tree's status there.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .tree import OrderedTree, build_tree


class Status(enum.Enum):
    RUNNING = "R"
    SUCCESS = "S"
    FAILURE = "F"

    def __repr__(self):  # keeps report dumps short
        return self.name


class DimensionMismatch(ValueError):
    pass


class NonFiniteState(ValueError):
    pass


class NotComposite(ValueError):
    pass


class UnknownNodeKind(ValueError):
    pass


@dataclass(frozen=True)
class LeafBehavior:
    """Controller u(x) plus metadata r(x) for one leaf.

    Both must be pure functions of the state.  controller returns a control
    vector (any sequence); metadata returns a Status.
    """

    controller: Callable
    metadata: Callable
    label: str = ""


@dataclass(frozen=True)
class Leaf:
    node_id: int
    behavior: LeafBehavior


@dataclass(frozen=True)
class Sequence:
    node_id: int
    children: tuple


@dataclass(frozen=True)
class Fallback:
    node_id: int
    children: tuple


BtNode = Union[Leaf, Sequence, Fallback]


@dataclass(frozen=True)
class Plant:
    """Control-affine-or-not vector field xdot = field(x, u) with known dims."""

    state_dim: int
    control_dim: int
    field: Callable


def tick(node: BtNode, x) -> tuple:
    """Evaluate the subtree at state x, returning (control, Status)."""
    u, status, _leaf = _resolve(node, x)
    return u, status


def root_status(node: BtNode, x) -> Status:
    return _resolve(node, x)[1]


def active_leaf(node: BtNode, x) -> int:
    """Id of the leaf the delegation chain lands on at x."""
    return _resolve(node, x)[2]


def _resolve(node: BtNode, x):
    """Delegation: walk the tree, return (control, status, leaf id)."""
    if isinstance(node, Leaf):
        return node.behavior.controller(x), node.behavior.metadata(x), node.node_id
    if isinstance(node, Sequence):
        for child in node.children[:-1]:
            out = _resolve(child, x)
            if out[1] is not Status.SUCCESS:
                return out
        return _resolve(node.children[-1], x)
    if isinstance(node, Fallback):
        for child in node.children[:-1]:
            out = _resolve(child, x)
            if out[1] is not Status.FAILURE:
                return out
        return _resolve(node.children[-1], x)
    raise UnknownNodeKind(f"not a behavior-tree node: {node!r}")


def composed_status(bt: "BehaviorTree", i: int, x) -> Status:
    """Status of composite i at x computed from the closed-form region algebra.

    Independent of the delegation in tick: children are all evaluated and the
    Sequence/Fallback region formulas are applied literally (Success of a
    Sequence is the intersection of child Successes; its Running/Failure
    regions are unions of child regions gated by all earlier Successes; dual
    for Fallback).  Exactly one of the three must hold.
    """
    node = bt.nodes[i]
    if isinstance(node, Leaf):
        raise NotComposite(f"node {i} is a leaf")
    return _composed(node, x)


def _composed(node: BtNode, x) -> Status:
    if isinstance(node, Leaf):
        return node.behavior.metadata(x)
    child = [_composed(c, x) for c in node.children]
    if isinstance(node, Sequence):
        gate, flow = Status.SUCCESS, Status.FAILURE
    elif isinstance(node, Fallback):
        gate, flow = Status.FAILURE, Status.SUCCESS
    else:
        raise UnknownNodeKind(f"not a behavior-tree node: {node!r}")
    # membership in each of the three composed regions, evaluated separately
    in_gate = all(s is gate for s in child)
    in_flow = any(
        s is flow and all(t is gate for t in child[:j]) for j, s in enumerate(child)
    )
    in_run = any(
        s is Status.RUNNING and all(t is gate for t in child[:j])
        for j, s in enumerate(child)
    )
    picked = [
        st
        for st, hit in ((gate, in_gate), (flow, in_flow), (Status.RUNNING, in_run))
        if hit
    ]
    if len(picked) != 1:
        raise AssertionError(
            f"composed regions of node {node.node_id} do not partition at {x!r}: {picked}"
        )
    return picked[0]


class BehaviorTree:
    """A validated behavior tree bound to its ordered-tree skeleton.

    Node ids must be dense 0..N-1 with the root id 0 (builders normally
    assign them depth-first).  Derived structure (ordered tree, node index,
    kind map, leaf list) is computed once; instances are treated as
    immutable.
    """

    def __init__(self, root: BtNode, state_dim: int | None = None):
        nodes: dict = {}
        edges = []

        def collect(node: BtNode):
            if node.node_id in nodes:
                raise ValueError(f"node id {node.node_id} used twice")
            nodes[node.node_id] = node
            if isinstance(node, (Sequence, Fallback)):
                if not node.children:
                    raise ValueError(f"composite {node.node_id} has no children")
                edges.append((node.node_id, [c.node_id for c in node.children]))
                for c in node.children:
                    collect(c)
            elif not isinstance(node, Leaf):
                raise UnknownNodeKind(f"not a behavior-tree node: {node!r}")

        collect(root)
        if root.node_id != 0:
            raise ValueError("root node must have id 0")
        if sorted(nodes) != list(range(len(nodes))):
            raise ValueError("node ids must be dense 0..N-1")
        self.root = root
        self.state_dim = state_dim
        self.tree: OrderedTree = build_tree(edges)
        self.nodes = tuple(nodes[i] for i in range(len(nodes)))
        self.kinds = tuple(_kind(n) for n in self.nodes)
        self.leaf_ids = tuple(i for i, k in enumerate(self.kinds) if k == "leaf")
        self._pathways = None  # filled lazily by regions.pathways

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.state_dim is not None and x.shape != (self.state_dim,):
            raise DimensionMismatch(
                f"state has shape {x.shape}, expected ({self.state_dim},)"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"state is not finite: {x!r}")
        return x

    def tick(self, x):
        return tick(self.root, self.check_state(x))

    def root_status(self, x) -> Status:
        return root_status(self.root, self.check_state(x))

    def active_leaf(self, x) -> int:
        return active_leaf(self.root, self.check_state(x))

    def resolve(self, x):
        """(control, root status, active leaf id) in one walk, no revalidation."""
        return _resolve(self.root, x)

    def status(self, i: int, x) -> Status:
        """Status of the subtree rooted at i, by delegation semantics."""
        return root_status(self.nodes[i], x)

    def behavior(self, i: int) -> LeafBehavior:
        node = self.nodes[i]
        if not isinstance(node, Leaf):
            raise ValueError(f"node {i} is not a leaf")
        return node.behavior


def _kind(node: BtNode) -> str:
    if isinstance(node, Leaf):
        return "leaf"
    if isinstance(node, Sequence):
        return "seq"
    if isinstance(node, Fallback):
        return "fal"
    raise UnknownNodeKind(f"not a behavior-tree node: {node!r}")
