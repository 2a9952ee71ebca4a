"""Partition demo on random trees: one owner everywhere, no gaps.

Generates random Sequence/Fallback trees with slab-predicate leaves and
checks, by sampling, that the leaf operating regions are pairwise disjoint,
cover the plane, and always name the leaf the delegation chain picks.  A
small hand-built tree is rendered as an ASCII ownership map so the tiling
is visible.
"""

import numpy as np

from ctbt import (
    BehaviorTree,
    Fallback,
    Leaf,
    LeafBehavior,
    Sequence,
    Status,
    check_partition,
    operating_owners,
    uniform_points,
)


def demo_tree() -> BehaviorTree:
    """Fal[Seq[left_half?, push], Seq[band?, hold], idle]."""
    def left(x):
        return Status.SUCCESS if x[0] < 0 else Status.FAILURE

    def band(x):
        if x[1] < -1:
            return Status.FAILURE
        return Status.SUCCESS if x[1] < 0.5 else Status.RUNNING

    def running(x):
        return Status.RUNNING

    def mk(i, status):
        return Leaf(i, LeafBehavior(lambda x: (0.0,), status))

    return BehaviorTree(
        Fallback(0, (
            Sequence(1, (mk(2, left), mk(3, running))),
            Sequence(4, (mk(5, band), mk(6, running))),
            mk(7, running),
        )), state_dim=2)


def ascii_map(bt, lo=-2.0, hi=2.0, cells=33):
    axis = np.linspace(lo, hi, cells)
    glyphs = {i: chr(ord("a") + k) for k, i in enumerate(bt.leaf_ids)}
    legend = ", ".join(f"{g} = leaf {i}" for i, g in glyphs.items())
    print(f"ownership map ({legend}):")
    for x1 in reversed(axis):
        row = ""
        for x0 in axis:
            owners = operating_owners(bt, (x0, x1))
            row += glyphs[owners[0]] if len(owners) == 1 else "!"
        print("  " + row)


def random_tree(seed, max_leaves=8) -> BehaviorTree:
    """Random shape, random slab predicates, depth-first ids."""
    rng = np.random.default_rng(seed)
    counter = [0]

    def slab():
        a = rng.normal(size=2)
        a = a / max(float(np.linalg.norm(a)), 1e-9)
        b1, b2 = sorted(rng.uniform(-2.0, 2.0, size=2).tolist())
        order = [Status.RUNNING, Status.SUCCESS, Status.FAILURE]
        rng.shuffle(order)

        def status(x, a=a, b1=b1, b2=b2, order=tuple(order)):
            v = float(a @ np.asarray(x, dtype=float))
            return order[0] if v < b1 else order[1] if v < b2 else order[2]

        return status

    def build(depth, budget):
        nid = counter[0]
        counter[0] += 1
        if depth >= 3 or budget[0] <= 1 or rng.random() < 0.3:
            budget[0] -= 1
            return Leaf(nid, LeafBehavior(lambda x: (0.0,), slab()))
        kids = []
        for _ in range(int(rng.integers(2, 4))):
            if budget[0] <= 0:
                break
            kids.append(build(depth + 1, budget))
        if not kids:
            budget[0] -= 1
            return Leaf(nid, LeafBehavior(lambda x: (0.0,), slab()))
        cls = Sequence if rng.random() < 0.5 else Fallback
        return cls(nid, tuple(kids))

    return BehaviorTree(build(0, [int(rng.integers(2, max_leaves + 1))]),
                        state_dim=2)


def main():
    ascii_map(demo_tree())
    print()

    clean = 0
    for seed in range(40):
        bt = random_tree(seed)
        pts = uniform_points([(-3, 3), (-3, 3)], 500, seed=900 + seed)
        report = check_partition(bt, pts)
        clean += report.passed
        if not report.passed:
            print(f"tree {seed}: violations! {report.to_dict()}")
    print(f"{clean}/40 random trees audited clean: every sampled state has "
          "exactly one owner and it is the active leaf")


if __name__ == "__main__":
    main()
