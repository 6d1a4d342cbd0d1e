"""Fusion chains: decreasing conditions with frozen levels.

A chain records conditions T_0, T_1, ... with strictly increasing
level markers l_0 < l_1 < ...; each step may only thin the tree above
the previous marker, never below it.  Pushing step n+1 also discharges
a bookkeeping obligation: the node of index n, when it is still in the
tree, must have a strict extension with polynomially many successors
surviving into the new condition.  Running through every node index
this way is what makes the limit tree branch as richly as the ambient
one, level by level.

Every hypothesis is verified at push time and failures carry the name
of the violated clause, so chains can be driven by search code and
audited afterwards.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from .conditions import TreeCondition, condition_from_json
from .errors import (
    ConditionError,
    FusionError,
    ProfileError,
    TreeIndexError,
)
from .hyperint import HyperInt, hyper
from .mastertree import NodePath, format_path, indexer, parse_path

__all__ = ["FusionChain", "chain_from_json"]


def _full_down(cond: TreeCondition, node: NodePath, depth: int) -> bool:
    """Whether cond keeps every ambient node above `node` for `depth`
    more levels.  Purely structural: no level enumeration."""
    if depth == 0:
        return True
    if cond.tail_covering(node) is not None:
        return True
    kids = cond.children[node]
    k = cond.node_index(node)
    if k is None:
        return False
    if hyper(len(kids)).compare(cond.profile.N(k)) != 0:
        return False
    return all(_full_down(cond, node + (c,), depth - 1) for c in kids)


def _level_sets_equal(a: TreeCondition, b: TreeCondition, level: int) -> bool:
    """Whether a and b have the same length-`level` nodes.

    Walks the two explicit structures in lockstep; a tail on one side
    requires the other side to be full for the remaining depth.  This
    stays exact on levels far too wide to enumerate.
    """

    def walk(node: NodePath, depth: int) -> bool:
        if depth == 0:
            return True
        a_tail = a.tail_covering(node) is not None
        b_tail = b.tail_covering(node) is not None
        if a_tail and b_tail:
            return True
        if a_tail:
            return _full_down(b, node, depth)
        if b_tail:
            return _full_down(a, node, depth)
        if a.children[node] != b.children[node]:
            return False
        return all(walk(node + (c,), depth - 1) for c in a.children[node])

    return walk((), level)


class FusionChain:
    """Single-owner builder for a decreasing, level-frozen chain.

    The constructor seats the initial condition and marker; push_step
    is the only mutator.  Witnesses are stored as (node, successor
    count) pairs, or None for steps whose obligation node had already
    left the tree.
    """

    __slots__ = ("conditions", "levels", "witnesses")

    def __init__(self, first: TreeCondition, level: int = 0):
        if not isinstance(first, TreeCondition):
            raise FusionError("inclusion", "chains are built from conditions")
        if not isinstance(level, int) or isinstance(level, bool) or level < 0:
            raise FusionError(
                "level_monotone", f"level must be a natural: {level!r}"
            )
        self.conditions: List[TreeCondition] = [first]
        self.levels: List[int] = [level]
        self.witnesses: List[Optional[Tuple[NodePath, HyperInt]]] = []

    @property
    def profile(self):
        return self.conditions[0].profile

    @property
    def n_cur(self) -> int:
        """Number of completed steps."""
        return len(self.conditions) - 1

    @property
    def last_condition(self) -> TreeCondition:
        return self.conditions[-1]

    @property
    def last_level(self) -> int:
        return self.levels[-1]

    def __eq__(self, other):
        if not isinstance(other, FusionChain):
            return NotImplemented
        if self.conditions != other.conditions or self.levels != other.levels:
            return False
        if len(self.witnesses) != len(other.witnesses):
            return False
        for mine, theirs in zip(self.witnesses, other.witnesses):
            if (mine is None) != (theirs is None):
                return False
            if mine is not None and (
                mine[0] != theirs[0] or mine[1].compare(theirs[1]) != 0
            ):
                return False
        return True

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __repr__(self):
        return (
            f"FusionChain({self.profile.profile_id}, steps={self.n_cur}, "
            f"levels={self.levels})"
        )

    # -- the mutator ---------------------------------------------------------

    def push_step(
        self,
        t_next: TreeCondition,
        l_next: int,
        witness: Optional[NodePath] = None,
    ) -> "FusionChain":
        """Append one step after verifying every chain hypothesis.

        Raises FusionError naming the first violated clause:
        level_monotone, inclusion, level_freeze, obligation_unresolvable,
        witness_missing, witness_extends, witness_level, witness_member,
        or witness_count.
        """
        n = self.n_cur
        t_last, l_last = self.last_condition, self.last_level
        if (
            not isinstance(l_next, int)
            or isinstance(l_next, bool)
            or l_next <= l_last
        ):
            raise FusionError(
                "level_monotone",
                f"marker {l_next!r} does not exceed the previous {l_last}",
            )
        try:
            included = t_next.is_stronger(t_last)
        except ConditionError as exc:
            raise FusionError("inclusion", str(exc)) from exc
        if not included:
            raise FusionError(
                "inclusion", f"step {n + 1} does not refine step {n}"
            )
        if not _level_sets_equal(t_next, t_last, l_last):
            raise FusionError(
                "level_freeze",
                f"step {n + 1} changes the tree at frozen level {l_last}",
            )
        try:
            s_n = indexer(self.profile).path_of(n)
        except (TreeIndexError, ProfileError) as exc:
            raise FusionError(
                "obligation_unresolvable",
                f"node of index {n} is beyond the ambient caps: {exc}",
            ) from exc
        record: Optional[Tuple[NodePath, HyperInt]] = None
        if t_last.contains_node(s_n):
            if witness is None:
                raise FusionError(
                    "witness_missing",
                    f"{format_path(s_n)} is in the tree at step {n}, "
                    "a witness is required",
                )
        if witness is not None:
            t = tuple(witness)
            if len(t) <= len(s_n) or t[: len(s_n)] != s_n:
                raise FusionError(
                    "witness_extends",
                    f"witness {format_path(t)} does not strictly extend "
                    f"{format_path(s_n)}",
                )
            if len(t) >= l_next:
                raise FusionError(
                    "witness_level",
                    f"witness {format_path(t)} is not below marker {l_next}",
                )
            if not t_next.contains_node(t):
                raise FusionError(
                    "witness_member",
                    f"witness {format_path(t)} is not in the new condition",
                )
            k = t_next.node_index(t)
            if k is None:
                raise FusionError(
                    "witness_count",
                    f"index of witness {format_path(t)} is beyond the "
                    "ambient caps, its successor count cannot be certified",
                )
            count = t_next.child_count(t)
            needed = self.profile.P(k).pow_of_pow2(n)
            if count.compare(needed) < 0:
                raise FusionError(
                    "witness_count",
                    f"witness {format_path(t)} keeps {count.brief()} "
                    f"successors, fewer than {needed.brief()}",
                )
            record = (t, count)
        self.conditions.append(t_next)
        self.levels.append(l_next)
        self.witnesses.append(record)
        return self

    # -- the limit ------------------------------------------------------------

    def intersect(self) -> TreeCondition:
        """The chain's limit: its final condition.

        The chain decreases, so the intersection of its members is the
        last one; freezing guarantees every earlier level survives in
        it unchanged.  Before returning, re-verify that each step's
        witness is still present with its successor count intact.
        """
        final = self.last_condition
        for n, record in enumerate(self.witnesses):
            if record is None:
                continue
            t, count = record
            if not final.contains_node(t):
                raise FusionError(
                    "intersect_witness",
                    f"witness {format_path(t)} of step {n} left the "
                    "final condition; this is a bug",
                )
            kept = final.child_count(t)
            if kept.compare(count) != 0:
                raise FusionError(
                    "intersect_witness",
                    f"witness {format_path(t)} of step {n} lost successors "
                    f"({kept.brief()} of {count.brief()}); this is a bug",
                )
        return final

    def richness_report(self, guard: int = 200_000):
        """check_richness of the limit at the number of completed steps."""
        return self.intersect().check_richness(self.n_cur, guard)

    # -- serialization -----------------------------------------------------------

    def to_json_dict(self) -> dict:
        steps = []
        for i in range(1, len(self.conditions)):
            record = self.witnesses[i - 1]
            steps.append(
                {
                    "condition": self.conditions[i].to_json_dict(),
                    "level": self.levels[i],
                    "witness": None
                    if record is None
                    else {
                        "node": format_path(record[0]),
                        "count": record[1].brief(2048),
                    },
                }
            )
        return {
            "initial": {
                "condition": self.conditions[0].to_json_dict(),
                "level": self.levels[0],
            },
            "steps": steps,
        }


def chain_from_json(obj: dict) -> FusionChain:
    """Replay a chain log, re-verifying every step."""
    if not isinstance(obj, dict) or "initial" not in obj or "steps" not in obj:
        raise FusionError("inclusion", "chain JSON must have initial/steps")
    first = obj["initial"]
    chain = FusionChain(
        condition_from_json(first["condition"]), first["level"]
    )
    for step in obj["steps"]:
        witness = step.get("witness")
        node = None if witness is None else parse_path(witness["node"])
        chain.push_step(
            condition_from_json(step["condition"]), step["level"], node
        )
    return chain
