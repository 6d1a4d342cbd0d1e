"""Branch recovery from a fresh name: splitting runs and decoding.

A fresh determined name takes visibly different values on different
branches.  This module exploits that operationally.  A *splitting run*
builds a decreasing chain of conditions together with a table of query
ordinals: at every marker level, any two surviving nodes force opposite
answers to "is the query ordinal in the name's value".  Decoding then
walks the table: given nothing but the name's value on some branch, it
re-identifies the branch prefix level by level.

The run only gets off the ground when the name still distinguishes
branches at the required depth, so the final marker level can never
exceed the name's depth; past that the pair search fails and reports
the offending pair.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .conditions import TreeCondition
from .errors import ConstructionError, DecodeError
from .fusion import FusionChain
from .mastertree import NodePath, format_path, indexer
from .names import (
    DECIDED_NO,
    DECIDED_YES,
    UNDECIDED,
    DeterminedName,
    decide,
    is_fresh,
    value_on_branch,
)

_DEFAULT_GUARD = 200_000
# How far below its starting point a witness descent may go before the
# search is declared hopeless.  Indices explode doubly exponentially
# with depth, so every realistic hit happens within a handful of
# levels; the cap only bounds pathological profiles.
_DESCENT_CAP = 64

PairKey = Tuple[int, NodePath, NodePath]


def _pair_key(n: int, a: NodePath, b: NodePath) -> PairKey:
    if a <= b:
        return (n, a, b)
    return (n, b, a)


class SplittingFusion:
    """A completed splitting run.

    Carries the underlying chain (whose limit is the final condition),
    the marker levels, the surviving node set of each marker level, and
    for every unordered pair of same-level survivors the query ordinal
    that separates them plus the member forcing it *into* the value.
    """

    __slots__ = ("chain", "name", "levels", "level_sets", "_alphas", "_yes")

    def __init__(
        self,
        chain: FusionChain,
        name: DeterminedName,
        levels: List[int],
        level_sets: List[Tuple[NodePath, ...]],
        alphas: Dict[PairKey, int],
        yes_sides: Dict[PairKey, NodePath],
    ):
        self.chain = chain
        self.name = name
        self.levels = levels
        self.level_sets = level_sets
        self._alphas = alphas
        self._yes = yes_sides

    @property
    def steps(self) -> int:
        return self.chain.n_cur

    @property
    def final(self) -> TreeCondition:
        return self.chain.intersect()

    def pair_query(self, n: int, a, b) -> Tuple[int, NodePath]:
        """The query ordinal for a level-n pair, and who forces it in."""
        key = _pair_key(n, tuple(a), tuple(b))
        if key not in self._alphas:
            raise ConstructionError(
                "pair_table",
                f"no recorded query for {format_path(key[1])} / "
                f"{format_path(key[2])} at step {n}",
            )
        return self._alphas[key], self._yes[key]

    def decode_branch(self, value) -> NodePath:
        return decode_branch(self, value)

    def to_json_dict(self) -> dict:
        pairs = []
        for key in sorted(self._alphas):
            n, a, b = key
            pairs.append(
                {
                    "step": n,
                    "a": format_path(a),
                    "b": format_path(b),
                    "query": self._alphas[key],
                    "forces_in": format_path(self._yes[key]),
                }
            )
        return {
            "levels": list(self.levels),
            "level_sets": [
                [format_path(a) for a in u] for u in self.level_sets
            ],
            "pairs": pairs,
            "chain": self.chain.to_json_dict(),
        }


# -- the construction --------------------------------------------------------


def build_splitting_fusion(
    t0: TreeCondition,
    name: DeterminedName,
    n_max: int,
    guard: int = _DEFAULT_GUARD,
) -> SplittingFusion:
    """Run ``n_max`` splitting steps below ``t0`` guided by ``name``.

    Each step first locates a successor-rich node above the step's
    obligation node (fixing the next marker level just below it), then
    separates every pair of marker-level survivors by a query ordinal,
    shrinking the subtree under each survivor so the two sides of every
    pair force opposite answers.  The resulting chain passes the full
    step verification, witnesses included.
    """
    if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 0:
        raise ConstructionError(
            "steps", f"step count must be a natural: {n_max!r}"
        )
    if name.kind != "set":
        raise ConstructionError(
            "name_kind", f"splitting needs a set-valued name, got {name.kind}"
        )
    if name.profile != t0.profile:
        raise ConstructionError(
            "profile_mismatch", "name and condition use different profiles"
        )
    if not is_fresh(t0, name, guard):
        raise ConstructionError(
            "freshness",
            "the name repeats a value across sibling subtrees of the "
            "start condition; nothing forces it outside the ground data",
        )
    paths = indexer(t0.profile)
    chain = FusionChain(t0, 0)
    levels = [0]
    level_sets: List[Tuple[NodePath, ...]] = [t0.level_set(0, guard)]
    alphas: Dict[PairKey, int] = {}
    yes_sides: Dict[PairKey, NodePath] = {}

    for n in range(n_max):
        t_n = chain.last_condition
        l_n = chain.last_level
        s_n = paths.path_of(n)
        witness: Optional[NodePath] = None
        if t_n.contains_node(s_n):
            witness = _find_witness(t_n, s_n, max(l_n, len(s_n) + 1), n)
            l_next = len(witness) + 1
        else:
            l_next = l_n + 1
        u_next = t_n.level_set(l_next, guard)
        refined = {a: t_n.restrict(a) for a in u_next}
        for i, a in enumerate(u_next):
            for b in u_next[i + 1 :]:
                alpha, yes = _split_pair(refined, a, b, name, guard)
                key = _pair_key(n + 1, a, b)
                alphas[key] = alpha
                yes_sides[key] = yes
        t_next = t_n.amalgamate(l_next, refined, guard)
        chain.push_step(t_next, l_next, witness)
        levels.append(l_next)
        level_sets.append(u_next)

    return SplittingFusion(chain, name, levels, level_sets, alphas, yes_sides)


def _find_witness(
    cond: TreeCondition, s_n: NodePath, min_len: int, n: int
) -> NodePath:
    """Least node strictly above ``s_n`` with ``P_ind**n`` successors.

    Candidates are the condition's explicit nodes plus leftmost
    descents into each tail region meeting ``s_n``; ties go to the
    shallowest, then lexicographically least.  Depth ``min_len`` keeps
    the marker levels strictly increasing.
    """
    profile = cond.profile
    candidates: List[NodePath] = []

    def enough(node: NodePath) -> bool:
        k = cond.node_index(node)
        if k is None:
            return False
        need = profile.P(k).pow_of_pow2(n)
        return cond.child_count(node).compare(need) >= 0

    base = len(s_n)
    for t in cond.explicit_nodes():
        if len(t) < max(min_len, base + 1) or t[:base] != s_n:
            continue
        if enough(t):
            candidates.append(t)
    for leaf in sorted(cond.tails, key=lambda p: (len(p), p)):
        if leaf[:base] == s_n:
            node = leaf
        elif s_n[: len(leaf)] == leaf:
            node = s_n
        else:
            continue
        while len(node) < base + _DESCENT_CAP:
            node = node + (0,)
            if cond.node_index(node) is None:
                break
            if len(node) >= min_len and enough(node):
                candidates.append(node)
                break
    if not candidates:
        raise ConstructionError(
            "witness_search",
            f"no node above {format_path(s_n)} at depth {min_len} or "
            f"deeper has the required successor count for step {n}",
        )
    return min(candidates, key=lambda p: (len(p), p))


def _split_pair(
    refined: Dict[NodePath, TreeCondition],
    a: NodePath,
    b: NodePath,
    name: DeterminedName,
    guard: int,
) -> Tuple[int, NodePath]:
    """Separate two survivors by some query ordinal, in place.

    Scans ordinals ascending; for the first that both sides can be
    made to answer oppositely, shrinks each side to the agreeing
    subtree and reports the ordinal plus the side forced to "in".
    """
    for alpha in range(name.theta):
        for yes, no in ((a, b), (b, a)):
            forced_in = _force_membership(refined[yes], name, alpha, True, guard)
            if forced_in is None:
                continue
            forced_out = _force_membership(refined[no], name, alpha, False, guard)
            if forced_out is None:
                continue
            refined[yes] = forced_in
            refined[no] = forced_out
            return alpha, yes
    raise ConstructionError(
        "pair_split",
        f"no query ordinal below {name.theta} separates "
        f"{format_path(a)} and {format_path(b)}",
    )


def _force_membership(
    cond: TreeCondition,
    name: DeterminedName,
    alpha: int,
    want_in: bool,
    guard: int,
) -> Optional[TreeCondition]:
    """The widest subcondition answering ``alpha in value`` one way.

    Returns ``cond`` unchanged when it already answers, ``None`` when
    no branch agrees, and otherwise keeps exactly the agreeing
    name-depth nodes, re-tailed.
    """
    verdict = decide(cond, name, ("in", alpha), guard)
    if verdict == (DECIDED_YES if want_in else DECIDED_NO):
        return cond
    if verdict != UNDECIDED:
        return None
    keep = [
        leaf
        for leaf in cond.level_set(name.depth, guard)
        if (alpha in value_on_branch(name, leaf)) == want_in
    ]
    children: Dict[NodePath, set] = {}
    for leaf in keep:
        for i in range(len(leaf)):
            children.setdefault(leaf[:i], set()).add(leaf[i])
    return TreeCondition(
        cond.profile,
        {node: tuple(sorted(kids)) for node, kids in children.items()},
        keep,
    )


# -- decoding ----------------------------------------------------------------


def decode_branch(fusion: SplittingFusion, value) -> NodePath:
    """Recover the branch prefix that produced ``value``.

    Works level by level: at each marker level exactly one survivor
    must relate to the value the way the recorded tables say it would,
    and the picks must nest.  Any other outcome names the first level
    where decoding broke down.
    """
    xs = set()
    for x in value:
        if not isinstance(x, int) or isinstance(x, bool) or x < 0:
            raise DecodeError(0, f"value elements must be naturals: {x!r}")
        xs.add(x)
    current = fusion.level_sets[0][0]
    for n in range(1, len(fusion.level_sets)):
        survivors = fusion.level_sets[n]
        picks = []
        for a in survivors:
            for b in survivors:
                if b == a:
                    continue
                alpha, yes = fusion.pair_query(n, a, b)
                if (alpha in xs) != (yes == a):
                    break
            else:
                picks.append(a)
        if not picks:
            raise DecodeError(n, "no node of the level matches the value")
        if len(picks) > 1:
            raise DecodeError(
                n, f"{len(picks)} nodes of the level match the value"
            )
        if picks[0][: len(current)] != current:
            raise DecodeError(
                n,
                f"matched node {format_path(picks[0])} does not extend "
                f"the previous pick {format_path(current)}",
            )
        current = picks[0]
    return current
