"""Finitely presented subtrees of the indexed tree.

A condition is an explicit finite prefix-closed subtree whose leaves
all carry a "full tail" marker: below a tailed leaf the whole ambient
tree is included.  This shape (finite explicit part, full tails) is
exactly what the fusion constructions produce, and it keeps every
operation decidable: a condition is never a finite tree, because every
leaf opens into the full tree below it.

All values are immutable; operations return new conditions.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Tuple

from .errors import (
    ConditionError,
    EnumerationLimitError,
    ProfileError,
    TreeIndexError,
)
from .growth import GrowthProfile, profile_from_config
from .hyperint import HyperInt, hyper
from .mastertree import NodePath, format_path, indexer, parse_path

__all__ = [
    "TreeCondition",
    "RichnessReport",
    "full_condition",
    "condition_from_json",
]

_DEFAULT_ENUM_GUARD = 200_000
_INT_BITS = 62


def _as_path(p) -> NodePath:
    p = tuple(p)
    for c in p:
        if not isinstance(c, int) or isinstance(c, bool) or c < 0:
            raise ConditionError(f"child indices must be naturals: {c!r}")
    return p


class TreeCondition:
    """One condition: explicit children per internal node, tails at leaves.

    ``children`` maps each explicit internal node to its sorted tuple of
    kept child indices; ``tails`` is the frozenset of explicit leaves,
    each understood to continue as the full ambient tree.  The explicit
    node set is the keys of ``children`` together with ``tails``.
    """

    __slots__ = ("profile", "children", "tails", "_hash")

    def __init__(self, profile: GrowthProfile, children, tails):
        self.profile = profile
        norm: Dict[NodePath, Tuple[int, ...]] = {}
        for node, kids in dict(children).items():
            node = _as_path(node)
            kids = tuple(sorted(set(int(c) for c in kids)))
            norm[node] = kids
        self.children = norm
        self.tails = frozenset(_as_path(t) for t in tails)
        self._hash = hash(
            (
                profile.profile_id,
                tuple(sorted(self.children.items())),
                tuple(sorted(self.tails)),
            )
        )
        self._validate()

    # -- structural validation -------------------------------------------

    def _validate(self) -> None:
        if self.tails & set(self.children):
            bad = sorted(self.tails & set(self.children))[0]
            raise ConditionError(
                f"{format_path(bad)} is both internal and a tail leaf"
            )
        explicit = self.explicit_nodes()
        if not explicit or explicit[0] != ():
            raise ConditionError("the root must be explicit")
        node_set = set(explicit)
        for node, kids in self.children.items():
            if not kids:
                raise ConditionError(
                    f"internal node {format_path(node)} has no children"
                )
            for c in kids:
                if node + (c,) not in node_set:
                    raise ConditionError(
                        f"child {c} of {format_path(node)} is listed but "
                        "not explicit"
                    )
        for node in explicit:
            if node == ():
                continue
            parent, last = node[:-1], node[-1]
            kids = self.children.get(parent)
            if kids is None or last not in kids:
                raise ConditionError(
                    f"{format_path(node)} is not reachable from its parent"
                )
        # Every explicit leaf must carry the tail marker; a bare finite
        # leaf would make the tree finite below it.
        for node in explicit:
            if node not in self.children and node not in self.tails:
                raise ConditionError(
                    f"leaf {format_path(node)} has no tail marker"
                )
        # Child indices must fit the ambient branching wherever the
        # node index resolves; unresolvable indices cannot be checked
        # and are accepted as given.
        for node, kids in self.children.items():
            k = self._ind_or_none(node)
            if k is None:
                continue
            n = self.profile.N(k)
            if hyper(kids[-1]).compare(n) >= 0:
                raise ConditionError(
                    f"child {kids[-1]} of {format_path(node)} exceeds the "
                    f"ambient branching {n.brief()}"
                )

    # -- identity ----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, TreeCondition):
            return NotImplemented
        return (
            self.profile == other.profile
            and self.children == other.children
            and self.tails == other.tails
        )

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return (
            f"TreeCondition({self.profile.profile_id}, "
            f"{len(self.children)} internal, {len(self.tails)} tails)"
        )

    # -- small queries -------------------------------------------------------

    def explicit_nodes(self) -> list:
        """All explicit nodes, shallowest first, lexicographic within a level."""
        nodes = list(self.children) + list(self.tails)
        nodes.sort(key=lambda p: (len(p), p))
        return nodes

    def is_explicit(self, node) -> bool:
        node = _as_path(node)
        return node in self.children or node in self.tails

    def tail_covering(self, node) -> Optional[NodePath]:
        """The tail leaf at or below ``node``, if the node sits in a tail."""
        node = _as_path(node)
        for cut in range(len(node), -1, -1):
            prefix = node[:cut]
            if prefix in self.tails:
                return prefix
            if prefix in self.children:
                return None
        return None

    def contains_node(self, node) -> bool:
        """Whether the (explicit or tail-region) tree contains the node."""
        node = _as_path(node)
        if self.is_explicit(node):
            return True
        u = self.tail_covering(node)
        if u is None:
            return False
        # Inside a tail every ambient node is present; check the path is
        # ambient-valid where the indices resolve.
        for cut in range(len(u), len(node)):
            k = self._ind_or_none(node[:cut])
            if k is None:
                continue
            if hyper(node[cut]).compare(self.profile.N(k)) >= 0:
                return False
        return True

    def _ind_or_none(self, node) -> Optional[int]:
        try:
            return indexer(self.profile).ind(node)
        except (TreeIndexError, ProfileError):
            return None

    def node_index(self, node) -> Optional[int]:
        """ind(node) when resolvable under the ambient caps, else None."""
        return self._ind_or_none(_as_path(node))

    def child_count(self, node) -> HyperInt:
        """Immediate successor count of an explicit node inside this tree."""
        node = _as_path(node)
        if node in self.children:
            return hyper(len(self.children[node]))
        if node in self.tails or self.tail_covering(node) is not None:
            k = self._ind_or_none(node)
            if k is None:
                raise ConditionError(
                    f"branching at {format_path(node)} is not resolvable"
                )
            return self.profile.N(k)
        raise ConditionError(f"{format_path(node)} is not in the tree")

    def _child_indices(self, node, guard: int) -> range:
        """Child indices of a tail-region node, enumerated under a guard."""
        k = self._ind_or_none(node)
        if k is None:
            raise EnumerationLimitError(format_path(node), guard)
        try:
            width = self.profile.n_as_int(k, _INT_BITS)
        except Exception:
            raise EnumerationLimitError(
                f"branching at {format_path(node)}", guard
            ) from None
        if width > guard:
            raise EnumerationLimitError(width, guard)
        return range(width)

    # -- trunk ---------------------------------------------------------------

    def trunk(self) -> NodePath:
        """The longest node comparable with every node of the tree.

        Walks from the root while exactly one continuation exists:
        through single-child internal nodes, and through tail nodes of
        branching one.  Stops where the tree first branches, or where
        branching is not resolvable.
        """
        node: NodePath = ()
        while True:
            if node in self.children:
                kids = self.children[node]
                if len(kids) != 1:
                    return node
                node = node + (kids[0],)
                continue
            # tail region
            k = self._ind_or_none(node)
            if k is None:
                return node
            n = self.profile.N(k)
            if n.compare(hyper(1)) != 0:
                return node
            node = node + (0,)

    # -- restriction -----------------------------------------------------------

    def restrict(self, a) -> "TreeCondition":
        """The subcondition of nodes comparable with ``a``."""
        a = _as_path(a)
        if not self.contains_node(a):
            raise ConditionError(f"{format_path(a)} is not in the tree")
        children: Dict[NodePath, Tuple[int, ...]] = {}
        tails = set()
        for cut in range(len(a)):
            children[a[:cut]] = (a[cut],)
        if self.is_explicit(a):
            # keep the original structure at and above a
            for node, kids in self.children.items():
                if len(node) >= len(a) and node[: len(a)] == a:
                    children[node] = kids
            for t in self.tails:
                if len(t) >= len(a) and t[: len(a)] == a:
                    tails.add(t)
        else:
            tails.add(a)
        return TreeCondition(self.profile, children, tails)

    # -- level sets --------------------------------------------------------------

    def level_set(self, l: int, guard: int = _DEFAULT_ENUM_GUARD) -> tuple:
        """All length-l nodes, sorted; error when a tail makes the level
        too wide to enumerate."""
        if not isinstance(l, int) or isinstance(l, bool) or l < 0:
            raise ConditionError(f"level must be a natural: {l!r}")
        frontier = [()]
        for _ in range(l):
            nxt = []
            for node in frontier:
                if node in self.children:
                    nxt.extend(node + (c,) for c in self.children[node])
                else:
                    nxt.extend(
                        node + (c,) for c in self._child_indices(node, guard)
                    )
                if len(nxt) > guard:
                    raise EnumerationLimitError(len(nxt), guard)
            frontier = nxt
        return tuple(sorted(frontier))

    # -- ordering ---------------------------------------------------------------

    def is_stronger(self, other: "TreeCondition") -> bool:
        """Whether self refines other (self a subtree of other)."""
        if not isinstance(other, TreeCondition):
            raise ConditionError("is_stronger compares two conditions")
        if self.profile != other.profile:
            raise ConditionError(
                "conditions live on different profiles: "
                f"{self.profile.profile_id} vs {other.profile.profile_id}"
            )
        for node in self.children:
            if not other.contains_node(node):
                return False
        for t in self.tails:
            if not other.contains_node(t):
                return False
            if not other._covers_full_subtree(t):
                return False
        return True

    def _covers_full_subtree(self, t: NodePath) -> bool:
        """Whether every ambient node above t belongs to this tree."""
        if self.tail_covering(t) is not None:
            return True
        if not self.is_explicit(t):
            return False
        stack = [t]
        while stack:
            node = stack.pop()
            if node in self.tails:
                continue
            kids = self.children[node]
            k = self._ind_or_none(node)
            if k is None:
                return False
            try:
                width = self.profile.n_as_int(k, _INT_BITS)
            except Exception:
                # astronomically wide: a finite explicit fan cannot be full
                return False
            if len(kids) != width:
                return False
            stack.extend(node + (c,) for c in kids)
        return True

    # -- union and normal form ---------------------------------------------------

    def union(self, other: "TreeCondition") -> "TreeCondition":
        """Tree union; a tail absorbs any explicit structure above it."""
        if self.profile != other.profile:
            raise ConditionError("cannot union across profiles")
        merged: Dict[NodePath, set] = {}
        for src in (self.children, other.children):
            for node, kids in src.items():
                merged.setdefault(node, set()).update(kids)
        all_tails = self.tails | other.tails
        kept = {
            u
            for u in all_tails
            if not any(v != u and v == u[: len(v)] for v in all_tails)
        }
        children = {
            node: tuple(sorted(kids))
            for node, kids in merged.items()
            if not any(u == node[: len(u)] for u in kept)
        }
        return TreeCondition(self.profile, children, kept)

    def normalize(self, guard: int = _DEFAULT_ENUM_GUARD) -> "TreeCondition":
        """Collapse every full fan of tails into a single tail.

        An internal node explicitly carrying all of its ambient children
        with every child a tail is the same tree as a tail at the node
        itself; the collapsed form is the canonical one.
        """
        children = dict(self.children)
        tails = set(self.tails)
        for node in sorted(children, key=len, reverse=True):
            kids = children[node]
            if not all(node + (c,) in tails for c in kids):
                continue
            k = self._ind_or_none(node)
            if k is None:
                continue
            try:
                width = self.profile.n_as_int(k, _INT_BITS)
            except Exception:
                continue
            if len(kids) != width or width > guard:
                continue
            for c in kids:
                tails.discard(node + (c,))
            del children[node]
            tails.add(node)
        if children == self.children and tails == self.tails:
            return self
        return TreeCondition(self.profile, children, tails)

    # -- amalgamation -------------------------------------------------------------

    def amalgamate(
        self,
        l: int,
        assignments: Dict[NodePath, "TreeCondition"],
        guard: int = _DEFAULT_ENUM_GUARD,
    ) -> "TreeCondition":
        """Union of one chosen subcondition below each level-l node.

        Every level-l node must get an assignment refining the
        restriction to that node; the union then keeps level l intact.
        """
        level = self.level_set(l, guard)
        given = {_as_path(a): cond for a, cond in assignments.items()}
        missing = [a for a in level if a not in given]
        if missing:
            raise ConditionError(
                f"no assignment for {format_path(missing[0])} "
                f"(and {len(missing) - 1} more)"
            )
        extra = sorted(set(given) - set(level))
        if extra:
            raise ConditionError(
                f"assignment at {format_path(extra[0])} which is not on "
                f"level {l}"
            )
        out: Optional[TreeCondition] = None
        for a in level:
            piece = given[a]
            if not piece.is_stronger(self.restrict(a)):
                raise ConditionError(
                    f"assignment at {format_path(a)} escapes the "
                    "restriction it must refine"
                )
            out = piece if out is None else out.union(piece)
        out = out.normalize(guard)
        if out.level_set(l, guard) != level:
            raise ConditionError(
                f"amalgamation changed level {l}; this is a bug"
            )
        return out

    # -- richness -------------------------------------------------------------------

    def check_richness(
        self, n_max: int, guard: int = _DEFAULT_ENUM_GUARD
    ) -> "RichnessReport":
        """Certify the branching-richness obligations up to n_max.

        For every explicit node s and every n <= n_max, find a node
        t extending s (weakly) whose immediate successor count inside
        this tree is at least P_ind(t)^n.  Tail leaves count with their
        full ambient branching; obligations with no explicit witness
        are discharged by descending into a tail until the profile's
        richness threshold for n is reached.
        """
        if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 0:
            raise ConditionError(f"n_max must be a natural: {n_max!r}")
        records = []
        failures = []
        explicit = self.explicit_nodes()
        for s in explicit:
            s_ind = self._ind_or_none(s)
            for n in range(n_max + 1):
                if s_ind is None:
                    rec = self._profile_discharge(s, n)
                else:
                    rec = self._witness_for(s, n, explicit)
                records.append(rec)
                if not rec["ok"]:
                    failures.append((s, n))
        return RichnessReport(records, failures)

    def _witness_for(self, s: NodePath, n: int, explicit: list) -> dict:
        need_of: Dict[int, HyperInt] = {}
        for t in explicit:
            if len(t) < len(s) or t[: len(s)] != s:
                continue
            k = self._ind_or_none(t)
            if k is None:
                continue
            if k not in need_of:
                need_of[k] = self.profile.P(k).pow_of_pow2(n)
            count = (
                hyper(len(self.children[t]))
                if t in self.children
                else self.profile.N(k)
            )
            if count.compare(need_of[k]) >= 0:
                return {
                    "node": format_path(s),
                    "n": n,
                    "ok": True,
                    "via": "explicit",
                    "witness": format_path(t),
                    "witness_ind": k,
                    "count": count.brief(256),
                    "needed": need_of[k].brief(256),
                }
        return self._tail_discharge(s, n)

    def _tail_discharge(self, s: NodePath, n: int) -> dict:
        # No explicit node extends a tail leaf, so a tail comparable
        # with the explicit node s always extends it weakly.
        base = {"node": format_path(s), "n": n, "via": "tail"}
        tail = None
        for t in sorted(self.tails, key=lambda p: (len(p), p)):
            if t[: len(s)] == s:
                tail = t
                break
        if tail is None:
            return dict(base, ok=False, reason="no tail above the node")
        threshold = self.profile.richness_threshold(n)
        if threshold is None:
            return dict(
                base,
                ok=False,
                reason=f"profile never reaches richness level {n}",
            )
        node = tail
        while True:
            k = self._ind_or_none(node)
            if k is None:
                return dict(
                    base,
                    ok=False,
                    reason="tail descent left the resolvable region "
                    f"before index {threshold}",
                )
            if k >= threshold:
                assert self.profile.poly_bound_holds(n, k)
                return dict(
                    base,
                    ok=True,
                    witness=format_path(node),
                    witness_ind=k,
                    threshold=threshold,
                )
            node = node + (0,)

    def _profile_discharge(self, s: NodePath, n: int) -> dict:
        # The node's own index is beyond the resolvable caps; the only
        # available evidence is profile-level: the bound holds from
        # some threshold on, and every deeper node has a deeper index.
        threshold = self.profile.richness_threshold(n)
        ok = threshold is not None
        rec = {
            "node": format_path(s),
            "n": n,
            "ok": ok,
            "via": "profile",
            "threshold": threshold,
        }
        if not ok:
            rec["reason"] = f"profile never reaches richness level {n}"
        return rec

    # -- serialization -----------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "profile": self.profile.to_config(),
            "children": {
                format_path(node): list(kids)
                for node, kids in sorted(self.children.items())
            },
            "tails": [format_path(t) for t in sorted(self.tails)],
        }


class RichnessReport:
    """Outcome of check_richness: per-obligation records and failures."""

    __slots__ = ("records", "failures")

    def __init__(self, records: list, failures: list):
        self.records = records
        self.failures = failures

    @property
    def ok(self) -> bool:
        return not self.failures

    def witness(self, node, n: int) -> dict:
        key = format_path(_as_path(node))
        for rec in self.records:
            if rec["node"] == key and rec["n"] == n:
                return rec
        raise KeyError(f"no record for ({key}, {n})")

    def to_json_dict(self) -> dict:
        return {
            "ok": self.ok,
            "obligations": len(self.records),
            "failures": [
                {"node": format_path(s), "n": n} for s, n in self.failures
            ],
            "records": self.records,
        }

    def __repr__(self):
        verdict = "ok" if self.ok else f"{len(self.failures)} failures"
        return f"RichnessReport({len(self.records)} obligations, {verdict})"


def full_condition(profile: GrowthProfile) -> TreeCondition:
    """The whole ambient tree as a condition: a tail at the root."""
    return TreeCondition(profile, {}, [()])


def condition_from_json(obj: dict) -> TreeCondition:
    """Inverse of TreeCondition.to_json_dict."""
    if not isinstance(obj, dict):
        raise ConditionError("condition JSON must be an object")
    for key in ("profile", "children", "tails"):
        if key not in obj:
            raise ConditionError(f"condition JSON lacks {key!r}")
    profile = profile_from_config(obj["profile"])
    try:
        children = {
            parse_path(text): kids for text, kids in obj["children"].items()
        }
        tails = [parse_path(text) for text in obj["tails"]]
    except TreeIndexError as exc:
        raise ConditionError(f"bad path in condition JSON: {exc}") from exc
    return TreeCondition(profile, children, tails)
