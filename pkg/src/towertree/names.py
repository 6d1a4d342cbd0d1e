"""Names whose value is pinned down by a fixed-depth branch prefix.

A determined name assigns one value to every depth-d node of the
ambient tree; along any branch, the value is read off the first d
coordinates.  Two value kinds exist: a finite set of naturals below a
bound theta, and a finite tuple (a fixed key set mapped to naturals).

A condition decides a query about the name when all of its depth-d
nodes agree; freshness says no condition below the given one pins the
whole value down, which is what the splitting construction consumes.
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

from .conditions import TreeCondition, full_condition
from .conditions import _DEFAULT_ENUM_GUARD as _ENUM_GUARD
from .errors import NameError_, TreeIndexError
from .growth import GrowthProfile
from .mastertree import NodePath, format_path, parse_path

__all__ = [
    "DECIDED_YES",
    "DECIDED_NO",
    "UNDECIDED",
    "DeterminedName",
    "decide",
    "is_fresh",
    "value_on_branch",
    "identity_set_name",
    "name_from_json",
]

DECIDED_YES = "yes"
DECIDED_NO = "no"
UNDECIDED = "undecided"


def _as_path(p) -> NodePath:
    p = tuple(p)
    for c in p:
        if not isinstance(c, int) or isinstance(c, bool) or c < 0:
            raise NameError_(f"path entries must be naturals: {c!r}")
    return p


class DeterminedName:
    """A value table over the depth-d nodes of the ambient tree.

    ``kind`` is "set" (values are frozensets of naturals below
    ``theta``) or "tuple" (values are dicts over one common key set).
    The table must be total on the ambient depth-d level, so lookups
    never dangle for branches that exist in the tree.
    """

    __slots__ = ("profile", "depth", "kind", "table", "theta", "keys")

    def __init__(
        self,
        profile: GrowthProfile,
        depth: int,
        kind: str,
        table: Dict[NodePath, object],
        theta: Optional[int] = None,
        guard: int = _ENUM_GUARD,
    ):
        if not isinstance(depth, int) or isinstance(depth, bool) or depth < 1:
            raise NameError_(f"depth must be a positive integer: {depth!r}")
        if kind not in ("set", "tuple"):
            raise NameError_(f"kind must be 'set' or 'tuple': {kind!r}")
        self.profile = profile
        self.depth = depth
        self.kind = kind
        ambient = full_condition(profile).level_set(depth, guard)
        given = {_as_path(node): value for node, value in dict(table).items()}
        missing = [node for node in ambient if node not in given]
        if missing:
            raise NameError_(
                f"table lacks a value for {format_path(missing[0])} "
                f"(and {len(missing) - 1} more depth-{depth} nodes)"
            )
        extra = sorted(set(given) - set(ambient))
        if extra:
            raise NameError_(
                f"table entry {format_path(extra[0])} is not a depth-{depth} "
                "node of the ambient tree"
            )
        if kind == "set":
            self.theta = len(ambient) if theta is None else int(theta)
            if self.theta < 1:
                raise NameError_(f"theta must be positive: {theta!r}")
            norm = {}
            for node, value in given.items():
                value = frozenset(int(v) for v in value)
                for v in value:
                    if not 0 <= v < self.theta:
                        raise NameError_(
                            f"value {v} at {format_path(node)} is outside "
                            f"0..{self.theta - 1}"
                        )
                norm[node] = value
            self.table = norm
            self.keys = None
        else:
            if theta is not None:
                raise NameError_("theta applies to set names only")
            self.theta = None
            keys: Optional[Tuple[int, ...]] = None
            norm = {}
            for node, value in given.items():
                if not isinstance(value, dict):
                    raise NameError_(
                        f"tuple name values are dicts, got {type(value).__name__} "
                        f"at {format_path(node)}"
                    )
                entry = {}
                for k, v in value.items():
                    k, v = int(k), int(v)
                    if k < 0 or v < 0:
                        raise NameError_(
                            f"tuple entries must be naturals: {k}: {v}"
                        )
                    entry[k] = v
                node_keys = tuple(sorted(entry))
                if keys is None:
                    keys = node_keys
                elif node_keys != keys:
                    raise NameError_(
                        f"key set at {format_path(node)} differs from the "
                        "rest of the table"
                    )
                norm[node] = entry
            self.table = norm
            self.keys = keys

    def __eq__(self, other):
        if not isinstance(other, DeterminedName):
            return NotImplemented
        return (
            self.profile == other.profile
            and self.depth == other.depth
            and self.kind == other.kind
            and self.theta == other.theta
            and self.table == other.table
        )

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __repr__(self):
        bound = f", theta={self.theta}" if self.kind == "set" else ""
        return (
            f"DeterminedName(depth={self.depth}, kind={self.kind}, "
            f"{len(self.table)} entries{bound})"
        )

    def value_key(self, value):
        """A hashable surrogate for a table value, for grouping."""
        if self.kind == "set":
            return value
        return tuple(sorted(value.items()))

    def query_predicate(self, query):
        """Turn a query into a per-value test, validating its shape."""
        if isinstance(query, tuple) and query and query[0] == "in":
            if self.kind != "set" or len(query) != 2:
                raise NameError_(f"bad membership query for {self.kind} name")
            alpha = int(query[1])
            return lambda v: alpha in v
        if isinstance(query, tuple) and query and query[0] == "at":
            if self.kind != "tuple" or len(query) != 3:
                raise NameError_(f"bad entry query for {self.kind} name")
            k, val = int(query[1]), int(query[2])
            if k not in self.keys:
                raise NameError_(f"key {k} is not in the name's key set")
            return lambda v: v[k] == val
        if isinstance(query, tuple) and query and query[0] == "is":
            if len(query) != 2:
                raise NameError_("full-value query takes one value")
            if self.kind == "set":
                target = frozenset(int(v) for v in query[1])
            else:
                target = {int(k): int(v) for k, v in dict(query[1]).items()}
            return lambda v: v == target
        raise NameError_(f"unrecognized query: {query!r}")

    def to_json_dict(self) -> dict:
        table = {}
        for node in sorted(self.table):
            value = self.table[node]
            if self.kind == "set":
                table[format_path(node)] = sorted(value)
            else:
                table[format_path(node)] = {str(k): value[k] for k in self.keys}
        out = {"depth": self.depth, "kind": self.kind, "table": table}
        if self.kind == "set":
            out["theta"] = self.theta
        return out


def _same_profile(cond: TreeCondition, name: DeterminedName) -> None:
    if cond.profile != name.profile:
        raise NameError_(
            "condition and name live on different profiles: "
            f"{cond.profile.profile_id} vs {name.profile.profile_id}"
        )


def decide(
    cond: TreeCondition,
    name: DeterminedName,
    query,
    guard: int = _ENUM_GUARD,
) -> str:
    """Whether the condition settles the query the same way everywhere.

    Returns DECIDED_YES when every depth-d node of the condition
    satisfies the query, DECIDED_NO when none does, UNDECIDED otherwise.
    """
    _same_profile(cond, name)
    test = name.query_predicate(query)
    hits = [test(name.table[x]) for x in cond.level_set(name.depth, guard)]
    if all(hits):
        return DECIDED_YES
    if not any(hits):
        return DECIDED_NO
    return UNDECIDED


def is_fresh(
    cond: TreeCondition, name: DeterminedName, guard: int = _ENUM_GUARD
) -> bool:
    """Whether no restriction of the condition makes the name constant.

    True iff below every node of depth < d the name still takes at
    least two values; such a name cannot be pinned to a single value by
    passing to a stronger condition above any one node.
    """
    _same_profile(cond, name)
    leaves = cond.level_set(name.depth, guard)
    for level in range(name.depth):
        groups: Dict[NodePath, set] = {}
        for x in leaves:
            groups.setdefault(x[:level], set()).add(
                name.value_key(name.table[x])
            )
        if any(len(values) == 1 for values in groups.values()):
            return False
    return True


def value_on_branch(name: DeterminedName, branch):
    """The name's value along a branch: a table lookup on its prefix."""
    branch = _as_path(branch)
    if len(branch) < name.depth:
        raise NameError_(
            f"branch of length {len(branch)} cannot determine a "
            f"depth-{name.depth} name"
        )
    prefix = branch[: name.depth]
    if prefix not in name.table:
        raise NameError_(
            f"{format_path(prefix)} is not a depth-{name.depth} node of "
            "the ambient tree"
        )
    value = name.table[prefix]
    return value if name.kind == "set" else dict(value)


def identity_set_name(
    profile: GrowthProfile, depth: int, guard: int = _ENUM_GUARD
) -> DeterminedName:
    """The name sending each depth-d node to the singleton of its rank.

    Distinct nodes get distinct values, so the name is fresh on every
    condition that keeps at least two branches below each node.
    """
    leaves = full_condition(profile).level_set(depth, guard)
    table = {node: frozenset({rank}) for rank, node in enumerate(leaves)}
    return DeterminedName(profile, depth, "set", table, theta=len(leaves))


def name_from_json(obj: dict, profile: GrowthProfile) -> DeterminedName:
    """Inverse of DeterminedName.to_json_dict, bound to a profile."""
    if not isinstance(obj, dict):
        raise NameError_("name JSON must be an object")
    for key in ("depth", "kind", "table"):
        if key not in obj:
            raise NameError_(f"name JSON lacks {key!r}")
    try:
        raw = {parse_path(text): value for text, value in obj["table"].items()}
    except TreeIndexError as exc:
        raise NameError_(f"bad path in name JSON: {exc}") from exc
    return DeterminedName(
        profile, obj["depth"], obj["kind"], raw, theta=obj.get("theta")
    )
