"""Bounded-evasion machinery for determined tuple names.

Two halves that pull in opposite directions:

* :func:`build_bounding_fusion` pins a tuple name down: starting from a
  condition with a trunk, it walks the enumerated ambient nodes and
  produces a shrinking chain of conditions whose frontier stays small
  enough that, for every tracked index k, the name's k-th value ranges
  over at most P_k candidates.  The final bound is a finite map
  k -> set of child indices.
* :func:`escape_witness` defeats any such bound from a sufficiently
  branching condition: it locates an index whose enumerated node has
  more successors than any admissible bound can cover and restricts to
  a successor outside the bound.

Every counting step runs on exact tower arithmetic; nothing is floated
or truncated.  All searches break ties lexicographically so repeated
runs produce identical transcripts.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Tuple

from .conditions import TreeCondition, full_condition
from .errors import ConstructionError, TreeIndexError
from .growth import GrowthProfile
from .hyperint import HyperInt, hyper, log2_exact
from .mastertree import NodePath, format_path, indexer
from .names import DECIDED_YES, DeterminedName, decide, value_on_branch

__all__ = [
    "BoundingFusion",
    "build_bounding_fusion",
    "decide_thin",
    "counting_chain",
    "pigeonhole_select",
    "make_counter_name",
    "verify_phi",
    "escape_witness",
]

_DEFAULT_GUARD = 200_000
_DESCENT_CAP = 64


def _as_members(members) -> Tuple[int, ...]:
    out = []
    for k in members:
        if not isinstance(k, int) or isinstance(k, bool) or k < 0:
            raise ConstructionError(
                "members", f"tracked indices must be naturals: {k!r}"
            )
        out.append(k)
    if not out:
        raise ConstructionError("members", "the tracked index set is empty")
    if len(set(out)) != len(out):
        raise ConstructionError("members", "tracked indices repeat")
    return tuple(sorted(out))


def _product_of_branching(profile: GrowthProfile, indices) -> HyperInt:
    """Exact product of N_i over the given indices."""
    acc = hyper(1)
    for i in indices:
        acc = acc.shift(log2_exact(profile.N(i)))
    return acc


def counting_chain(profile: GrowthProfile, members, top: int) -> dict:
    """The two inequalities that make pigeonhole selection work.

    For the tracked indices below ``top``: the product of their
    branching values is at most P_{K+1} (K the largest of them), which
    in turn is at most P_top.  Returns a record with both verdicts;
    ``ok`` is their conjunction.  Both hold on every shipped profile
    because P_{K+1} is literally the product of all N_i up to K.
    """
    members = _as_members(members)
    if not isinstance(top, int) or isinstance(top, bool) or top < 0:
        raise ConstructionError("counting_chain", f"bad index: {top!r}")
    below = [k for k in members if k < top]
    product = _product_of_branching(profile, below)
    record = {
        "top": top,
        "members_below": below,
        "product": product.brief(),
    }
    if not below:
        ok = product.compare(profile.P(top)) <= 0
        record["pivot"] = None
        record["product_within_pivot"] = ok
        record["pivot_within_top"] = True
        record["ok"] = ok
        return record
    pivot = max(below)
    p_pivot = profile.P(pivot + 1)
    p_top = profile.P(top)
    record["pivot"] = pivot
    record["p_pivot_next"] = p_pivot.brief()
    record["p_top"] = p_top.brief()
    record["product_within_pivot"] = product.compare(p_pivot) <= 0
    record["pivot_within_top"] = p_pivot.compare(p_top) <= 0
    record["ok"] = (
        record["product_within_pivot"] and record["pivot_within_top"]
    )
    return record


def pigeonhole_select(
    profile: GrowthProfile,
    members,
    witness_index: int,
    successors,
    values: Dict[NodePath, dict],
    step: int,
) -> Tuple[Tuple[NodePath, ...], dict]:
    """Largest class of successors sharing one decided tuple.

    ``values`` maps each successor to its decided tuple (index -> child
    value).  Verifies, in order: every decided value lies below its
    index's branching value; the counting chain for ``witness_index``;
    that the number of distinct tuples fits under the chain's product;
    and that the winning class has at least P_{witness_index}^step
    elements.  The class is returned whole (never trimmed to the
    target), sorted, with a JSON-ready record of everything checked.
    """
    members = _as_members(members)
    successors = tuple(successors)
    for node in successors:
        decided = values[node]
        for k, v in decided.items():
            if hyper(v).compare(profile.N(k)) >= 0:
                raise ConstructionError(
                    "value_range",
                    f"decided value {v} at index {k} reaches past the "
                    f"branching value {profile.N(k).brief()}",
                )
    chain = counting_chain(profile, members, witness_index)
    if not chain["ok"]:
        raise ConstructionError(
            "counting_chain",
            f"branching product escapes P_{witness_index}: {chain!r}",
        )
    classes: Dict[tuple, List[NodePath]] = {}
    for node in successors:
        key = tuple(sorted(values[node].items()))
        classes.setdefault(key, []).append(node)
    product = _product_of_branching(profile, chain["members_below"])
    if hyper(len(classes)).compare(product) > 0:
        raise ConstructionError(
            "counting_chain",
            f"{len(classes)} distinct tuples exceed the branching "
            f"product {product.brief()}; this is a bug",
        )
    target = profile.P(witness_index).pow_of_pow2(step)
    best = min(classes.values(), key=lambda grp: (-len(grp), min(grp)))
    kept = tuple(sorted(best))
    if hyper(len(kept)).compare(target) < 0:
        raise ConstructionError(
            "pigeonhole",
            f"largest class holds {len(kept)} successors, below the "
            f"target {target.brief()}",
        )
    record = {
        "classes": len(classes),
        "kept": len(kept),
        "target": target.brief(),
        "counting": chain,
    }
    return kept, record


def decide_thin(
    cond: TreeCondition,
    name: DeterminedName,
    keys,
    guard: int = _DEFAULT_GUARD,
) -> Tuple[TreeCondition, dict]:
    """Refine a condition until the name's values at ``keys`` are fixed.

    When every branch already agrees the condition comes back untouched;
    otherwise only the branches matching the lexicographically first
    leaf's values survive.  Returns the (possibly) thinned condition and
    the decided index -> value map.
    """
    if name.kind != "tuple":
        raise ConstructionError(
            "name_kind", f"thinning decides tuple names, got {name.kind}"
        )
    keys = tuple(sorted(keys))
    if not keys:
        return cond, {}
    for k in keys:
        if k not in name.keys:
            raise ConstructionError(
                "name_keys", f"index {k} is not carried by the name"
            )
    leaves = cond.level_set(name.depth, guard)
    projections = {}
    for leaf in leaves:
        value = value_on_branch(name, leaf)
        projections[leaf] = tuple((k, value[k]) for k in keys)
    pick = projections[leaves[0]]
    if all(projections[leaf] == pick for leaf in leaves):
        return cond, dict(pick)
    out: Optional[TreeCondition] = None
    for leaf in leaves:
        if projections[leaf] != pick:
            continue
        piece = cond.restrict(leaf)
        out = piece if out is None else out.union(piece)
    return out.normalize(guard), dict(pick)


class BoundingFusion:
    """Transcript of a completed bounding run.

    States are numbered from 1; ``conditions[i]`` is the condition of
    state i+1, with ``levels``, ``thresholds``, ``level_sets`` and
    ``values`` (one decided tuple per frontier node) kept in step.
    ``steps_log`` holds one JSON-ready record per construction step
    with every counting link that was asserted.
    """

    __slots__ = (
        "profile",
        "members",
        "name",
        "conditions",
        "levels",
        "thresholds",
        "level_sets",
        "values",
        "steps_log",
    )

    def __init__(
        self,
        profile: GrowthProfile,
        members: Tuple[int, ...],
        name: DeterminedName,
        conditions: List[TreeCondition],
        levels: List[int],
        thresholds: List[int],
        level_sets: List[Tuple[NodePath, ...]],
        values: List[Dict[NodePath, dict]],
        steps_log: List[dict],
    ):
        self.profile = profile
        self.members = members
        self.name = name
        self.conditions = conditions
        self.levels = levels
        self.thresholds = thresholds
        self.level_sets = level_sets
        self.values = values
        self.steps_log = steps_log

    @property
    def states(self) -> int:
        return len(self.conditions)

    @property
    def final(self) -> TreeCondition:
        return self.conditions[-1]

    def bound_slice(self, state: int, k: int) -> frozenset:
        """Decided values for index k over the frontier of ``state``.

        Defined for 1-based states past k; the same set comes back for
        every such state, which :func:`build_bounding_fusion`'s tests
        pin down as the stability of the final bound.
        """
        if not 1 <= state <= self.states:
            raise ConstructionError(
                "bound_incomplete", f"no state {state} in this run"
            )
        if state <= k or k >= self.thresholds[state - 1]:
            raise ConstructionError(
                "bound_incomplete",
                f"state {state} has not decided index {k} yet",
            )
        decided = self.values[state - 1]
        return frozenset(decided[a][k] for a in self.level_sets[state - 1])

    def final_bound(self) -> Dict[int, frozenset]:
        """The finite bound map produced by the run.

        Needs at least max(members) completed steps; each index's set
        is read off the last state and re-checked against its size and
        value limits.
        """
        top = max(self.members)
        if self.states <= top:
            raise ConstructionError(
                "bound_incomplete",
                f"{self.states} states cannot bound index {top}; "
                f"run at least {top} steps",
            )
        bound = {}
        for k in self.members:
            vals = self.bound_slice(self.states, k)
            if hyper(len(vals)).compare(self.profile.P(k)) > 0:
                raise ConstructionError(
                    "bound_malformed",
                    f"{len(vals)} values at index {k} exceed "
                    f"{self.profile.P(k).brief()}; this is a bug",
                )
            for v in vals:
                if hyper(v).compare(self.profile.N(k)) >= 0:
                    raise ConstructionError(
                        "bound_malformed",
                        f"value {v} at index {k} is not a child index; "
                        "this is a bug",
                    )
            bound[k] = vals
        return bound

    def to_json_dict(self) -> dict:
        out = {
            "members": list(self.members),
            "levels": list(self.levels),
            "thresholds": list(self.thresholds),
            "frontiers": [
                [format_path(a) for a in frontier]
                for frontier in self.level_sets
            ],
            "values": [
                {
                    format_path(a): {str(k): v for k, v in decided[a].items()}
                    for a in frontier
                }
                for frontier, decided in zip(self.level_sets, self.values)
            ],
            "steps": self.steps_log,
        }
        try:
            bound = self.final_bound()
        except ConstructionError:
            out["bound"] = None
        else:
            out["bound"] = {str(k): sorted(bound[k]) for k in self.members}
        return out


def _find_wide_witness(
    cond: TreeCondition,
    anchor: NodePath,
    members: Tuple[int, ...],
    threshold: int,
    step: int,
    obligation: NodePath,
) -> Tuple[NodePath, int]:
    """Node at or above ``anchor`` wide enough to concentrate on.

    Admissible nodes have a resolvable index m outside the tracked set,
    leave at least one tracked index in [threshold, m), and carry at
    least P_m^(step+1) successors.  The shallowest, lexicographically
    first admissible node wins.
    """
    profile = cond.profile

    def admissible(node: NodePath) -> Optional[int]:
        m = cond.node_index(node)
        if m is None or m in members:
            return None
        if not any(threshold <= k < m for k in members):
            return None
        demand = profile.P(m).pow_of_pow2(step + 1)
        if cond.child_count(node).compare(demand) < 0:
            return None
        return m

    found = []
    for node in cond.explicit_nodes():
        if len(node) < len(anchor) or node[: len(anchor)] != anchor:
            continue
        if node in cond.tails:
            continue
        m = admissible(node)
        if m is not None:
            found.append((node, m))
    for leaf in cond.tails:
        if len(leaf) >= len(anchor):
            if leaf[: len(anchor)] != anchor:
                continue
            node = leaf
        else:
            if anchor[: len(leaf)] != leaf:
                continue
            node = anchor
        while len(node) < len(anchor) + _DESCENT_CAP:
            m = admissible(node)
            if m is not None:
                found.append((node, m))
                break
            if cond.node_index(node) is None:
                break
            node = node + (0,)
    if not found:
        raise ConstructionError(
            "witness_search",
            f"obligation {format_path(obligation)} at step {step}: no "
            f"node above {format_path(anchor)} is wide enough to "
            f"concentrate (tracked indices {list(members)}, threshold "
            f"{threshold})",
        )
    return min(found, key=lambda pair: (len(pair[0]), pair[0]))


def _union_fold(pieces, guard: int) -> TreeCondition:
    out: Optional[TreeCondition] = None
    for piece in pieces:
        out = piece if out is None else out.union(piece)
    return out.normalize(guard)


def _spread_records(
    profile: GrowthProfile,
    members: Tuple[int, ...],
    threshold_prev: int,
    threshold_next: int,
    frontier: Tuple[NodePath, ...],
    decided: Dict[NodePath, dict],
    concentrate: bool,
) -> List[dict]:
    """Per-index value-spread checks for one new state."""
    records = []
    for k in members:
        if k >= threshold_next:
            continue
        spread = {decided[a][k] for a in frontier}
        limit = profile.P(k)
        if concentrate:
            derivation = "inherited" if k < threshold_prev else "tuple_count"
        else:
            derivation = "inherited" if k < threshold_prev else "frontier"
        record = {
            "k": k,
            "distinct": len(spread),
            "limit": limit.brief(),
            "derivation": derivation,
        }
        if hyper(len(spread)).compare(limit) > 0:
            raise ConstructionError(
                "value_spread_bound",
                f"index {k} sees {len(spread)} decided values, above "
                f"{limit.brief()}",
            )
        records.append(record)
    return records


def _check_frontier(
    profile: GrowthProfile,
    members: Tuple[int, ...],
    threshold_next: int,
    frontier_size: int,
) -> None:
    for k in members:
        if k < threshold_next:
            continue
        if hyper(frontier_size).compare(profile.P(k)) >= 0:
            raise ConstructionError(
                "frontier_bound",
                f"frontier of {frontier_size} is not below "
                f"{profile.P(k).brief()} at index {k}",
            )


def _frontier_links(
    profile: GrowthProfile,
    members: Tuple[int, ...],
    gap: int,
    witness_index: int,
    size_prev: int,
    size_kept: int,
    size_next: int,
) -> List[dict]:
    """The concentrate-step frontier estimate, one link at a time."""
    m = witness_index
    p_gap = profile.P(gap)
    n_m = profile.N(m)
    p_m = profile.P(m)
    product = p_m.shift(log2_exact(n_m))
    p_next = profile.P(m + 1)
    links = [
        (
            f"{size_next} < {size_prev} + {size_kept}",
            size_next < size_prev + size_kept,
        ),
        (
            f"{size_prev} + {size_kept} < P_{gap} + N_{m}",
            hyper(size_prev + size_kept).compare(p_gap.add(n_m)) < 0,
        ),
        (
            f"P_{gap} + N_{m} < P_{m} * N_{m}",
            p_gap.add(n_m).compare(product) < 0,
        ),
        (
            f"P_{m} * N_{m} == P_{m + 1}",
            product.compare(p_next) == 0,
        ),
    ]
    tail = [k for k in members if k >= m]
    if tail:
        links.extend(
            (
                f"P_{m + 1} <= P_{k}",
                p_next.compare(profile.P(k)) <= 0,
            )
            for k in tail
        )
    else:
        links.append((f"P_{m + 1} caps an empty tracked tail", True))
    out = []
    for claim, holds in links:
        if not holds:
            raise ConstructionError("frontier_bound", f"link failed: {claim}")
        out.append({"claim": claim, "holds": True})
    return out


def build_bounding_fusion(
    start: TreeCondition,
    members,
    name: DeterminedName,
    steps: int,
    guard: int = _DEFAULT_GUARD,
) -> BoundingFusion:
    """Run the bounding construction for ``steps`` steps.

    ``start`` must have a trunk of length at least two (its tip becomes
    the single frontier node of state 1) and must leave the tuple name
    decidable; ``members`` are the indices the final bound will cover,
    and the name must carry exactly those keys.

    Each step consumes one enumerated ambient node.  A node outside the
    current condition advances every frontier node one level down
    ("uniform" step).  A node still inside triggers a "concentrate"
    step: a wide witness is found above the frontier node covering it,
    the name is decided below every successor of the witness, and the
    largest agreeing class survives.  After either step the inclusion,
    level, threshold, freeze, witness, frontier and value-spread
    invariants are all re-checked from scratch; any failure raises
    ConstructionError with the failing check's name.
    """
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 0:
        raise ConstructionError(
            "steps", f"step count must be a natural: {steps!r}"
        )
    members = _as_members(members)
    if name.kind != "tuple":
        raise ConstructionError(
            "name_kind", f"bounding runs need a tuple name, got {name.kind}"
        )
    if name.profile != start.profile:
        raise ConstructionError(
            "profile_mismatch",
            "the name and the start condition live on different profiles",
        )
    if name.keys != members:
        raise ConstructionError(
            "name_keys",
            f"name carries keys {list(name.keys)}, tracked indices are "
            f"{list(members)}",
        )
    profile = start.profile
    paths = indexer(profile)

    tip = start.trunk()
    if len(tip) < 2:
        raise ConstructionError(
            "start_level",
            f"trunk {format_path(tip)} is too short; the construction "
            "needs a start of length at least two",
        )
    level = len(tip)
    threshold = level
    first_keys = [k for k in members if k < threshold]
    condition, decided_tip = decide_thin(start, name, first_keys, guard)
    if condition.level_set(level, guard) != (tip,):
        raise ConstructionError(
            "level_freeze", "thinning moved the trunk tip; this is a bug"
        )

    conditions = [condition]
    levels = [level]
    thresholds = [threshold]
    level_sets: List[Tuple[NodePath, ...]] = [(tip,)]
    values: List[Dict[NodePath, dict]] = [{tip: decided_tip}]
    steps_log: List[dict] = []
    _check_frontier(profile, members, threshold, 1)

    for step in range(1, steps + 1):
        cur = conditions[-1]
        cur_level = levels[-1]
        cur_threshold = thresholds[-1]
        frontier = level_sets[-1]
        decided_prev = values[-1]
        try:
            obligation = paths.path_of(step)
        except TreeIndexError as exc:
            raise ConstructionError(
                "obligation", f"step {step} has no ambient node: {exc}"
            ) from None

        record: dict = {"step": step, "obligation": format_path(obligation)}
        if cur.contains_node(obligation):
            anchor = min(
                a for a in frontier if a[: len(obligation)] == obligation
            )
            witness, witness_index = _find_wide_witness(
                cur, anchor, members, cur_threshold, step, obligation
            )
            gap = min(
                k for k in members if cur_threshold <= k < witness_index
            )
            next_level = len(witness) + 1
            next_threshold = witness_index
            fan = cur.restrict(witness).level_set(next_level, guard)
            keys = [k for k in members if k < next_threshold]
            pieces: Dict[NodePath, TreeCondition] = {}
            decided_next: Dict[NodePath, dict] = {}
            for node in fan:
                pieces[node], decided_next[node] = decide_thin(
                    cur.restrict(node), name, keys, guard
                )
            kept, selection = pigeonhole_select(
                profile, members, witness_index, fan, decided_next, step
            )
            survivors = list(kept)
            for a in frontier:
                if a == anchor:
                    continue
                landing = cur.restrict(a).level_set(next_level, guard)[0]
                pieces[landing], decided_next[landing] = decide_thin(
                    cur.restrict(landing), name, keys, guard
                )
                survivors.append(landing)
            next_frontier = tuple(sorted(survivors))
            next_condition = _union_fold(
                (pieces[a] for a in next_frontier), guard
            )
            record.update(
                {
                    "case": "concentrate",
                    "anchor": format_path(anchor),
                    "witness": format_path(witness),
                    "witness_index": witness_index,
                    "gap": gap,
                    "successors": len(fan),
                    "kept": len(kept),
                    "selection": selection,
                }
            )
            record["frontier_links"] = _frontier_links(
                profile,
                members,
                gap,
                witness_index,
                len(frontier),
                len(kept),
                len(next_frontier),
            )
            distinct_tuples = len(
                {
                    tuple(sorted(decided_next[a].items()))
                    for a in next_frontier
                }
            )
            if distinct_tuples > len(frontier) + 1:
                raise ConstructionError(
                    "value_spread_bound",
                    f"{distinct_tuples} decided tuples from a frontier "
                    f"of {len(frontier)}; this is a bug",
                )
            record["tuple_count"] = {
                "distinct": distinct_tuples,
                "limit": len(frontier) + 1,
            }
            if (
                cur.child_count(witness).compare(
                    profile.P(witness_index).pow_of_pow2(step + 1)
                )
                < 0
            ):
                raise ConstructionError(
                    "witness_count",
                    f"{format_path(witness)} lost its width; this is a bug",
                )
        else:
            next_level = cur_level + 1
            next_threshold = cur_threshold + 1
            keys = [k for k in members if k < next_threshold]
            pieces = {}
            decided_next = {}
            survivors = []
            for a in frontier:
                landing = cur.restrict(a).level_set(next_level, guard)[0]
                pieces[landing], decided_next[landing] = decide_thin(
                    cur.restrict(landing), name, keys, guard
                )
                survivors.append(landing)
            next_frontier = tuple(sorted(survivors))
            next_condition = _union_fold(
                (pieces[a] for a in next_frontier), guard
            )
            witness = None
            record.update(
                {
                    "case": "uniform",
                    "frontier": len(next_frontier),
                }
            )

        # one sweep of the chain invariants, from scratch
        if not next_condition.is_stronger(cur):
            raise ConstructionError(
                "inclusion", f"step {step} escaped its parent; this is a bug"
            )
        if not next_level > cur_level:
            raise ConstructionError(
                "level_monotone", f"level fell to {next_level} at step {step}"
            )
        if not next_threshold > cur_threshold:
            raise ConstructionError(
                "threshold_monotone",
                f"threshold fell to {next_threshold} at step {step}",
            )
        if next_condition.level_set(cur_level, guard) != frontier:
            raise ConstructionError(
                "level_freeze",
                f"step {step} disturbed the frozen level {cur_level}",
            )
        if next_condition.level_set(next_level, guard) != next_frontier:
            raise ConstructionError(
                "level_freeze",
                f"step {step} left stray nodes on level {next_level}",
            )
        if witness is not None:
            demand = profile.P(witness_index).pow_of_pow2(step)
            if next_condition.child_count(witness).compare(demand) < 0:
                raise ConstructionError(
                    "witness_count",
                    f"{format_path(witness)} keeps fewer than "
                    f"{demand.brief()} successors",
                )
        for a in next_frontier:
            panel = decided_next[a]
            parent = next(
                (u for u in frontier if a[: len(u)] == u), None
            )
            if parent is not None:
                old = decided_prev[parent]
                for k, v in old.items():
                    if panel.get(k) != v:
                        raise ConstructionError(
                            "value_extension",
                            f"{format_path(a)} redecides index {k}: "
                            f"{panel.get(k)} against {v}",
                        )
            for k, v in panel.items():
                verdict = decide(
                    next_condition.restrict(a), name, ("at", k, v), guard
                )
                if verdict != DECIDED_YES:
                    raise ConstructionError(
                        "decided_values",
                        f"{format_path(a)} does not force index {k} "
                        f"to {v} (got {verdict})",
                    )
        _check_frontier(profile, members, next_threshold, len(next_frontier))
        record["spread"] = _spread_records(
            profile,
            members,
            cur_threshold,
            next_threshold,
            next_frontier,
            decided_next,
            witness is not None,
        )
        record["level"] = next_level
        record["threshold"] = next_threshold

        conditions.append(next_condition)
        levels.append(next_level)
        thresholds.append(next_threshold)
        level_sets.append(next_frontier)
        values.append(decided_next)
        steps_log.append(record)

    return BoundingFusion(
        profile,
        members,
        name,
        conditions,
        levels,
        thresholds,
        level_sets,
        values,
        steps_log,
    )


def make_counter_name(
    profile: GrowthProfile,
    members,
    depth: Optional[int] = None,
    one_deeper: bool = False,
    guard: int = _DEFAULT_GUARD,
) -> DeterminedName:
    """Tuple name reading one branch entry per tracked index.

    For index k with enumerated node s_k, a branch through s_k yields
    the child index chosen directly after s_k; every other branch
    yields 0.  With ``one_deeper`` the entry one position further down
    is read instead (that variant can exceed the index's own branching
    value, which the counting checks will then reject).  The default
    depth is the least one that fixes every entry.
    """
    members = _as_members(members)
    paths = indexer(profile)
    anchors = {}
    for k in members:
        try:
            anchors[k] = paths.path_of(k)
        except TreeIndexError as exc:
            raise ConstructionError(
                "members", f"index {k} has no ambient node: {exc}"
            ) from None
    offset = 2 if one_deeper else 1
    need = max(len(s) + offset for s in anchors.values())
    if depth is None:
        depth = need
    elif depth < need:
        raise ConstructionError(
            "name_depth",
            f"depth {depth} cannot fix entries that sit {need} deep",
        )
    table = {}
    for node in full_condition(profile).level_set(depth, guard):
        entry = {}
        for k, s in anchors.items():
            if node[: len(s)] == s:
                entry[k] = node[len(s) + offset - 1]
            else:
                entry[k] = 0
        table[node] = entry
    return DeterminedName(profile, depth, "tuple", table)


def _validate_bound(
    profile: GrowthProfile, members: Tuple[int, ...], bound
) -> Dict[int, frozenset]:
    out = {}
    for k in members:
        if k not in bound:
            raise ConstructionError(
                "bound_malformed", f"bound gives no set for index {k}"
            )
        vals = frozenset(int(v) for v in bound[k])
        if hyper(len(vals)).compare(profile.P(k)) > 0:
            raise ConstructionError(
                "bound_malformed",
                f"{len(vals)} values at index {k} exceed "
                f"{profile.P(k).brief()}",
            )
        for v in vals:
            if v < 0 or hyper(v).compare(profile.N(k)) >= 0:
                raise ConstructionError(
                    "bound_malformed",
                    f"value {v} at index {k} is not a child index",
                )
        out[k] = vals
    return out


def verify_phi(bound: Dict[int, Iterable[int]], assignment) -> bool:
    """Whether the assignment lands inside the bound at every index."""
    for k, allowed in bound.items():
        if k not in assignment:
            return False
        if assignment[k] not in set(allowed):
            return False
    return True


def escape_witness(
    cond: TreeCondition,
    members,
    bound,
    guard: int = _DEFAULT_GUARD,
) -> Tuple[TreeCondition, int, int]:
    """Restrict ``cond`` so the counter name escapes the bound.

    Scans the tracked indices for one whose enumerated node lies in the
    condition with at least P_k^2 successors; since an admissible bound
    offers at most P_k values there and P_k^2 is strictly more, some
    successor index stays free.  Returns the restriction through the
    first such successor, the index used, and the chosen child value.
    """
    members = _as_members(members)
    profile = cond.profile
    checked = _validate_bound(profile, members, bound)
    paths = indexer(profile)
    for k in members:
        width_needed = profile.P(k).pow_of_pow2(2)
        if width_needed.compare(profile.P(k)) <= 0:
            continue
        try:
            node = paths.path_of(k)
        except TreeIndexError:
            continue
        if not cond.contains_node(node):
            continue
        if cond.child_count(node).compare(width_needed) < 0:
            continue
        fan = cond.restrict(node).level_set(len(node) + 1, guard)
        for child in fan:
            i = child[-1]
            if i not in checked[k]:
                return cond.restrict(child), k, i
    raise ConstructionError(
        "escape",
        "no tracked index has enough successors in the condition to "
        "escape the bound",
    )
