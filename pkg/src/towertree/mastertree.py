"""The indexed master tree.

Nodes are child-index paths (tuples of machine ints).  The tree is
profile-driven: the node whose index is k has exactly N_k children,
where the index function enumerates nodes breadth first and
lexicographically within a level, with ind(root) = 0.

Exactness policy: every answer is exact or an explicit TreeIndexError;
nothing is approximated.  On the canonical profile that limits index
resolution to levels 0..4 and indices 0..263 by default (level-4 node
indices already exceed any computable recurrence range), both caps
configurable.  Scaled profiles are limited by their declared k_max and
by the enumeration guard.
"""

from __future__ import annotations

from typing import Optional, Tuple

from .errors import ProfileError, TreeIndexError
from .hyperint import HyperInt, ZERO, hyper, hyper_sum
from .growth import GrowthProfile

__all__ = [
    "NodePath",
    "TreeIndexer",
    "indexer",
    "ind",
    "path_of",
    "branching",
    "level_width",
    "parse_path",
    "format_path",
]

NodePath = Tuple[int, ...]

_CANONICAL_MAX_LEVEL = 4
_CANONICAL_MAX_INDEX = 263
_DEFAULT_ENUM_GUARD = 200_000
_INT_BITS = 62


def format_path(path: NodePath) -> str:
    return "<" + ",".join(str(c) for c in path) + ">"


def parse_path(text: str) -> NodePath:
    """Inverse of format_path; accepts "<>", "<0>", "<0,1,255>"."""
    if not isinstance(text, str) or len(text) < 2:
        raise TreeIndexError(f"bad path text: {text!r}")
    if text[0] != "<" or text[-1] != ">":
        raise TreeIndexError(f"path must be wrapped in <>, got {text!r}")
    inner = text[1:-1]
    if not inner:
        return ()
    parts = inner.split(",")
    out = []
    for part in parts:
        if not part.isdigit():
            raise TreeIndexError(f"bad child index {part!r} in {text!r}")
        out.append(int(part))
    return tuple(out)


def _check_path_shape(path) -> NodePath:
    path = tuple(path)
    for c in path:
        if not isinstance(c, int) or isinstance(c, bool) or c < 0:
            raise TreeIndexError(f"child indices must be naturals: {c!r}")
    return path


class TreeIndexer:
    """Index bookkeeping for one profile.

    Keeps, per level, the starting index and width as machine ints for
    as long as they stay representable, plus lazily built prefix sums
    of branching counts inside each level (needed to rank a node among
    its level).  All methods are exact-or-error.
    """

    def __init__(
        self,
        profile: GrowthProfile,
        max_level: Optional[int] = None,
        max_index: Optional[int] = None,
        enum_guard: int = _DEFAULT_ENUM_GUARD,
    ):
        self.profile = profile
        if max_level is None and profile.kind == "canonical":
            max_level = _CANONICAL_MAX_LEVEL
        if max_index is None:
            max_index = (
                _CANONICAL_MAX_INDEX
                if profile.kind == "canonical"
                else profile.k_max
            )
        self.max_level = max_level
        self.max_index = max_index
        self.enum_guard = enum_guard
        self._starts = [0, 1]  # level_start for levels 0..len(_widths)
        self._widths = [1]  # int widths per fully sized level
        self._stop_reason = None  # why width extension ended, if it did
        self._frontier_width: Optional[HyperInt] = None
        self._prefix: dict = {}  # level -> list of cumulative HyperInt sums
        self._ind_memo = {(): 0}
        self._path_memo = {0: ()}

    # -- level geometry --------------------------------------------------

    def _try_extend_levels(self) -> bool:
        """Add one more level's start/width; False when extension ends."""
        if self._stop_reason is not None:
            return False
        lvl = len(self._widths)  # level whose width we are computing
        start = self._starts[lvl]
        prev_w = self._widths[lvl - 1] if lvl >= 1 else 1
        if prev_w > self.enum_guard:
            self._stop_reason = "enumeration guard"
            return False
        prev_start = self._starts[lvl - 1]
        total = 0
        for j in range(prev_w):
            try:
                n_j = self.profile.N(prev_start + j).to_int(_INT_BITS)
            except ProfileError:
                self._stop_reason = "profile index cap"
                return False
            except Exception:
                self._stop_reason = "branching too large"
                return False
            total += n_j
            if total > (1 << _INT_BITS):
                self._stop_reason = "width too large"
                return False
        self._widths.append(total)
        self._starts.append(start + total)
        return True

    def _level_known(self, l: int) -> bool:
        while len(self._widths) <= l:
            if not self._try_extend_levels():
                return False
        return True

    def level_start(self, l: int) -> int:
        if l < 0:
            raise TreeIndexError(f"negative level: {l}")
        while len(self._starts) <= l:
            if not self._try_extend_levels():
                raise TreeIndexError(
                    f"level {l} start not resolvable ({self._stop_reason})"
                )
        return self._starts[l]

    def level_width(self, l: int) -> HyperInt:
        """Exact node count of level l (error beyond the caps)."""
        if l < 0:
            raise TreeIndexError(f"negative level: {l}")
        if self.max_level is not None and l > self.max_level:
            raise TreeIndexError(
                f"level {l} beyond the level cap {self.max_level}"
            )
        if self._level_known(l):
            return hyper(self._widths[l])
        if l == len(self._widths) and self._stop_reason in (
            "branching too large",
            "width too large",
        ):
            if self._frontier_width is None:
                prev_w = self._widths[l - 1]
                if prev_w > self.enum_guard:
                    raise TreeIndexError(
                        f"level {l} width needs {prev_w} terms, "
                        f"guard is {self.enum_guard}"
                    )
                prev_start = self._starts[l - 1]
                self._frontier_width = hyper_sum(
                    self.profile.N(prev_start + j) for j in range(prev_w)
                )
            return self._frontier_width
        raise TreeIndexError(
            f"level {l} width not resolvable ({self._stop_reason})"
        )

    def _prefix_sums(self, l: int, upto: int):
        """Cumulative branching sums over the first `upto` nodes of level l."""
        if upto > self.enum_guard:
            raise TreeIndexError(
                f"prefix of {upto} nodes exceeds guard {self.enum_guard}"
            )
        sums = self._prefix.setdefault(l, [ZERO])
        start = self.level_start(l)
        while len(sums) <= upto:
            j = len(sums) - 1
            sums.append(sums[-1].add(self.profile.N(start + j)))
        return sums

    # -- the index function ------------------------------------------------

    def ind(self, path) -> int:
        path = _check_path_shape(path)
        got = self._ind_memo.get(path)
        if got is not None:
            return got
        level = len(path)
        if self.max_level is not None and level > self.max_level:
            raise TreeIndexError(
                f"{format_path(path)} is at level {level}, "
                f"cap is {self.max_level}"
            )
        if self.max_index is not None:
            # Whole-level short circuit: skip the per-node offset sums
            # when even the first node of the level is past the cap.
            try:
                start = self.level_start(level)
            except TreeIndexError:
                start = None
            if start is not None and start > self.max_index:
                raise TreeIndexError(
                    f"ind of {format_path(path)} is at least {start}, "
                    f"beyond the index cap {self.max_index}"
                )
        parent = path[:-1]
        parent_ind = self.ind(parent)
        child = path[-1]
        n = self.profile.N(parent_ind)
        if hyper(child).compare(n) >= 0:
            raise TreeIndexError(
                f"child {child} out of range at {format_path(parent)} "
                f"(branching {n.brief()})"
            )
        parent_rank = parent_ind - self.level_start(level - 1)
        before = self._prefix_sums(level - 1, parent_rank)[parent_rank]
        rank = before.add(hyper(child))
        ind_value = rank.add(hyper(self.level_start(level)))
        if self.max_index is not None and ind_value.compare(
            hyper(self.max_index)
        ) > 0:
            raise TreeIndexError(
                f"ind of {format_path(path)} exceeds the index cap "
                f"{self.max_index}"
            )
        k = ind_value.to_int(_INT_BITS)
        self._ind_memo[path] = k
        self._path_memo[k] = path
        return k

    def path_of(self, k: int) -> NodePath:
        if not isinstance(k, int) or isinstance(k, bool) or k < 0:
            raise TreeIndexError(f"node index must be a natural: {k!r}")
        got = self._path_memo.get(k)
        if got is not None:
            return got
        if self.max_index is not None and k > self.max_index:
            raise TreeIndexError(f"index {k} beyond the index cap "
                                 f"{self.max_index}")
        level = None
        l = 0
        while True:
            if not self._level_known(l):
                # Start of level l is known, width is not; k landing at
                # or past the start belongs to this frontier level.
                if len(self._starts) > l and self._starts[l] <= k:
                    level = l
                    break
                raise TreeIndexError(
                    f"index {k} not resolvable ({self._stop_reason})"
                )
            if self._starts[l] <= k < self._starts[l] + self._widths[l]:
                level = l
                break
            l += 1
        if self.max_level is not None and level > self.max_level:
            raise TreeIndexError(
                f"index {k} lies at level {level}, cap is {self.max_level}"
            )
        path = self._node_at(level, k - self._starts[level])
        self._path_memo[k] = path
        self._ind_memo[path] = k
        return path

    def _node_at(self, l: int, rank: int) -> NodePath:
        if l == 0:
            if rank != 0:
                raise TreeIndexError(f"rank {rank} at the root level")
            return ()
        prev_start = self.level_start(l - 1)
        prev_width = self._widths[l - 1]
        if prev_width > self.enum_guard:
            raise TreeIndexError(
                f"scanning level {l - 1} needs {prev_width} steps, "
                f"guard is {self.enum_guard}"
            )
        cum = 0
        for j in range(prev_width):
            n_j = self.profile.N(prev_start + j)
            rem = rank - cum
            if hyper(rem).compare(n_j) < 0:
                return self._node_at(l - 1, j) + (rem,)
            cum += n_j.to_int(_INT_BITS)
        raise TreeIndexError(f"rank {rank} beyond level {l}")

    def branching(self, path) -> HyperInt:
        """Child count of the node, N(ind(path))."""
        return self.profile.N(self.ind(path))

    def validate_path(self, path) -> NodePath:
        path = _check_path_shape(path)
        # Child bounds are checked by ind on every prefix.
        self.ind(path)
        return path


def indexer(profile: GrowthProfile) -> TreeIndexer:
    """The shared default-cap indexer of a profile."""
    if profile._indexer is None:
        profile._indexer = TreeIndexer(profile)
    return profile._indexer


def ind(profile: GrowthProfile, path) -> int:
    return indexer(profile).ind(path)


def path_of(profile: GrowthProfile, k: int) -> NodePath:
    return indexer(profile).path_of(k)


def branching(profile: GrowthProfile, path) -> HyperInt:
    return indexer(profile).branching(path)


def level_width(profile: GrowthProfile, l: int) -> HyperInt:
    return indexer(profile).level_width(l)
