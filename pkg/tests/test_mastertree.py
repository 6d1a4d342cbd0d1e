"""Tests for the indexed master tree against brute-force enumeration.

The oracle here deliberately avoids the library's arithmetic: level
widths and branching counts come from plain Python ints, and node
indices from a literal breadth-first, lexicographic enumeration.
"""

import pytest

from towertree.errors import TreeIndexError
from towertree.growth import canonical_profile, scaled_profile
from towertree.hyperint import pow2
from towertree.mastertree import (
    TreeIndexer,
    branching,
    format_path,
    ind,
    indexer,
    level_width,
    parse_path,
    path_of,
)


def int_branching(kind, cap, k_top):
    """Plain-int N_0..N_{k_top} per the defining recurrence."""
    N, P = [], [1]
    for k in range(k_top + 1):
        if k == 0:
            n = 1
        elif kind == "canonical":
            n = 2 ** P[k]
        else:
            n = 2 ** min(P[k], cap)
        N.append(n)
        P.append(P[k] * n)
    return N


def bfs_enumerate(n_of, depth):
    """All nodes of levels 0..depth in BFS-lex order, via plain ints."""
    order = [()]
    level = [()]
    ind_of = {(): 0}
    for _ in range(depth):
        nxt = []
        for node in level:
            for c in range(n_of[ind_of[node]]):
                child = node + (c,)
                ind_of[child] = len(order) + len(nxt)
                nxt.append(child)
        order.extend(nxt)
        level = nxt
    return order, ind_of


CANONICAL_N = int_branching("canonical", None, 3)


def test_canonical_levels_0_to_3_match_oracle():
    c = canonical_profile()
    order, ind_of = bfs_enumerate(CANONICAL_N, 3)
    assert len(order) == 264
    for node, k in ind_of.items():
        assert ind(c, node) == k
        assert path_of(c, k) == node


def test_order_agreement():
    c = canonical_profile()
    order, ind_of = bfs_enumerate(CANONICAL_N, 3)
    # Within a level, ind order is lex order; across levels, shorter
    # paths come first.  Both facts in one sweep over the oracle order.
    for a, b in zip(order, order[1:]):
        assert ind(c, a) < ind(c, b)
        assert (len(a), a) < (len(b), b)


def test_level_intervals_are_consecutive():
    c = canonical_profile()
    _, ind_of = bfs_enumerate(CANONICAL_N, 3)
    starts = [0, 1, 2, 4, 264]
    for l in range(4):
        at_level = sorted(k for node, k in ind_of.items() if len(node) == l)
        assert at_level == list(range(starts[l], starts[l + 1]))
        assert level_width(c, l).to_int() == starts[l + 1] - starts[l]


def test_spec_index_examples():
    c = canonical_profile()
    assert ind(c, ()) == 0
    assert ind(c, (0, 1)) == 3
    assert ind(c, (0, 0, 0)) == 4
    assert ind(c, (0, 1, 255)) == 263
    assert path_of(c, 0) == ()
    assert path_of(c, 5) == (0, 0, 1)
    assert path_of(c, 263) == (0, 1, 255)


def test_branching_examples():
    c = canonical_profile()
    assert branching(c, ()).to_int() == 1
    assert branching(c, (0,)).to_int() == 2
    assert branching(c, (0, 1)).to_int() == 256
    assert branching(c, (0, 0, 0)) == pow2(2048)


def test_level4_width_exact():
    c = canonical_profile()
    w4 = level_width(c, 4)
    assert w4.small is None and len(w4.terms) == 260
    n263 = c.N(263)
    assert w4.compare(n263) > 0
    assert w4.compare(n263.shift(1)) < 0


def test_invalid_paths_rejected():
    c = canonical_profile()
    with pytest.raises(TreeIndexError):
        ind(c, (1,))  # the root has a single child
    with pytest.raises(TreeIndexError):
        ind(c, (0, 2))  # node <0> has two children
    with pytest.raises(TreeIndexError):
        ind(c, (0, 0, 4))
    with pytest.raises(TreeIndexError):
        ind(c, (0, -1))
    with pytest.raises(TreeIndexError):
        ind(c, (0, "x"))


def test_index_caps_are_explicit_errors():
    c = canonical_profile()
    with pytest.raises(TreeIndexError):
        ind(c, (0, 0, 0, 0))  # level-4 indices exceed the default cap
    with pytest.raises(TreeIndexError):
        path_of(c, 264)
    with pytest.raises(TreeIndexError):
        path_of(c, -1)
    with pytest.raises(TreeIndexError):
        path_of(c, "12")


def test_raised_caps_resolve_level4_prefix():
    c = canonical_profile()
    wide = TreeIndexer(c, max_level=4, max_index=300)
    assert wide.ind((0, 0, 0, 0)) == 264
    assert wide.ind((0, 0, 0, 36)) == 300
    assert wide.path_of(264) == (0, 0, 0, 0)
    assert wide.path_of(299) == (0, 0, 0, 35)
    # The next sibling subtree starts astronomically far away.
    with pytest.raises(TreeIndexError):
        wide.ind((0, 0, 1, 0))
    with pytest.raises(TreeIndexError):
        wide.level_width(5)


def test_scaled_roundtrip_against_oracle():
    s = scaled_profile(4)
    n_of = int_branching("scaled", 4, 400)
    order, ind_of = bfs_enumerate(n_of, 4)
    assert len(order) == 344
    for node, k in ind_of.items():
        assert ind(s, node) == k
        assert path_of(s, k) == node
    assert [level_width(s, l).to_int() for l in range(5)] == [1, 1, 2, 20, 320]


def test_scaled_k_max_is_a_hard_cap():
    s = scaled_profile(4, k_max=100)
    with pytest.raises(TreeIndexError):
        TreeIndexer(s).path_of(101)
    deep = TreeIndexer(s)
    assert deep.path_of(100) == (0, 1, 0, 12)
    assert deep.ind((0, 1, 0, 12)) == 100
    with pytest.raises(TreeIndexError):
        deep.ind((0, 1, 15, 15))


def test_enum_guard_stops_wide_scans():
    s = scaled_profile(4)
    tight = TreeIndexer(s, enum_guard=10)
    assert tight.path_of(23) == (0, 1, 15)
    with pytest.raises(TreeIndexError):
        tight.path_of(30)


def test_path_serialization():
    assert parse_path("<>") == ()
    assert parse_path("<0>") == (0,)
    assert parse_path("<0,1,255>") == (0, 1, 255)
    assert format_path((0, 1, 255)) == "<0,1,255>"
    assert format_path(()) == "<>"
    for bad in ["", "<", "0,1", "<0,,1>", "<a>", "<0, 1>", "<0,1", "0,1>"]:
        with pytest.raises(TreeIndexError):
            parse_path(bad)


def test_default_indexer_is_shared():
    c = canonical_profile()
    assert indexer(c) is indexer(c)
