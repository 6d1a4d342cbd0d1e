"""Fusion chains: clause-by-clause validation, freezing, intersection."""

import pytest

from towertree.conditions import TreeCondition, full_condition
from towertree.errors import FusionError
from towertree.fusion import FusionChain, chain_from_json
from towertree.growth import canonical_profile, scaled_profile


def clause_of(excinfo):
    return excinfo.value.clause


# -- happy paths ------------------------------------------------------------


def test_constant_canonical_chain():
    c = canonical_profile()
    full = full_condition(c)
    ch = FusionChain(full, 0)
    ch.push_step(full, 2, (0,))
    ch.push_step(full, 3, (0, 0))
    ch.push_step(full, 4, (0, 0, 0))
    ch.push_step(full, 5, (0, 1, 0))
    assert ch.n_cur == 4
    assert ch.levels == [0, 2, 3, 4, 5]
    # successor counts certified against the ambient widths, including
    # the two astronomically large ones
    assert ch.witnesses[0][1].to_int() == 2
    assert ch.witnesses[1][1].to_int() == 4
    assert ch.witnesses[2][1] == c.N(4)
    assert ch.witnesses[3][1] == c.N(8)
    assert ch.intersect() == full


def test_witnesses_may_be_omitted_once_the_node_is_gone():
    s = scaled_profile()
    side = full_condition(s).restrict((0, 1))
    ch = FusionChain(side, 0)
    ch.push_step(side, 2, (0,))
    ch.push_step(side, 3, (0, 1))
    # the node of index 2 is <0,0>, which this tree dropped
    ch.push_step(side, 4)
    assert ch.n_cur == 3
    assert ch.witnesses[2] is None
    assert ch.intersect() == side


def test_thinning_above_the_frozen_level():
    s = scaled_profile()
    full = full_condition(s)
    thinned = TreeCondition(
        s,
        {(): (0,), (0,): (0, 1), (0, 0): (0, 1), (0, 1): tuple(range(16))},
        [(0, 0, 0), (0, 0, 1)] + [(0, 1, i) for i in range(16)],
    )
    ch = FusionChain(full, 0)
    ch.push_step(full, 2, (0,))
    ch.push_step(thinned, 3, (0, 1))
    assert ch.witnesses[1][1].to_int() == 16
    final = ch.intersect()
    assert final == thinned
    # frozen levels of the limit agree with every stage
    for cond, level in zip(ch.conditions, ch.levels):
        assert final.level_set(level) == cond.level_set(level)


def test_freeze_check_stays_symbolic_on_wide_levels():
    # freezing level 3 of the canonical tree compares 260 nodes worth
    # of structure without ever enumerating level 4
    c = canonical_profile()
    full = full_condition(c)
    pieces = {a: full.restrict(a + (0,)) for a in full.level_set(3)}
    thinned = full.amalgamate(3, pieces)
    ch = FusionChain(full, 3)
    ch.push_step(thinned, 4, (0,))
    assert ch.n_cur == 1


def test_intersect_richness_certificate():
    c = canonical_profile()
    side = full_condition(c).restrict((0, 1))
    ch = FusionChain(side, 0)
    ch.push_step(side, 2, (0,))
    ch.push_step(side, 3, (0, 1))
    ch.push_step(side, 4)
    report = ch.richness_report()
    assert report.ok
    # the depth-2 obligation at <0,1> outgrows its own branching
    # (256 < 8^3) and is discharged one level down the tail
    rec = report.witness((0, 1), 3)
    assert rec["via"] == "tail"
    assert rec["witness"] == "<0,1,0>"
    assert rec["witness_ind"] == 8
    direct = report.witness((0, 1), 2)
    assert direct["via"] == "explicit"
    assert direct["count"] == "256"


# -- named clause rejections ---------------------------------------------------


def test_level_monotone_clause():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 2)
    with pytest.raises(FusionError) as exc:
        ch.push_step(full, 2, (0,))
    assert clause_of(exc) == "level_monotone"
    with pytest.raises(FusionError) as exc:
        ch.push_step(full, 1, (0,))
    assert clause_of(exc) == "level_monotone"


def test_inclusion_clause():
    s = scaled_profile()
    full = full_condition(s)
    left = full.restrict((0, 0))
    right = full.restrict((0, 1))
    ch = FusionChain(left, 0)
    with pytest.raises(FusionError) as exc:
        ch.push_step(right, 1, (0,))
    assert clause_of(exc) == "inclusion"
    with pytest.raises(FusionError) as exc:
        ch.push_step(full_condition(canonical_profile()), 1, (0,))
    assert clause_of(exc) == "inclusion"


def test_level_freeze_clause():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 2)
    with pytest.raises(FusionError) as exc:
        ch.push_step(full.restrict((0, 0)), 3, (0,))
    assert clause_of(exc) == "level_freeze"


def test_witness_missing_clause():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 0)
    with pytest.raises(FusionError) as exc:
        ch.push_step(full, 1)
    assert clause_of(exc) == "witness_missing"


def test_witness_extends_clause():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 0)
    with pytest.raises(FusionError) as exc:
        ch.push_step(full, 2, ())  # equal to the obligation node
    assert clause_of(exc) == "witness_extends"
    ch.push_step(full, 2, (0,))
    with pytest.raises(FusionError) as exc:
        ch.push_step(full, 3, (1, 0))  # not above <0>
    assert clause_of(exc) == "witness_extends"


def test_witness_level_clause():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 0)
    with pytest.raises(FusionError) as exc:
        ch.push_step(full, 2, (0, 0))
    assert clause_of(exc) == "witness_level"


def test_witness_member_clause():
    s = scaled_profile()
    side = full_condition(s).restrict((0, 0))
    ch = FusionChain(side, 0)
    ch.push_step(side, 2, (0,))
    with pytest.raises(FusionError) as exc:
        ch.push_step(side, 3, (0, 1))
    assert clause_of(exc) == "witness_member"


def test_witness_count_clause():
    s = scaled_profile()
    full = full_condition(s)
    starved = TreeCondition(
        s,
        {(): (0,), (0,): (0, 1), (0, 0): (0,)},
        [(0, 0, 0), (0, 1)],
    )
    ch = FusionChain(full, 0)
    ch.push_step(full, 2, (0,))
    with pytest.raises(FusionError) as exc:
        ch.push_step(starved, 3, (0, 0))  # one successor, needs P_2 = 2
    assert clause_of(exc) == "witness_count"


def test_witness_count_requires_a_resolvable_index():
    c = canonical_profile()
    full = full_condition(c)
    ch = FusionChain(full, 0)
    ch.push_step(full, 2, (0,))
    ch.push_step(full, 3, (0, 0))
    ch.push_step(full, 4, (0, 0, 0))
    ch.push_step(full, 5, (0, 1, 0))
    # any strict extension of the depth-3 obligation node lives on
    # level 4, beyond the index caps: its count cannot be certified
    with pytest.raises(FusionError) as exc:
        ch.push_step(full, 6, (0, 0, 0, 0))
    assert clause_of(exc) == "witness_count"


def test_obligation_unresolvable_clause():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 0)
    # simulate a chain that already worked through every resolvable
    # index; the next obligation node has index 513, beyond the caps
    ch.conditions = [full] * 514
    ch.levels = list(range(514))
    ch.witnesses = [None] * 513
    with pytest.raises(FusionError) as exc:
        ch.push_step(full, 600)
    assert clause_of(exc) == "obligation_unresolvable"


def test_error_strings_carry_the_clause():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 0)
    with pytest.raises(FusionError, match=r"^\[witness_missing\]"):
        ch.push_step(full, 1)


# -- intersect sanity ---------------------------------------------------------------


def test_intersect_detects_corrupted_state():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 0)
    ch.push_step(full, 2, (0,))
    ch.push_step(full, 3, (0, 1))  # count 16 recorded
    ch.conditions[-1] = TreeCondition(
        s,
        {(): (0,), (0,): (0, 1), (0, 1): (3, 4)},
        [(0, 0), (0, 1, 3), (0, 1, 4)],
    )
    with pytest.raises(FusionError) as exc:
        ch.intersect()
    assert clause_of(exc) == "intersect_witness"


# -- replay ------------------------------------------------------------------------


def test_log_replay_is_bit_exact():
    s = scaled_profile()
    full = full_condition(s)
    thinned = TreeCondition(
        s,
        {(): (0,), (0,): (0, 1), (0, 0): (0, 1), (0, 1): tuple(range(16))},
        [(0, 0, 0), (0, 0, 1)] + [(0, 1, i) for i in range(16)],
    )
    ch = FusionChain(full, 0)
    ch.push_step(full, 2, (0,))
    ch.push_step(thinned, 3, (0, 1))
    log = ch.to_json_dict()
    assert log["steps"][1]["witness"] == {"node": "<0,1>", "count": "16"}
    back = chain_from_json(log)
    assert back == ch
    assert back.to_json_dict() == log


def test_replay_reverifies_every_clause():
    s = scaled_profile()
    full = full_condition(s)
    ch = FusionChain(full, 0)
    ch.push_step(full, 2, (0,))
    log = ch.to_json_dict()
    log["steps"][0]["witness"]["node"] = "<>"
    with pytest.raises(FusionError) as exc:
        chain_from_json(log)
    assert clause_of(exc) == "witness_extends"
    with pytest.raises(FusionError):
        chain_from_json({"initial": {}})
