import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towertree.conditions import TreeCondition, full_condition
from towertree.errors import ConstructionError, DecodeError
from towertree.fusion import chain_from_json
from towertree.growth import scaled_profile
from towertree.minimality import build_splitting_fusion, decode_branch
from towertree.names import (
    DECIDED_YES,
    DeterminedName,
    decide,
    identity_set_name,
    value_on_branch,
)

SCALED = scaled_profile()


@pytest.fixture(scope="module")
def walkthrough():
    name = identity_set_name(SCALED, 3)
    fusion = build_splitting_fusion(full_condition(SCALED), name, 2)
    return fusion, name


def test_walkthrough_levels_and_survivors(walkthrough):
    fusion, _ = walkthrough
    assert fusion.levels == [0, 2, 3]
    assert [len(u) for u in fusion.level_sets] == [1, 2, 17]
    assert fusion.level_sets[1] == ((0, 0), (0, 1))


def test_walkthrough_witnesses(walkthrough):
    fusion, _ = walkthrough
    nodes = [w[0] for w in fusion.chain.witnesses]
    counts = [w[1].to_int() for w in fusion.chain.witnesses]
    assert nodes == [(0,), (0, 1)]
    assert counts == [2, 16]


def test_walkthrough_first_pair(walkthrough):
    fusion, _ = walkthrough
    alpha, yes = fusion.pair_query(1, (0, 0), (0, 1))
    assert alpha == 0
    assert yes == (0, 0)


def test_walkthrough_final_shape(walkthrough):
    # the in-side of the first pair shrinks to the single leaf whose
    # value contains 0; the out-side keeps its full fan
    fusion, _ = walkthrough
    final = fusion.final
    assert final.children == {
        (): (0,),
        (0,): (0, 1),
        (0, 0): (0,),
    }
    assert final.tails == frozenset({(0, 0, 0), (0, 1)})


def test_round_trip_over_every_branch(walkthrough):
    fusion, name = walkthrough
    leaves = fusion.final.level_set(3)
    assert len(leaves) == 17
    for leaf in leaves:
        assert decode_branch(fusion, value_on_branch(name, leaf)) == leaf


def test_pair_decisions_are_opposite(walkthrough):
    # dual route: re-decide every recorded pair on the final condition
    fusion, name = walkthrough
    final = fusion.final
    for n, survivors in enumerate(fusion.level_sets):
        for i, a in enumerate(survivors):
            for b in survivors[i + 1 :]:
                alpha, yes = fusion.pair_query(n, a, b)
                va = decide(final.restrict(a), name, ("in", alpha))
                vb = decide(final.restrict(b), name, ("in", alpha))
                assert {va, vb} == {"yes", "no"}
                assert (va == DECIDED_YES) == (yes == a)


def test_chain_replays_bit_exact(walkthrough):
    fusion, _ = walkthrough
    log = fusion.chain.to_json_dict()
    assert chain_from_json(log) == fusion.chain
    assert fusion.to_json_dict()["levels"] == [0, 2, 3]


def test_decode_matches_predicate_oracle_under_bit_flips(walkthrough):
    # ground truth built from decide() on the final condition, not from
    # the tables decode_branch reads
    fusion, name = walkthrough
    final = fusion.final
    forced_in = {}
    for n in (1, 2):
        survivors = fusion.level_sets[n]
        for a in survivors:
            for b in survivors:
                if a == b:
                    continue
                alpha, _ = fusion.pair_query(n, a, b)
                verdict = decide(final.restrict(a), name, ("in", alpha))
                forced_in[(n, a, b)] = (alpha, verdict == DECIDED_YES)

    def oracle(xs):
        current = ()
        for n in (1, 2):
            picks = []
            for a in fusion.level_sets[n]:
                checks = (
                    (alpha in xs) == forced
                    for b in fusion.level_sets[n]
                    if b != a
                    for alpha, forced in [forced_in[(n, a, b)]]
                )
                if all(checks):
                    picks.append(a)
            if len(picks) != 1 or picks[0][: len(current)] != current:
                return ("error", n)
            current = picks[0]
        return ("ok", current)

    leaves = final.level_set(3)
    for leaf in leaves:
        base = value_on_branch(name, leaf)
        for beta in range(name.theta):
            xs = frozenset(base ^ {beta})
            expected = oracle(xs)
            if expected[0] == "ok":
                assert decode_branch(fusion, xs) == expected[1]
            else:
                with pytest.raises(DecodeError) as exc:
                    decode_branch(fusion, xs)
                assert exc.value.level == expected[1]


def test_start_below_a_single_branch():
    name = identity_set_name(SCALED, 3)
    t0 = full_condition(SCALED).restrict((0, 1))
    fusion = build_splitting_fusion(t0, name, 2)
    assert fusion.levels == [0, 2, 3]
    assert [len(u) for u in fusion.level_sets] == [1, 1, 16]
    for leaf in fusion.final.level_set(3):
        assert decode_branch(fusion, value_on_branch(name, leaf)) == leaf


def test_zero_steps_is_trivial():
    name = identity_set_name(SCALED, 3)
    fusion = build_splitting_fusion(full_condition(SCALED), name, 0)
    assert fusion.levels == [0]
    assert fusion.level_sets == [((),)]
    assert decode_branch(fusion, frozenset({3})) == ()
    with pytest.raises(ConstructionError):
        fusion.pair_query(1, (0, 0), (0, 1))


def test_constant_name_is_rejected():
    level = full_condition(SCALED).level_set(3)
    constant = DeterminedName(
        SCALED, 3, "set", {leaf: frozenset({0}) for leaf in level}, theta=20
    )
    with pytest.raises(ConstructionError) as exc:
        build_splitting_fusion(full_condition(SCALED), constant, 1)
    assert exc.value.check == "freshness"


def test_tuple_name_is_rejected():
    level = full_condition(SCALED).level_set(3)
    tname = DeterminedName(
        SCALED, 3, "tuple", {leaf: {0: i} for i, leaf in enumerate(level)}
    )
    with pytest.raises(ConstructionError) as exc:
        build_splitting_fusion(full_condition(SCALED), tname, 1)
    assert exc.value.check == "name_kind"


def test_profile_mismatch_is_rejected():
    other = scaled_profile(cap=6)
    name = identity_set_name(other, 3)
    with pytest.raises(ConstructionError) as exc:
        build_splitting_fusion(full_condition(SCALED), name, 1)
    assert exc.value.check == "profile_mismatch"


def test_bad_step_count_is_rejected():
    name = identity_set_name(SCALED, 3)
    with pytest.raises(ConstructionError) as exc:
        build_splitting_fusion(full_condition(SCALED), name, -1)
    assert exc.value.check == "steps"


def test_marker_levels_cannot_outrun_the_name():
    # below a single branch the third step's obligation node is gone,
    # so the marker level only creeps up by one; level 4 pairs share
    # their depth-3 prefix and no query ordinal can tell them apart
    name = identity_set_name(SCALED, 3)
    t0 = full_condition(SCALED).restrict((0, 1))
    with pytest.raises(ConstructionError) as exc:
        build_splitting_fusion(t0, name, 3)
    assert exc.value.check == "pair_split"
    assert "<0,1,0,0>" in str(exc.value)


def test_witness_search_failure_is_reported():
    # two branches splitting only at depth 2: enough freshness, but by
    # the third step the obligation node needs more successors than the
    # capped profile ever provides above it
    name = identity_set_name(SCALED, 3)
    t0 = TreeCondition(
        SCALED,
        {(): (0,), (0,): (0,), (0, 0): (0, 1)},
        [(0, 0, 0), (0, 0, 1)],
    )
    fusion = build_splitting_fusion(t0, name, 2)
    assert fusion.levels == [0, 2, 3]
    with pytest.raises(ConstructionError) as exc:
        build_splitting_fusion(t0, name, 3)
    assert exc.value.check == "witness_search"


@settings(max_examples=15, deadline=None)
@given(st.permutations(range(20)))
def test_round_trip_for_relabeled_names(perm):
    level = full_condition(SCALED).level_set(3)
    name = DeterminedName(
        SCALED,
        3,
        "set",
        {leaf: frozenset({perm[i]}) for i, leaf in enumerate(level)},
        theta=20,
    )
    fusion = build_splitting_fusion(full_condition(SCALED), name, 2)
    for leaf in fusion.final.level_set(3):
        assert decode_branch(fusion, value_on_branch(name, leaf)) == leaf
