"""Tests for growth profiles and the richness threshold machinery."""

import json

import pytest

from towertree.errors import HyperValueError, ProfileError
from towertree.growth import (
    canonical_profile,
    check_inductive_step,
    explicit_profile,
    parse_profile_arg,
    profile_from_config,
    remark_certificate,
    richness_threshold,
    scaled_profile,
    seq_E,
    seq_N,
    seq_P,
)
from towertree.hyperint import hyper, pow2


def int_oracle(n_of, k_top):
    """Plain-int recurrence: returns (P, N, E) lists up to k_top."""
    P, N, E = [1], [], [0]
    for k in range(k_top + 1):
        N.append(n_of(k, P[k]))
        P.append(P[k] * N[k])
        E.append(E[k] + P[k])
    return P, N, E


def test_canonical_small_values_match_oracle():
    c = canonical_profile()
    P, N, E = int_oracle(lambda k, p: 1 if k == 0 else 2**p, 4)
    for k in range(5):
        assert c.N(k).to_int(2100) == N[k]
        assert c.P(k).to_int(2100) == P[k]
        assert c.E(k).to_int(2100) == E[k]


def test_canonical_listed_values():
    c = canonical_profile()
    assert [c.N(k).to_int(2100) for k in range(4)] == [1, 2, 4, 256]
    assert c.N(4) == pow2(pow2(11))
    assert [c.P(k).to_int() for k in range(5)] == [1, 1, 2, 8, 2048]
    assert c.E(4) == hyper(12)
    assert c.P(5) == pow2(2059)


def test_recurrence_invariants_canonical():
    c = canonical_profile()
    for k in range(24):
        assert c.P(k + 1) == c.P(k).shift(c.log2_N(k))
        assert c.N(k) == (hyper(1) if k == 0 else pow2(c.P(k)))
        assert c.E(k + 1) == c.E(k).add(c.P(k))


@pytest.mark.parametrize("cap", [2, 4, 6])
def test_recurrence_invariants_scaled(cap):
    s = scaled_profile(cap)
    P, N, _ = int_oracle(
        lambda k, p: 1 if k == 0 else 2 ** min(p, cap), 40
    )
    for k in range(40):
        assert s.N(k).to_int(400) == N[k]
        assert s.P(k).to_int(400) == P[k]
        assert s.P(k + 1) == s.P(k).shift(s.log2_N(k))
    for k in range(1, 40):
        assert s.N(k).to_int(400) >= 2
        assert s.N(k).compare(s.N(k - 1)) >= 0


def test_default_scaled_profile_shape():
    s = scaled_profile()
    assert s.cap == 4
    assert [s.N(k).to_int() for k in range(7)] == [1, 2, 4, 16, 16, 16, 16]
    assert [s.P(k).to_int() for k in range(7)] == [1, 1, 2, 8, 128, 2048, 32768]


def test_richness_thresholds_canonical():
    c = canonical_profile()
    assert [c.richness_threshold(m) for m in range(1, 7)] == [0, 0, 4, 4, 4, 4]
    assert c.richness_threshold(0) == 0


def test_threshold_failure_points():
    c = canonical_profile()
    assert not c.poly_bound_holds(3, 2)  # 8 > 4
    assert not c.poly_bound_holds(3, 3)  # 512 > 256
    assert c.poly_bound_holds(3, 4)
    assert c.poly_bound_holds(2, 2)  # 4 <= 4, the tight case


def test_inductive_step_examples():
    c = canonical_profile()
    assert check_inductive_step(c, 3, 4)
    assert not check_inductive_step(c, 3, 2)
    # The conjunction includes N_k >= m+1, which fails at k=0 for m=1
    # (N_0 = 1); only m=0 certifies at index 0.
    assert not check_inductive_step(c, 1, 0)
    assert check_inductive_step(c, 0, 0)


def test_monotone_propagation():
    c = canonical_profile()
    for m in range(7):
        for k in range(21):
            if c.check_inductive_step(m, k):
                assert c.poly_bound_holds(m, k)
                assert c.check_inductive_step(m, k + 1)


def test_remark_certificate_bundle():
    c = canonical_profile()
    cert = remark_certificate(c, 3)
    assert cert["K"] == 4
    assert cert["certificate_index"] == 4
    assert len(cert["direct_window"]) == 20
    assert all(entry["holds"] for entry in cert["direct_window"])
    assert len(cert["inductive_window"]) == 20
    assert all(entry["holds"] for entry in cert["inductive_window"])
    assert cert["failures_below_K"] == [2, 3]


def test_scaled_thresholds():
    s = scaled_profile(4)
    assert s.richness_threshold(0) == 0
    assert s.richness_threshold(1) is None
    with pytest.raises(ProfileError):
        s.richness_threshold(s.m_max + 1)


def test_explicit_profile_thresholds():
    p = explicit_profile([1, 2, 4, 256], m_max=3)
    assert p.richness_threshold(2) == 0
    q = explicit_profile([1, 2, 4, 16], m_max=3)
    assert q.richness_threshold(2) is None
    deg = explicit_profile([1, 2, 1, 2], m_max=2, strict=False)
    assert deg.richness_threshold(1) == 3


def test_sequence_index_guards():
    s = scaled_profile(4, k_max=16)
    s.P(16)
    with pytest.raises(ProfileError):
        s.P(17)
    with pytest.raises(ProfileError):
        seq_N(s, -1)
    with pytest.raises(ProfileError):
        seq_E(s, "3")


def test_enumeration_guard_on_huge_branching():
    c = canonical_profile()
    assert c.n_as_int(3) == 256
    with pytest.raises(HyperValueError):
        c.n_as_int(4)


def test_explicit_profile_validation():
    with pytest.raises(ProfileError):
        explicit_profile([2, 2])
    with pytest.raises(ProfileError):
        explicit_profile([1, 3])
    with pytest.raises(ProfileError):
        explicit_profile([1, 2, 1])
    with pytest.raises(ProfileError):
        explicit_profile([1, 4, 2])
    explicit_profile([1, 2, 1], strict=False)


def test_certificate_needs_canonical():
    with pytest.raises(ProfileError):
        scaled_profile(4).check_inductive_step(2, 3)
    with pytest.raises(ProfileError):
        remark_certificate(scaled_profile(4), 2)


def test_config_round_trip(tmp_path):
    for prof in [
        canonical_profile(),
        scaled_profile(6, k_max=64, m_max=5),
        explicit_profile([1, 2, 4], m_max=2),
    ]:
        clone = profile_from_config(prof.to_config())
        assert clone.profile_id == prof.profile_id
    assert parse_profile_arg("canonical").kind == "canonical"
    assert parse_profile_arg("scaled:6").cap == 6
    cfg = tmp_path / "prof.json"
    cfg.write_text(json.dumps({"kind": "scaled", "cap": 2, "k_max": 32}))
    loaded = parse_profile_arg(str(cfg))
    assert loaded.cap == 2 and loaded.k_max == 32
    with pytest.raises(ProfileError):
        parse_profile_arg("scaled:x")
    with pytest.raises(ProfileError):
        parse_profile_arg(str(tmp_path / "missing.json"))
    with pytest.raises(ProfileError):
        profile_from_config({"kind": "mystery"})


def test_threshold_licenses_tail():
    # Behind every canonical threshold answer sits a certificate; spot
    # check that the bound really continues past the direct window.
    c = canonical_profile()
    K = richness_threshold(c, 4)
    for k in range(K, K + 30):
        assert c.poly_bound_holds(4, k)


def test_memoization_shares_structure():
    c = canonical_profile()
    a = seq_P(c, 12)
    b = seq_P(c, 12)
    assert a is b
