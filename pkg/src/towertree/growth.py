"""Growth profiles: the paired sequences P and N, with P_0 = N_0 = 1
and P_{k+1} = P_k * N_k, plus the running exponent sums E_k = sum of
P_i for i < k.

Three kinds of profile:

* canonical: N_k = 2^{P_k} for k >= 1 (the fast-growing family all the
  counting arguments are calibrated against);
* scaled: N_k = 2^{min(P_k, cap)}, keeping branching enumerable for
  simulation while preserving the product recurrence;
* explicit: a finite, caller-supplied list of N values.

Every profile keeps N_k a power of two; that keeps every P_k a single
power of two and lets the richness comparisons run on exponents.
"""

from __future__ import annotations

import json
from typing import Optional, Sequence, Union

from .errors import ProfileError
from .hyperint import HyperInt, ONE, ZERO, hyper, log2_exact, pow2

__all__ = [
    "GrowthProfile",
    "canonical_profile",
    "scaled_profile",
    "explicit_profile",
    "profile_from_config",
    "parse_profile_arg",
    "seq_P",
    "seq_N",
    "seq_E",
    "richness_threshold",
    "check_inductive_step",
    "remark_certificate",
]

_DEFAULT_SCALED_K_MAX = 512
_DEFAULT_SCALED_M_MAX = 8
_CERT_SCAN_LIMIT = 40


class GrowthProfile:
    """Immutable profile with lazily extended memo tables.

    Never constructed directly; use :func:`canonical_profile`,
    :func:`scaled_profile` or :func:`explicit_profile`.  The memo
    tables are append-only and shared; callers needing concurrent
    access must serialize construction (values themselves are
    immutable and freely shareable).
    """

    def __init__(self, kind, cap, k_max, m_max, explicit_n, strict):
        self.kind = kind
        self.cap = cap
        self.k_max = k_max
        self.m_max = m_max
        self._explicit_n = explicit_n
        self.strict = strict
        self._P = [ONE]
        self._N = []
        self._eN = []  # log2 of N_k, as HyperInt
        self._E = [ZERO]
        self._indexer = None  # cache slot for the mastertree module

    # -- identity --------------------------------------------------------

    @property
    def profile_id(self) -> str:
        if self.kind == "canonical":
            return "canonical"
        if self.kind == "scaled":
            return f"scaled:{self.cap}"
        ns = ",".join(str(n) for n in self._explicit_n)
        return f"explicit[{ns}]"

    def __repr__(self) -> str:
        return f"GrowthProfile({self.profile_id})"

    def __eq__(self, other):
        if not isinstance(other, GrowthProfile):
            return NotImplemented
        return self.profile_id == other.profile_id

    def __hash__(self):
        return hash(self.profile_id)

    # -- sequence access ---------------------------------------------------

    def _check_index(self, k) -> int:
        if not isinstance(k, int) or isinstance(k, bool) or k < 0:
            raise ProfileError(f"sequence index must be a natural, got {k!r}")
        if self.k_max is not None and k > self.k_max:
            raise ProfileError(
                f"index {k} beyond the profile cap k_max={self.k_max}"
            )
        return k

    def _n_value(self, k: int) -> HyperInt:
        if k == 0:
            return ONE
        if self.kind == "canonical":
            return pow2(self._P[k])
        if self.kind == "scaled":
            p = self._P[k]
            exp = p if p.compare(hyper(self.cap)) <= 0 else hyper(self.cap)
            return pow2(exp)
        return hyper(self._explicit_n[k])

    def _extend(self, k: int) -> None:
        while len(self._N) <= k:
            i = len(self._N)
            n_i = self._n_value(i)
            self._N.append(n_i)
            self._eN.append(log2_exact(n_i))
            self._P.append(self._P[i].shift(self._eN[i]))
            self._E.append(self._E[i].add(self._P[i]))

    def P(self, k) -> HyperInt:
        k = self._check_index(k)
        if k > 0:
            self._extend(k - 1)
        return self._P[k]

    def N(self, k) -> HyperInt:
        k = self._check_index(k)
        self._extend(k)
        return self._N[k]

    def E(self, k) -> HyperInt:
        k = self._check_index(k)
        if k > 0:
            self._extend(k - 1)
        return self._E[k]

    def log2_N(self, k) -> HyperInt:
        k = self._check_index(k)
        self._extend(k)
        return self._eN[k]

    def n_as_int(self, k, guard_bits: int = 63) -> int:
        """N_k as a machine int, for enumeration; errors if too large."""
        return self.N(k).to_int(guard_bits)

    # -- richness ---------------------------------------------------------

    def poly_bound_holds(self, m: int, k: int) -> bool:
        """Whether N_k is at least P_k^m (exact comparison)."""
        return self.N(k).compare(self.P(k).pow_of_pow2(m)) >= 0

    def check_inductive_step(self, m: int, k) -> bool:
        """The finite certificate that the bound N_k >= P_k^m persists.

        Checks m*E_k <= P_k and N_k >= m+1.  Together these push the
        bound from k to k+1: m*E_{k+1} = m*E_k + m*P_k <= (m+1)*P_k
        <= N_k*P_k = P_{k+1}, and N is nondecreasing.  Canonical
        profiles only; the argument leans on N_k = 2^{P_k}.
        """
        if self.kind != "canonical":
            raise ProfileError(
                "the inductive certificate applies to the canonical profile"
            )
        if not isinstance(m, int) or m < 0:
            raise ProfileError(f"certificate exponent must be natural: {m!r}")
        k = self._check_index(k)
        if self.E(k).mul_small(m).compare(self.P(k)) > 0:
            return False
        return self.N(k).compare(hyper(m + 1)) >= 0

    def richness_threshold(self, m: int) -> Optional[int]:
        """Least K with N_k >= P_k^m for every k from K up.

        Canonical profiles search for an inductive certificate to
        license the unbounded claim; scaled and explicit profiles check
        the declared range [0, k_max] literally and return None when
        the bound fails at k_max itself (no threshold exists within the
        declared range; legal, reported to the caller as None).
        """
        if not isinstance(m, int) or isinstance(m, bool) or m < 0:
            raise ProfileError(f"richness exponent must be natural: {m!r}")
        if self.kind == "canonical":
            return self._canonical_threshold(m)
        if self.m_max is not None and m > self.m_max:
            raise ProfileError(
                f"exponent {m} beyond the profile bound m_max={self.m_max}"
            )
        last_bad = None
        for k in range(self.k_max + 1):
            if not self.poly_bound_holds(m, k):
                last_bad = k
        if last_bad is None:
            return 0
        if last_bad == self.k_max:
            return None
        return last_bad + 1

    def _canonical_threshold(self, m: int) -> int:
        cert_at = None
        for k in range(_CERT_SCAN_LIMIT):
            if self.check_inductive_step(m, k):
                cert_at = k
                break
        if cert_at is None:
            raise ProfileError(
                f"no inductive certificate for m={m} within "
                f"{_CERT_SCAN_LIMIT} indices"
            )
        threshold = cert_at
        while threshold > 0 and self.poly_bound_holds(m, threshold - 1):
            threshold -= 1
        return threshold

    # -- serialization ------------------------------------------------------

    def to_config(self) -> dict:
        if self.kind == "canonical":
            return {"kind": "canonical"}
        if self.kind == "scaled":
            return {
                "kind": "scaled",
                "cap": self.cap,
                "k_max": self.k_max,
                "m_max": self.m_max,
            }
        return {
            "kind": "explicit",
            "N": list(self._explicit_n),
            "m_max": self.m_max,
            "strict": self.strict,
        }


_PROFILE_CACHE: dict = {}


def canonical_profile() -> GrowthProfile:
    got = _PROFILE_CACHE.get("canonical")
    if got is None:
        got = GrowthProfile("canonical", None, None, None, None, True)
        _PROFILE_CACHE["canonical"] = got
    return got


def scaled_profile(
    cap: int = 4,
    k_max: int = _DEFAULT_SCALED_K_MAX,
    m_max: int = _DEFAULT_SCALED_M_MAX,
) -> GrowthProfile:
    if not isinstance(cap, int) or cap < 1:
        raise ProfileError(f"scaled cap must be a positive int, got {cap!r}")
    if k_max < 1 or m_max < 0:
        raise ProfileError("k_max must be >= 1 and m_max >= 0")
    key = ("scaled", cap, k_max, m_max)
    got = _PROFILE_CACHE.get(key)
    if got is None:
        got = GrowthProfile("scaled", cap, k_max, m_max, None, True)
        _PROFILE_CACHE[key] = got
    return got


def explicit_profile(
    branching: Sequence[int],
    m_max: int = 4,
    strict: bool = True,
) -> GrowthProfile:
    """Profile from an explicit list of N values; N[0] must be 1.

    With strict=True (the default), enforces N_k >= 2 for k >= 1 and
    a nondecreasing sequence.  strict=False admits degenerate test
    profiles (branching 1) that the strict invariant forbids; they
    exist to exercise failure paths, not to model anything.
    """
    ns = list(branching)
    if not ns or ns[0] != 1:
        raise ProfileError("explicit profile needs N[0] == 1")
    for k, n in enumerate(ns):
        if not isinstance(n, int) or n < 1 or (n & (n - 1)) != 0:
            raise ProfileError(
                f"N[{k}] must be a positive power of two, got {n!r}"
            )
        if strict and k >= 1:
            if n < 2:
                raise ProfileError(f"N[{k}] must be >= 2 (strict profile)")
            if n < ns[k - 1] and k >= 2:
                raise ProfileError("N must be nondecreasing (strict profile)")
    return GrowthProfile("explicit", None, len(ns) - 1, m_max, tuple(ns), strict)


def profile_from_config(obj: Union[dict, str]) -> GrowthProfile:
    """Build a profile from a parsed JSON object (or a JSON string)."""
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise ProfileError(f"bad profile JSON: {exc}") from exc
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ProfileError("profile config must be an object with 'kind'")
    kind = obj["kind"]
    if kind == "canonical":
        return canonical_profile()
    if kind == "scaled":
        return scaled_profile(
            cap=obj.get("cap", 4),
            k_max=obj.get("k_max", _DEFAULT_SCALED_K_MAX),
            m_max=obj.get("m_max", _DEFAULT_SCALED_M_MAX),
        )
    if kind == "explicit":
        if "N" not in obj:
            raise ProfileError("explicit profile config needs 'N'")
        return explicit_profile(
            obj["N"], m_max=obj.get("m_max", 4), strict=obj.get("strict", True)
        )
    raise ProfileError(f"unknown profile kind: {kind!r}")


def parse_profile_arg(text: str) -> GrowthProfile:
    """Resolve a CLI --profile value: shorthand or a JSON file path.

    Shorthands: "canonical" and "scaled:<cap>".  Anything else is read
    as a path to a JSON config file.
    """
    if text == "canonical":
        return canonical_profile()
    if text.startswith("scaled:"):
        tail = text.split(":", 1)[1]
        try:
            cap = int(tail)
        except ValueError:
            raise ProfileError(f"bad scaled cap: {tail!r}") from None
        return scaled_profile(cap=cap)
    try:
        with open(text, "r", encoding="utf-8") as fh:
            return profile_from_config(json.load(fh))
    except OSError as exc:
        raise ProfileError(f"cannot read profile file {text!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProfileError(f"bad JSON in profile file {text!r}: {exc}") from exc


# -- module-level operation aliases -------------------------------------


def seq_P(profile: GrowthProfile, k: int) -> HyperInt:
    return profile.P(k)


def seq_N(profile: GrowthProfile, k: int) -> HyperInt:
    return profile.N(k)


def seq_E(profile: GrowthProfile, k: int) -> HyperInt:
    return profile.E(k)


def richness_threshold(profile: GrowthProfile, m: int) -> Optional[int]:
    return profile.richness_threshold(m)


def check_inductive_step(profile: GrowthProfile, m: int, k: int) -> bool:
    return profile.check_inductive_step(m, k)


def remark_certificate(profile: GrowthProfile, m: int, window: int = 20) -> dict:
    """Full evidence bundle for one exponent m on the canonical profile.

    Returns the threshold K, the least index carrying the inductive
    certificate, and two verification windows of `window` consecutive
    indices: direct bound checks from K, and certificate checks from
    the certificate index.
    """
    if profile.kind != "canonical":
        raise ProfileError("remark certification runs on the canonical profile")
    threshold = profile.richness_threshold(m)
    cert_at = None
    for k in range(_CERT_SCAN_LIMIT):
        if profile.check_inductive_step(m, k):
            cert_at = k
            break
    direct = [
        {"k": k, "holds": profile.poly_bound_holds(m, k)}
        for k in range(threshold, threshold + window)
    ]
    inductive = [
        {"k": k, "holds": profile.check_inductive_step(m, k)}
        for k in range(cert_at, cert_at + window)
    ]
    failures_below = [
        k for k in range(threshold) if not profile.poly_bound_holds(m, k)
    ]
    return {
        "m": m,
        "K": threshold,
        "certificate_index": cert_at,
        "direct_window": direct,
        "inductive_window": inductive,
        "failures_below_K": failures_below,
    }
