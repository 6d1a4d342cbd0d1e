"""Exact arithmetic for sparse sums of powers of two.

A value is stored either as a plain machine-range integer (below 2**64)
or as a strictly decreasing tuple of exponents, each exponent itself a
value of the same class, denoting ``sum(2**e for e in exponents)``.
This represents numbers like 2^(2^2059) exactly, far beyond what a flat
big integer can hold, while keeping comparison and addition cheap.

Only the operations the rest of the package needs exist: comparison,
addition, multiplication by a power of two (shift), multiplication by a
machine-range natural, and raising a single power of two to a
machine-range power.  There is no subtraction and no general product;
every inequality downstream is checked by comparison.

Values are immutable and hashable.  Structure sharing between values is
expected (the growth module memoizes heavily) and safe.
"""

from __future__ import annotations

import heapq
import sys
from typing import Iterable, Union

from .errors import HyperDepthError, HyperValueError

__all__ = [
    "SMALL_LIMIT",
    "HyperInt",
    "hyper",
    "pow2",
    "from_terms",
    "parse_hyper",
    "log2_exact",
    "hyper_sum",
    "depth_limit",
    "set_depth_limit",
    "ZERO",
    "ONE",
]

SMALL_LIMIT = 1 << 64

_depth_limit = 512

# Deep canonical towers (index ~260 and up) recurse close to their
# nesting depth in compare/add; the default interpreter limit of 1000
# frames is not enough headroom.
if sys.getrecursionlimit() < 6000:
    sys.setrecursionlimit(6000)


def depth_limit() -> int:
    """Current cap on exponent nesting depth."""
    return _depth_limit


def set_depth_limit(limit: int) -> int:
    """Set the nesting-depth cap; returns the previous cap."""
    global _depth_limit
    if not isinstance(limit, int) or limit < 1:
        raise HyperValueError("depth limit must be a positive integer")
    old = _depth_limit
    _depth_limit = limit
    return old


class HyperInt:
    """A nonnegative integer in canonical sparse power-of-two form.

    Exactly one of two shapes:

    * small: ``self.small`` is an ``int`` below 2**64, ``self.terms``
      is ``None``.
    * composite: ``self.small`` is ``None``, ``self.terms`` is a tuple
      of HyperInt exponents, strictly decreasing, whose leading entry
      is at least 64 (so the denoted value is at least 2**64).

    Canonical form makes structural equality coincide with value
    equality.  Do not call the constructor directly; use :func:`hyper`,
    :func:`pow2` or :func:`from_terms`.
    """

    __slots__ = ("small", "terms", "depth", "flat", "_hash")

    def __init__(self, small, terms, depth, flat, h):
        self.small = small
        self.terms = terms
        self.depth = depth
        self.flat = flat
        self._hash = h

    # -- basic protocol ------------------------------------------------

    def __repr__(self) -> str:
        return f"HyperInt({self.brief(60)})"

    def __str__(self) -> str:
        return self.brief()

    def __hash__(self) -> int:
        return self._hash

    def __bool__(self) -> bool:
        return self.small != 0

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, HyperInt):
            return NotImplemented
        if self._hash != other._hash:
            return False
        if self.small is not None or other.small is not None:
            return self.small == other.small
        return self.terms == other.terms

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __lt__(self, other) -> bool:
        return self.compare(other) < 0

    def __le__(self, other) -> bool:
        return self.compare(other) <= 0

    def __gt__(self, other) -> bool:
        return self.compare(other) > 0

    def __ge__(self, other) -> bool:
        return self.compare(other) >= 0

    def __add__(self, other):
        if isinstance(other, (HyperInt, int)):
            return self.add(other)
        return NotImplemented

    __radd__ = __add__

    # -- queries -------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.small == 0

    @property
    def is_power_of_two(self) -> bool:
        if self.small is not None:
            return self.small != 0 and (self.small & (self.small - 1)) == 0
        return len(self.terms) == 1

    def compare(self, other: Union["HyperInt", int]) -> int:
        """Total order on denoted values: -1, 0 or 1."""
        if not isinstance(other, HyperInt):
            other = _as_hyper(other)
        if self is other:
            return 0
        a, b = self.small, other.small
        if a is not None:
            if b is not None:
                return (a > b) - (a < b)
            return -1
        if b is not None:
            return 1
        for x, y in zip(self.terms, other.terms):
            c = x.compare(y)
            if c:
                return c
        # Common prefix of exponents; the longer sum is the larger
        # value, since every additional term is positive.
        na, nb = len(self.terms), len(other.terms)
        return (na > nb) - (na < nb)

    # -- arithmetic ----------------------------------------------------

    def add(self, other: Union["HyperInt", int]) -> "HyperInt":
        """Exact sum in canonical form."""
        other = _as_hyper(other)
        if self.small == 0:
            return other
        if other.small == 0:
            return self
        if self.small is not None and other.small is not None:
            return hyper(self.small + other.small)
        if self.flat and other.flat:
            return _add_flat(_int_exponents(self), _int_exponents(other))
        return _add_general(_hyper_exponents(self), _hyper_exponents(other))

    def shift(self, e: Union["HyperInt", int]) -> "HyperInt":
        """Multiply by 2**e (add e to every exponent)."""
        e = _as_hyper(e)
        if e.small == 0 or self.small == 0:
            return self
        # Adding the same e to strictly decreasing exponents keeps them
        # strictly decreasing, so no revalidation is needed.  Flat
        # values with a small shift stay on plain-int arithmetic.
        es = e.small
        if self.small is not None:
            if es is not None:
                if self.small.bit_length() + es <= 64:
                    return hyper(self.small << es)
                return _from_sorted_desc(
                    [hyper(i + es) for i in _bits_desc(self.small)]
                )
            return _from_sorted_desc(
                [_mk_small(i).add(e) for i in _bits_desc(self.small)]
            )
        if self.flat and es is not None:
            return _from_sorted_desc([hyper(t.small + es) for t in self.terms])
        return _from_sorted_desc([t.add(e) for t in self.terms])

    def mul_small(self, m: int) -> "HyperInt":
        """Multiply by a machine-range natural m."""
        if not isinstance(m, int) or isinstance(m, bool):
            raise HyperValueError("mul_small needs a plain int multiplier")
        if m < 0 or m >= SMALL_LIMIT:
            raise HyperValueError(f"multiplier out of range: {m}")
        if m == 0 or self.small == 0:
            return ZERO
        if m == 1:
            return self
        if self.small is not None:
            return hyper(self.small * m)
        if self.flat:
            # Fold shifted copies in plain-int exponent space and build
            # HyperInts only for the final exponents.
            base = _int_exponents(self)
            acc = None
            for i in _bits_desc(m):
                part = base if i == 0 else [e + i for e in base]
                acc = part if acc is None else _merge_desc_ints(acc, part)
            return _from_sorted_desc([hyper(e) for e in acc])
        acc = None
        for i in _bits_desc(m):
            part = self.shift(i)
            acc = part if acc is None else acc.add(part)
        return acc

    def pow_of_pow2(self, m: int) -> "HyperInt":
        """Raise a single power of two to the power m (exact)."""
        if not isinstance(m, int) or isinstance(m, bool) or m < 0:
            raise HyperValueError("exponent must be a nonnegative int")
        if not self.is_power_of_two:
            raise HyperValueError(
                f"pow_of_pow2 needs a single power of two, got {self.brief()}"
            )
        if m == 0:
            return ONE
        if m == 1:
            return self
        return pow2(log2_exact(self).mul_small(m))

    # -- conversion ----------------------------------------------------

    def to_int(self, max_bits: int = 4096) -> int:
        """The denoted value as a plain int, if below 2**max_bits.

        Raises HyperValueError for anything larger; this is the guard
        that keeps astronomically large values from being materialized
        by accident.
        """
        if max_bits < 1:
            raise HyperValueError("max_bits must be positive")
        if self.small is not None:
            if self.small.bit_length() > max_bits:
                raise HyperValueError(
                    f"value needs {self.small.bit_length()} bits, "
                    f"cap is {max_bits}"
                )
            return self.small
        lead = self.terms[0]
        if lead.small is None or lead.small >= max_bits:
            raise HyperValueError(
                f"value has leading exponent {lead.brief()}, "
                f"cap is 2^{max_bits}"
            )
        buf = bytearray((lead.small >> 3) + 1)
        for t in self.terms:
            buf[t.small >> 3] |= 1 << (t.small & 7)
        return int.from_bytes(buf, "little")

    def render(self) -> str:
        """Canonical text form; see :func:`parse_hyper` for the inverse.

        Small values render as decimal, composite values as a sum of
        ``2^(...)`` terms with recursively rendered exponents.  No
        whitespace is ever produced.
        """
        if self.small is not None:
            return str(self.small)
        return "+".join(f"2^({t.render()})" for t in self.terms)

    def brief(self, budget: int = 96) -> str:
        """Rendering with a hard output budget.

        Identical to :meth:`render` whenever that fits in ``budget``
        characters.  Deeply nested towers render to exponentially long
        strings, so anything user-facing (error messages, reprs, log
        fields) must go through this instead; a truncated result ends
        in an ellipsis and is not parseable.
        """
        pieces = []
        used = 0

        def emit(s: str) -> bool:
            nonlocal used
            if used + len(s) > budget:
                pieces.append("…")
                return False
            pieces.append(s)
            used += len(s)
            return True

        def walk(h: "HyperInt") -> bool:
            if h.small is not None:
                return emit(str(h.small))
            for i, t in enumerate(h.terms):
                if i and not emit("+"):
                    return False
                if not emit("2^(") or not walk(t) or not emit(")"):
                    return False
            return True

        walk(self)
        return "".join(pieces)


# -- construction ------------------------------------------------------

_INTERN: dict = {}


def _mk_small(v: int) -> HyperInt:
    got = _INTERN.get(v)
    if got is None:
        got = HyperInt(v, None, 0, True, hash(v))
        if v < 1024:
            _INTERN[v] = got
    return got


def _mk_terms(terms: tuple) -> HyperInt:
    depth = 1 + max(t.depth for t in terms)
    if depth > _depth_limit:
        raise HyperDepthError(depth, _depth_limit)
    flat = all(t.small is not None for t in terms)
    h = hash(tuple(t._hash for t in terms))
    return HyperInt(None, terms, depth, flat, h)


def hyper(n: Union[int, HyperInt]) -> HyperInt:
    """A HyperInt from a nonnegative Python int (or pass one through)."""
    if isinstance(n, HyperInt):
        return n
    if not isinstance(n, int) or isinstance(n, bool):
        raise HyperValueError(f"cannot build a HyperInt from {n!r}")
    if n < 0:
        raise HyperValueError(f"negative value: {n}")
    if n < SMALL_LIMIT:
        return _mk_small(n)
    return _mk_terms(tuple(_mk_small(i) for i in _bits_desc(n)))


def pow2(e: Union[int, HyperInt]) -> HyperInt:
    """2**e for any representable exponent e."""
    e = _as_hyper(e)
    if e.small is not None and e.small < 64:
        return _mk_small(1 << e.small)
    return _mk_terms((e,))


def from_terms(exponents: Iterable[Union[int, HyperInt]]) -> HyperInt:
    """Canonical value from strictly decreasing exponents.

    Rejects unordered or duplicate exponents; collapses to the small
    form automatically when the leading exponent is below 64.
    """
    terms = [_as_hyper(e) for e in exponents]
    for prev, cur in zip(terms, terms[1:]):
        if prev.compare(cur) <= 0:
            raise HyperValueError(
                "exponents must be strictly decreasing: "
                f"{prev.brief(48)} then {cur.brief(48)}"
            )
    return _from_sorted_desc(terms)


def _from_sorted_desc(terms) -> HyperInt:
    # from_terms minus the ordering check, for callers whose
    # construction already guarantees strictly decreasing exponents.
    if not terms:
        return ZERO
    lead = terms[0]
    if lead.small is not None and lead.small < 64:
        return _mk_small(sum(1 << t.small for t in terms))
    return _mk_terms(tuple(terms))


def log2_exact(x: Union[int, HyperInt]) -> HyperInt:
    """The exponent of a value that is a single power of two."""
    x = _as_hyper(x)
    if not x.is_power_of_two:
        raise HyperValueError(f"not a power of two: {x.brief()}")
    if x.small is not None:
        return _mk_small(x.small.bit_length() - 1)
    return x.terms[0]


def _as_hyper(x) -> HyperInt:
    if isinstance(x, HyperInt):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return hyper(x)
    raise HyperValueError(f"expected HyperInt or int, got {x!r}")


def _bits_desc(n: int):
    # Set-bit positions, highest first.  The bin() scan is linear in
    # the bit length; probing (n >> i) & 1 per position is quadratic.
    s = bin(n)
    top = len(s) - 3  # skip the "0b" prefix
    return [top - i for i, ch in enumerate(s[2:]) if ch == "1"]


def _int_exponents(x: HyperInt):
    # Requires x.flat; exponents as plain ints, descending.
    if x.small is not None:
        return _bits_desc(x.small)
    return [t.small for t in x.terms]


def _hyper_exponents(x: HyperInt):
    # Exponents as HyperInts, descending.
    if x.small is not None:
        return [_mk_small(i) for i in _bits_desc(x.small)]
    return list(x.terms)


def _merge_desc_ints(ea, eb):
    # Two-pointer merge of two descending plain-int exponent lists,
    # largest first so the common append-one-huge-term case costs a
    # single comparison before the remainder is copied wholesale.
    desc = []
    i, j, na, nb = 0, 0, len(ea), len(eb)
    while i < na and j < nb:
        if ea[i] >= eb[j]:
            desc.append(ea[i])
            i += 1
        else:
            desc.append(eb[j])
            j += 1
    desc.extend(ea[i:])
    desc.extend(eb[j:])
    # Carry sweep from the small end.  Each input is strictly sorted,
    # so any exponent occurs at most twice and one pending slot is
    # enough.
    out = []
    pend = None
    for e in reversed(desc):
        if pend is None:
            pend = e
        elif pend == e:
            pend = e + 1
        elif pend < e:
            out.append(pend)
            pend = e
        else:
            # The carry climbed past e; e's twin was already absorbed,
            # so e settles below the pending exponent.
            out.append(e)
    if pend is not None:
        out.append(pend)
    out.reverse()
    return out


def _add_flat(ea, eb) -> HyperInt:
    # hyper, not _mk_small: a carry can push an exponent to 2**64.
    return _from_sorted_desc([hyper(e) for e in _merge_desc_ints(ea, eb)])


def _add_general(ea, eb) -> HyperInt:
    # Same merge with HyperInt exponents.  The merged list is
    # non-increasing, so while the pending exponent is a raw stream
    # element it can only be equal to or below its successor, and
    # equality is settled by the stored hashes; a full (deep) compare
    # is needed only while a carry is in flight.
    desc = []
    i, j, na, nb = 0, 0, len(ea), len(eb)
    while i < na and j < nb:
        if ea[i].compare(eb[j]) >= 0:
            desc.append(ea[i])
            i += 1
        else:
            desc.append(eb[j])
            j += 1
    desc.extend(ea[i:])
    desc.extend(eb[j:])
    out = []
    pend = None
    carrying = False
    for e in reversed(desc):
        if pend is None:
            pend = e
        elif not carrying:
            if pend == e:
                pend = e.add(ONE)
                carrying = True
            else:
                out.append(pend)
                pend = e
        else:
            c = pend.compare(e)
            if c == 0:
                pend = e.add(ONE)
            elif c < 0:
                out.append(pend)
                pend = e
                carrying = False
            else:
                out.append(e)
    if pend is not None:
        out.append(pend)
    out.reverse()
    return _from_sorted_desc(out)


def hyper_sum(values: Iterable[Union[int, HyperInt]]) -> HyperInt:
    """Exact sum of many values in one counter pass.

    Equivalent to folding :meth:`HyperInt.add`, but all exponents are
    decomposed up front and merged through a single heap, so summing n
    values costs one pass instead of n increasingly wide ones.  Unlike
    the pairwise merge in ``add``, the heap handles exponents occurring
    with any multiplicity.
    """
    small_total = 0
    big = []
    for v in values:
        v = _as_hyper(v)
        if v.small is not None:
            small_total += v.small
        else:
            big.append(v)
    if not big:
        return hyper(small_total)
    if all(v.flat for v in big):
        heap = [e for v in big for e in _int_exponents(v)]
        if small_total:
            heap.extend(_int_exponents(hyper(small_total)))
        heapq.heapify(heap)
        out = []
        while heap:
            e = heapq.heappop(heap)
            if heap and heap[0] == e:
                heapq.heappop(heap)
                heapq.heappush(heap, e + 1)
            else:
                out.append(e)
        out.reverse()
        return _from_sorted_desc([hyper(e) for e in out])
    heap = [e for v in big for e in _hyper_exponents(v)]
    if small_total:
        heap.extend(_hyper_exponents(hyper(small_total)))
    heapq.heapify(heap)
    out = []
    while heap:
        e = heapq.heappop(heap)
        if heap and heap[0].compare(e) == 0:
            heapq.heappop(heap)
            heapq.heappush(heap, e.add(ONE))
        else:
            out.append(e)
    out.reverse()
    return _from_sorted_desc(out)


# -- parsing -----------------------------------------------------------


def parse_hyper(text: str) -> HyperInt:
    """Inverse of :meth:`HyperInt.render`.

    Grammar (no whitespace):  expr = term ('+' term)* ;
    term = '2^(' expr ')' | digits.  Terms are summed, so any
    well-formed expression is accepted, not only canonical renders.
    """
    if not isinstance(text, str) or not text:
        raise HyperValueError("empty input")
    value, pos = _parse_expr(text, 0)
    if pos != len(text):
        raise HyperValueError(f"trailing input at offset {pos}: {text[pos:]!r}")
    return value


def _parse_expr(text: str, pos: int):
    value, pos = _parse_term(text, pos)
    while pos < len(text) and text[pos] == "+":
        nxt, pos = _parse_term(text, pos + 1)
        value = value.add(nxt)
    return value, pos


def _parse_term(text: str, pos: int):
    if text.startswith("2^(", pos):
        inner, pos = _parse_expr(text, pos + 3)
        if pos >= len(text) or text[pos] != ")":
            raise HyperValueError(f"missing ')' at offset {pos}")
        return pow2(inner), pos + 1
    start = pos
    while pos < len(text) and text[pos].isdigit():
        pos += 1
    if pos == start:
        raise HyperValueError(
            f"expected digits or '2^(' at offset {start}: {text[start:start+8]!r}"
        )
    return hyper(int(text[start:pos])), pos


ZERO = hyper(0)
ONE = hyper(1)
