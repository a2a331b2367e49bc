"""Exact combinatorics of theta characteristics.

A characteristic is a pair of length-g bit vectors [eps; delta], added
coordinatewise over Z_2.  Everything here is exact integer arithmetic;
no numerics enter this module.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache

EVEN = "even"
ODD = "odd"

# 2^{2g} characteristics; g=8 means 65536, still fast to enumerate exhaustively.
MAX_ENUM_GENUS = 8

_COMPACT_RE = re.compile(r"^\[([01]+);([01]+)\]$")
_VERBOSE_RE = re.compile(r"^eps:([01]+)\s+delta:([01]+)$")


@dataclass(frozen=True)
class Characteristic:
    """A theta characteristic m = [eps; delta] with eps, delta in Z_2^g."""

    eps: tuple
    delta: tuple

    def __post_init__(self):
        if len(self.eps) != len(self.delta):
            raise ValueError("eps and delta must have equal length")
        if not self.eps:
            raise ValueError("genus must be positive")
        for bit in itertools.chain(self.eps, self.delta):
            if bit not in (0, 1):
                raise ValueError("characteristic entries must be 0 or 1")

    @property
    def g(self):
        return len(self.eps)

    def __add__(self, other):
        if self.g != other.g:
            raise ValueError("genus mismatch")
        return Characteristic(
            tuple(a ^ b for a, b in zip(self.eps, other.eps)),
            tuple(a ^ b for a, b in zip(self.delta, other.delta)),
        )

    def column(self, a):
        """Column a (1-based) as a genus-1 characteristic."""
        return Characteristic((self.eps[a - 1],), (self.delta[a - 1],))

    def compact(self):
        return "[%s;%s]" % (
            "".join(map(str, self.eps)),
            "".join(map(str, self.delta)),
        )

    def verbose(self):
        return "eps:%s delta:%s" % (
            "".join(map(str, self.eps)),
            "".join(map(str, self.delta)),
        )

    def __str__(self):
        return self.compact()

    @staticmethod
    def zero(g):
        return Characteristic((0,) * g, (0,) * g)

    @staticmethod
    def parse(text):
        """Parse either the compact "[110;110]" or "eps:110 delta:110" form."""
        text = text.strip()
        m = _COMPACT_RE.match(text) or _VERBOSE_RE.match(text)
        if m is None:
            raise ValueError("cannot parse characteristic: %r" % text)
        eps, delta = m.group(1), m.group(2)
        if len(eps) != len(delta):
            raise ValueError("eps and delta must have equal length: %r" % text)
        return Characteristic(tuple(map(int, eps)), tuple(map(int, delta)))


def parity(m):
    """Return EVEN or ODD according to eps . delta mod 2."""
    return EVEN if sum(a * b for a, b in zip(m.eps, m.delta)) % 2 == 0 else ODD


def is_even(m):
    return parity(m) == EVEN


def scalar_class(m):
    """The scalar product <eps, delta> taken in Z: the number of (1,1) columns."""
    return sum(a * b for a, b in zip(m.eps, m.delta))


def sign(m):
    """e(m) = (-1)^{<eps,delta>}."""
    return -1 if scalar_class(m) % 2 else 1


def enumerate_characteristics(g, parity_filter=None, class_filter=None):
    """All 2^{2g} characteristics of genus g, in lexicographic (eps, delta) order.

    parity_filter: EVEN, ODD, or None; class_filter: an integer l or None.
    """
    if g < 1:
        raise ValueError("genus must be positive")
    if g > MAX_ENUM_GENUS:
        raise ValueError("enumeration bound exceeded: g=%d > %d" % (g, MAX_ENUM_GENUS))
    out = []
    for eps in itertools.product((0, 1), repeat=g):
        for delta in itertools.product((0, 1), repeat=g):
            m = Characteristic(eps, delta)
            if parity_filter is not None and parity(m) != parity_filter:
                continue
            if class_filter is not None and scalar_class(m) != class_filter:
                continue
            out.append(m)
    return out


def is_azygetic_triple(m1, m2, m3):
    """True iff e(m1) e(m2) e(m3) e(m1+m2+m3) = -1."""
    if not (m1.g == m2.g == m3.g):
        raise ValueError("genus mismatch")
    return sign(m1) * sign(m2) * sign(m3) * sign(m1 + m2 + m3) == -1


@dataclass(frozen=True)
class FundamentalSystem:
    """A special fundamental system: g odd and g+2 even characteristics,
    every triple azygetic, summing to zero."""

    odds: tuple
    evens: tuple

    @property
    def g(self):
        return len(self.odds)

    def members(self):
        return self.odds + self.evens

    def essential_members(self):
        """The 2g+1 members forming an essential basis: drop e_1 = 0."""
        return self.odds + self.evens[1:]


@lru_cache(maxsize=None)
def special_fundamental_system(g):
    """The standard special fundamental system of genus g.

    o_j = [unit_j ; 1^j 0^{g-j}],
    e_1 = 0, e_k = [unit_{k-1} ; 1^{k-2} 0^...] for 2 <= k <= g+1,
    e_{g+2} = [0 ; 1^g].
    """
    if g < 1:
        raise ValueError("genus must be positive")

    def unit(j):
        return tuple(1 if a == j else 0 for a in range(1, g + 1))

    def ones(k):
        return tuple(1 if a <= k else 0 for a in range(1, g + 1))

    odds = tuple(Characteristic(unit(j), ones(j)) for j in range(1, g + 1))
    evens = [Characteristic.zero(g)]
    for k in range(2, g + 2):
        evens.append(Characteristic(unit(k - 1), ones(k - 2)))
    evens.append(Characteristic((0,) * g, ones(g)))
    return FundamentalSystem(odds, tuple(evens))


def b_char(fs):
    """b^g = o_1 + ... + o_g, the sum of the odd members."""
    total = Characteristic.zero(fs.g)
    for o in fs.odds:
        total = total + o
    return total


def _gf2_solve(columns, target):
    """Solve sum_{i in S} columns[i] = target over Z_2.

    columns are bitmask ints of the 2g-bit vectors.  Returns (particular
    solution as index set, kernel basis as list of index sets) or None if
    unsolvable.
    """
    n = len(columns)
    # rows of the system: one per bit position
    nbits = max(c.bit_length() for c in columns + [target, 1])
    # build augmented rows: for bit position b, row over the n unknowns
    rows = []
    for b in range(nbits):
        row = 0
        for i, c in enumerate(columns):
            if (c >> b) & 1:
                row |= 1 << i
        rhs = (target >> b) & 1
        rows.append([row, rhs])
    # Gaussian elimination over GF(2)
    pivots = []  # (column index, row)
    used = [False] * len(rows)
    for col in range(n):
        pivot_row = None
        for r, (row, _) in enumerate(rows):
            if not used[r] and (row >> col) & 1:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        used[pivot_row] = True
        pivots.append((col, pivot_row))
        prow, prhs = rows[pivot_row]
        for r, (row, rhs) in enumerate(rows):
            if r != pivot_row and (row >> col) & 1:
                rows[r] = [row ^ prow, rhs ^ prhs]
    # consistency
    for r, (row, rhs) in enumerate(rows):
        if row == 0 and rhs == 1:
            return None
    pivot_cols = {col for col, _ in pivots}
    free_cols = [c for c in range(n) if c not in pivot_cols]
    # particular solution: free vars = 0
    particular = set()
    for col, r in pivots:
        if rows[r][1]:
            particular.add(col)
    # kernel basis: one generator per free column
    kernel = []
    for fc in free_cols:
        gen = {fc}
        for col, r in pivots:
            if (rows[r][0] >> fc) & 1:
                gen.add(col)
        kernel.append(gen)
    return particular, kernel


def _char_to_mask(m):
    bits = m.eps + m.delta
    mask = 0
    for i, b in enumerate(bits):
        if b:
            mask |= 1 << i
    return mask


def decompose(m, fs):
    """The unique subset of {o_1..o_g, e_2..e_{g+2}} of size <= g summing to m.

    Returns the subset as a tuple of indices into fs.essential_members().
    """
    members = fs.essential_members()
    columns = [_char_to_mask(x) for x in members]
    solved = _gf2_solve(columns, _char_to_mask(m))
    if solved is None:
        raise ValueError("characteristic does not decompose (system is degenerate)")
    particular, kernel = solved
    # The essential-basis property means the kernel is {0, all-ones}; the two
    # solutions are complements, and exactly one has size <= g.
    return _smallest_solution(particular, kernel, len(members))


def _smallest_solution(particular, kernel, n):
    best = None
    for r in range(len(kernel) + 1):
        for combo in itertools.combinations(kernel, r):
            s = set(particular)
            for gen in combo:
                s ^= gen
            if best is None or len(s) < len(best):
                best = s
    if len(best) > (n - 1) // 2:
        raise ValueError("no representation of size <= g found")
    return tuple(sorted(best))


def is_essential_basis(members):
    """True iff every characteristic has a unique odd-cardinality sum
    representation through `members` (2g+1 characteristics of genus g)."""
    g = members[0].g
    if len(members) != 2 * g + 1:
        return False
    columns = [_char_to_mask(x) for x in members]
    solved = _gf2_solve(columns, 0)
    if solved is None:
        return False
    _, kernel = solved
    # need rank 2g, i.e. kernel dimension exactly 1, with odd-weight generator
    if len(kernel) != 1:
        return False
    return len(kernel[0]) % 2 == 1


def sums_of_fewer_than_g(fs):
    """Map m -> subset size, over all sums of k < g essential members."""
    members = fs.essential_members()
    g = fs.g
    out = {}
    for k in range(g):
        for combo in itertools.combinations(range(len(members)), k):
            total = Characteristic.zero(g)
            for i in combo:
                total = total + members[i]
            out[total] = k
    return out


def hyperelliptic_vanishing_set(g):
    """Even characteristics m + b^g with m a sum of k < g essential members.

    These index the theta constants cut out along the standard hyperelliptic
    component; parity of m + b^g is governed by k = g or g+1 mod 4.
    """
    if g > MAX_ENUM_GENUS:
        raise ValueError("bound exceeded: g=%d > %d" % (g, MAX_ENUM_GENUS))
    fs = special_fundamental_system(g)
    b = b_char(fs)
    out = set()
    for m, k in sums_of_fewer_than_g(fs).items():
        shifted = m + b
        if is_even(shifted):
            # cross-check against the mod-4 parity rule
            assert k % 4 in (g % 4, (g + 1) % 4), (k, g)
            out.add(shifted)
    return out


def vanish_lemma_check(g):
    """True iff every even m + b^g (m a sum of < g essential members) has
    scalar class >= 2, i.e. lies in E*."""
    return all(scalar_class(m) >= 2 for m in hyperelliptic_vanishing_set(g))


def even_count(g):
    """2^{g-1} (2^g + 1)."""
    return 2 ** (g - 1) * (2 ** g + 1)


def odd_count(g):
    """2^{g-1} (2^g - 1)."""
    return 2 ** (g - 1) * (2 ** g - 1)
