"""The affine action of Sp(2g, Z_2) on theta characteristics, and orbits.

Only the mod-2 quotient of the integral symplectic group acts on
characteristics, so all matrices here live over Z_2 (numpy uint8 arrays,
reduced mod 2 after every product).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chars import EVEN, Characteristic, even_count, odd_count, parity


def _mat(rows):
    return np.array(rows, dtype=np.uint8) % 2


@dataclass(frozen=True)
class SpMod2Element:
    """Block matrix [[A,B],[C,D]] over Z_2 preserving the symplectic form."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for blk in (self.a, self.b, self.c, self.d):
            blk.setflags(write=False)
        if not self.is_symplectic():
            raise ValueError("blocks do not satisfy the symplectic relations mod 2")

    @property
    def g(self):
        return self.a.shape[0]

    def is_symplectic(self):
        a, b, c, d = self.a, self.b, self.c, self.d
        g = a.shape[0]
        eye = np.eye(g, dtype=np.uint8)
        if ((a @ d.T + b @ c.T) % 2 != eye).any():
            return False
        ab = (a @ b.T) % 2
        cd = (c @ d.T) % 2
        return (ab == ab.T).all() and (cd == cd.T).all()

    def matrix(self):
        return np.block([[self.a, self.b], [self.c, self.d]]) % 2

    def __mul__(self, other):
        if self.g != other.g:
            raise ValueError("genus mismatch")
        m = (self.matrix() @ other.matrix()) % 2
        g = self.g
        return SpMod2Element(m[:g, :g], m[:g, g:], m[g:, :g], m[g:, g:])

    def inverse(self):
        # over Z_2 the symplectic inverse is [[D^t, B^t], [C^t, A^t]]
        return SpMod2Element(self.d.T.copy(), self.b.T.copy(), self.c.T.copy(), self.a.T.copy())

    def key(self):
        return self.matrix().tobytes()

    @staticmethod
    def identity(g):
        eye = np.eye(g, dtype=np.uint8)
        zero = np.zeros((g, g), dtype=np.uint8)
        return SpMod2Element(eye, zero, zero.copy(), eye.copy())

    @staticmethod
    def from_blocks(a, b, c, d):
        return SpMod2Element(_mat(a), _mat(b), _mat(c), _mat(d))


def act(sigma, m):
    """The affine-linear action of sigma = [[A,B],[C,D]] on a characteristic:

        eps'   = D eps + C delta + diag(C D^t)
        delta' = B eps + A delta + diag(A B^t)

    (signs are trivial mod 2).  This is the unique pairing of the classical
    contragredient linear part with the diag shifts that is simultaneously a
    left action -- act(s1 * s2, m) == act(s1, act(s2, m)) -- and parity
    preserving; the tests pin both properties.
    """
    if sigma.g != m.g:
        raise ValueError("genus mismatch")
    eps = np.array(m.eps, dtype=np.uint8)
    delta = np.array(m.delta, dtype=np.uint8)
    shift_eps = np.diag((sigma.c @ sigma.d.T) % 2)
    shift_delta = np.diag((sigma.a @ sigma.b.T) % 2)
    new_eps = (sigma.d @ eps + sigma.c @ delta + shift_eps) % 2
    new_delta = (sigma.b @ eps + sigma.a @ delta + shift_delta) % 2
    return Characteristic(tuple(int(x) for x in new_eps), tuple(int(x) for x in new_delta))


def sigma0():
    """The genus-2 element whose action shifts the scalar class by 2; it
    sends [00;00] to [11;11], and its inverse sends [11;11] back to [00;00]."""
    return SpMod2Element.from_blocks(
        [[1, 0], [0, 1]], [[1, 0], [0, 1]], [[0, 1], [1, 0]], [[1, 1], [1, 1]]
    )


def embed(piece, positions, g):
    """Block-embed a genus-k element into coordinates `positions` of genus g.

    positions is 1-based and ordered; the element acts as the identity on
    the remaining coordinates.
    """
    k = piece.g
    if len(positions) != k:
        raise ValueError("positions must match the genus of the embedded piece")
    if len(set(positions)) != k:
        raise ValueError("positions must be distinct")
    if any(p < 1 or p > g for p in positions):
        raise ValueError("position out of range")
    a = np.eye(g, dtype=np.uint8)
    d = np.eye(g, dtype=np.uint8)
    b = np.zeros((g, g), dtype=np.uint8)
    c = np.zeros((g, g), dtype=np.uint8)
    idx = [p - 1 for p in positions]
    for bi, blk in ((a, piece.a), (b, piece.b), (c, piece.c), (d, piece.d)):
        for r, pr in enumerate(idx):
            for s, ps in enumerate(idx):
                bi[pr, ps] = blk[r, s]
    return SpMod2Element(a, b, c, d)


def permutation_element(pi):
    """The symplectic element with A = D = P(pi), B = C = 0.

    pi is a tuple with pi[i] = image of i+1 (1-based values).
    """
    g = len(pi)
    p = np.zeros((g, g), dtype=np.uint8)
    for i, image in enumerate(pi):
        p[image - 1, i] = 1
    zero = np.zeros((g, g), dtype=np.uint8)
    return SpMod2Element(p, zero.copy(), zero.copy(), p.copy())


def gamma1_s():
    """The order-swapping SL(2,Z_2) generator ((0,1),(1,0)) as genus 1."""
    return SpMod2Element.from_blocks([[0]], [[1]], [[1]], [[0]])


def gamma1_t():
    """The shear SL(2,Z_2) generator ((1,1),(0,1)) as genus 1."""
    return SpMod2Element.from_blocks([[1]], [[1]], [[0]], [[1]])


def stab_diagonal_generators(g):
    """Generators of the image of Stab(I_g) = Gamma_1 wr S_g in Sp(2g, Z_2):
    per-coordinate Gamma_1 generators plus permutations."""
    gens = []
    for j in range(1, g + 1):
        gens.append(embed(gamma1_s(), [j], g))
        gens.append(embed(gamma1_t(), [j], g))
    if g >= 2:
        gens.append(permutation_element((2, 1) + tuple(range(3, g + 1))))
        if g >= 3:
            cycle = tuple(range(2, g + 1)) + (1,)
            gens.append(permutation_element(cycle))
    return gens


def group_generators(g):
    """Generators of G_g = Gamma_2 x Gamma_1^{g-2} wr S_g acting mod 2:
    the diagonal stabilizer generators plus sigma0 embedded at (1,2)."""
    gens = stab_diagonal_generators(g)
    if g == 2:
        gens.append(sigma0())
    elif g > 2:
        gens.append(embed(sigma0(), [1, 2], g))
    return gens


def orbit(m, generators):
    """Breadth-first closure of {m} under the given generators.

    Returns the orbit sorted lexicographically on (eps, delta).
    """
    if not generators:
        raise ValueError("need at least one generator")
    seen = {m}
    frontier = [m]
    while frontier:
        new_frontier = []
        for x in frontier:
            for gen in generators:
                y = act(gen, x)
                if y not in seen:
                    seen.add(y)
                    new_frontier.append(y)
        frontier = new_frontier
    return sorted(seen, key=lambda ch: (ch.eps, ch.delta))


@dataclass(frozen=True)
class OrbitReport:
    g: int
    seed: Characteristic
    generator_set: str
    even_orbit_size: int
    odd_orbit_size: int
    expected_even: int
    expected_odd: int

    @property
    def passed(self):
        return (
            self.even_orbit_size == self.expected_even
            and self.odd_orbit_size == self.expected_odd
        )

    def to_dict(self):
        return {
            "g": self.g,
            "seed_characteristic": self.seed.compact(),
            "generator_set": self.generator_set,
            "even_orbit_size": self.even_orbit_size,
            "odd_orbit_size": self.odd_orbit_size,
            "expected_even": self.expected_even,
            "expected_odd": self.expected_odd,
            "pass": self.passed,
        }


def verify_transitivity(g):
    """Orbit of the zero characteristic (even) and of [10..;10..] (odd) under
    the G_g generators, compared against the global even/odd counts."""
    gens = group_generators(g)
    even_seed = Characteristic.zero(g)
    odd_seed = Characteristic(
        (1,) + (0,) * (g - 1),
        (1,) + (0,) * (g - 1),
    )
    even_orbit = orbit(even_seed, gens)
    odd_orbit = orbit(odd_seed, gens)
    assert all(parity(x) == EVEN for x in even_orbit)
    return OrbitReport(
        g=g,
        seed=even_seed,
        generator_set="Gg",
        even_orbit_size=len(even_orbit),
        odd_orbit_size=len(odd_orbit),
        expected_even=even_count(g),
        expected_odd=odd_count(g),
    )


GENERATOR_SETS = {
    "Gg": group_generators,
    "stab_diagonal": stab_diagonal_generators,
}


def random_element(g, rng, n_factors=12):
    """A pseudo-random element: a word in the G_g generators."""
    gens = group_generators(g)
    el = SpMod2Element.identity(g)
    for _ in range(n_factors):
        el = el * gens[rng.integers(len(gens))]
    return el
