"""Certified numerical evaluation of theta functions with characteristics.

theta[eps;delta](tau, z) = sum over p in Z^g of
    exp(pi i [ (p+eps/2)^t tau (p+eps/2) + 2 (p+eps/2) . (z+delta/2) ])

The lattice sum is truncated at a radius chosen so that a rigorous
Gaussian tail bound (driven by the smallest eigenvalue of Im tau) is
below the requested tolerance.  z-derivatives are computed by term-wise
differentiation of the series, never by finite differences; tau
derivatives come from the heat equation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .chars import Characteristic

DEFAULT_TOL = 1e-10
MIN_TOL = 1e-14
MAX_RADIUS = 60
MAX_NUMERIC_GENUS = 5
MAX_DERIV_ORDER = 4

_LATTICE_CACHE = {}


class PeriodMatrix:
    """A g x g complex symmetric matrix with positive-definite imaginary part."""

    def __init__(self, entries):
        entries = np.array(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must form a square matrix")
        if not (entries == entries.T).all():
            raise ValueError("period matrix must be symmetric")
        try:
            np.linalg.cholesky(entries.imag)
        except np.linalg.LinAlgError:
            raise ValueError("imaginary part must be positive definite")
        entries.setflags(write=False)
        self.entries = entries

    @property
    def g(self):
        return self.entries.shape[0]

    def lambda_min(self):
        """Smallest eigenvalue of Im tau; controls the truncation radius."""
        return float(np.linalg.eigvalsh(self.entries.imag)[0])

    @staticmethod
    def diagonal(t):
        return PeriodMatrix(np.diag(np.asarray(t, dtype=complex)))

    def perturbed(self, direction, scale):
        """tau + scale * direction (direction a symmetric g x g array)."""
        direction = np.asarray(direction, dtype=complex)
        return PeriodMatrix(self.entries + scale * direction)

    def to_json(self):
        return {
            "g": self.g,
            "entries": [
                [[float(v.real), float(v.imag)] for v in row] for row in self.entries
            ],
        }

    @staticmethod
    def from_json(obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        entries = np.array(
            [[complex(re, im) for re, im in row] for row in obj["entries"]]
        )
        if obj.get("g") != entries.shape[0]:
            raise ValueError("declared g does not match entries shape")
        return PeriodMatrix(entries)


@dataclass(frozen=True)
class DerivativeRequest:
    """A z-derivative multi-index attached to a characteristic."""

    multi_index: tuple
    characteristic: Characteristic

    def __post_init__(self):
        if len(self.multi_index) != self.characteristic.g:
            raise ValueError("multi-index length must equal the genus")
        if any(k < 0 for k in self.multi_index):
            raise ValueError("multi-index entries must be nonnegative")

    @property
    def order(self):
        return sum(self.multi_index)


def _truncation_radius(g, lam, ynorm, order, tol):
    """Smallest radius R so that the neglected tail of the theta series is < tol.

    Terms with sup-norm shell m have |q| >= m - 1/2 and at most
    2g(2m+1)^{g-1} lattice points; each is bounded by
    (2 pi (m+1/2))^order exp(-pi lam (m-1/2)^2 + 2 pi ynorm sqrt(g) (m+1/2)).
    Once the shell bound halves from shell to shell the tail is dominated
    by a geometric series.
    """

    def shell(m):
        mag = -np.pi * lam * (m - 0.5) ** 2 + 2 * np.pi * ynorm * np.sqrt(g) * (m + 0.5)
        if mag > 700.0:
            return np.inf
        return (
            2 * g * (2 * m + 1) ** (g - 1)
            * (2 * np.pi * (m + 0.5)) ** order
            * np.exp(mag)
        )

    for radius in range(2, MAX_RADIUS + 1):
        s1 = shell(radius + 1)
        s2 = shell(radius + 2)
        if s1 <= tol / 2.0 and s2 <= s1 / 2.0:
            return radius
    raise ValueError(
        "tolerance %g unachievable within radius %d (near-degenerate Im tau?)"
        % (tol, MAX_RADIUS)
    )


def _lattice(g, radius):
    key = (g, radius)
    pts = _LATTICE_CACHE.get(key)
    if pts is None:
        axes = [np.arange(-radius, radius + 1)] * g
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, g)
        pts = pts.astype(float)
        pts.setflags(write=False)
        _LATTICE_CACHE[key] = pts
    return pts


def _check_eval_args(m, tau, tol):
    if m.g != tau.g:
        raise ValueError("genus mismatch")
    if tau.g > MAX_NUMERIC_GENUS:
        raise ValueError("numeric genus cap exceeded: g=%d > %d" % (tau.g, MAX_NUMERIC_GENUS))
    if tol < MIN_TOL:
        raise ValueError("tolerance below achievable precision: %g" % tol)


def _theta_sum(tau, eps, delta, z, multi_indices, tol):
    """Shared lattice pass returning one value per derivative multi-index."""
    g = len(eps)
    lam = tau.lambda_min()
    z = np.zeros(g, dtype=complex) if z is None else np.asarray(z, dtype=complex)
    ynorm = float(np.linalg.norm(z.imag))
    order = max((sum(a) for a in multi_indices), default=0)
    radius = _truncation_radius(g, lam, ynorm, order, tol)
    q = _lattice(g, radius) + np.asarray(eps, dtype=float) / 2.0
    quad = np.einsum("ij,jk,ik->i", q, tau.entries, q)
    lin = q @ (2.0 * (z + np.asarray(delta, dtype=float) / 2.0))
    terms = np.exp(np.pi * 1j * (quad + lin))
    out = []
    for alpha in multi_indices:
        poly = terms
        total = sum(alpha)
        if total:
            factor = np.ones(q.shape[0])
            for a, k in enumerate(alpha):
                if k:
                    factor = factor * q[:, a] ** k
            poly = terms * factor * (2j * np.pi) ** total
        out.append(complex(np.sum(poly)))
    return out


def eval_theta(m, tau, z=None, deriv=None, tol=DEFAULT_TOL, max_order=MAX_DERIV_ORDER):
    """theta_m(tau, z), or its z-derivative for the multi-index `deriv`.

    Absolute error is below tol.  max_order caps the total derivative
    order (default 4; the genus-1 helpers raise it to 5 internally).
    """
    _check_eval_args(m, tau, tol)
    if deriv is None:
        deriv = (0,) * m.g
    deriv = tuple(int(k) for k in deriv)
    if len(deriv) != m.g:
        raise ValueError("derivative multi-index length must equal the genus")
    if sum(deriv) > max_order:
        raise ValueError("derivative order %d above cap %d" % (sum(deriv), max_order))
    return _theta_sum(tau, m.eps, m.delta, z, [deriv], tol)[0]


def eval_theta_many(m, tau, multi_indices, z=None, tol=DEFAULT_TOL,
                    max_order=MAX_DERIV_ORDER):
    """Several z-derivatives of theta_m in a single lattice pass."""
    _check_eval_args(m, tau, tol)
    multi_indices = [tuple(int(k) for k in a) for a in multi_indices]
    for alpha in multi_indices:
        if len(alpha) != m.g or sum(alpha) > max_order:
            raise ValueError("bad derivative multi-index %r" % (alpha,))
    return _theta_sum(tau, m.eps, m.delta, z, multi_indices, tol)


def theta_constants_batch(tau, characteristics, tol=DEFAULT_TOL):
    """Theta constants for many characteristics, sharing the lattice pass
    among characteristics with equal eps (the delta only contributes a
    quarter-period phase per lattice point)."""
    out = {}
    by_eps = {}
    for m in characteristics:
        _check_eval_args(m, tau, tol)
        by_eps.setdefault(m.eps, []).append(m)
    lam = tau.lambda_min()
    radius = _truncation_radius(tau.g, lam, 0.0, 0, tol)
    for eps, group in by_eps.items():
        q = _lattice(tau.g, radius) + np.asarray(eps, dtype=float) / 2.0
        quad_terms = np.exp(np.pi * 1j * np.einsum("ij,jk,ik->i", q, tau.entries, q))
        deltas = np.array([m.delta for m in group], dtype=float)
        phases = np.exp(np.pi * 1j * (q @ deltas.T))
        values = quad_terms @ phases
        for m, v in zip(group, values):
            out[m] = complex(v)
    return out


def _unit(g, a, b=None):
    alpha = [0] * g
    alpha[a] += 1
    if b is not None:
        alpha[b] += 1
    return tuple(alpha)


def gradient(m, tau, tol=DEFAULT_TOL):
    """The z-gradient of theta_m at z=0 (identically zero for even m)."""
    vals = eval_theta_many(m, tau, [_unit(m.g, a) for a in range(m.g)], tol=tol)
    return np.array(vals)


def hessian(m, tau, tol=DEFAULT_TOL):
    """The symmetric z-Hessian of theta_m at z=0."""
    g = m.g
    idx = [(a, b) for a in range(g) for b in range(a, g)]
    vals = eval_theta_many(m, tau, [_unit(g, a, b) for a, b in idx], tol=tol)
    h = np.zeros((g, g), dtype=complex)
    for (a, b), v in zip(idx, vals):
        h[a, b] = v
        h[b, a] = v
    return h


def tau_derivative(m, tau, pair, tol=DEFAULT_TOL):
    """d theta_m / d tau_{jk} at z=0 via the heat equation:
    (1/4pii) d^2_{z_j} for j=k, (1/2pii) d_{z_j} d_{z_k} for j != k.
    The pair is 1-based."""
    j, k = pair
    second = eval_theta(m, tau, deriv=_unit(m.g, j - 1, k - 1), tol=tol)
    if j == k:
        return second / (4j * np.pi)
    return second / (2j * np.pi)


def tau_gradient(m, tau, tol=DEFAULT_TOL):
    """All d theta_m / d tau_{jk}, j <= k, as a symmetric g x g array,
    computed in one lattice pass."""
    g = m.g
    idx = [(a, b) for a in range(g) for b in range(a, g)]
    vals = eval_theta_many(m, tau, [_unit(g, a, b) for a, b in idx], tol=tol)
    out = np.zeros((g, g), dtype=complex)
    for (a, b), v in zip(idx, vals):
        d = v / (4j * np.pi) if a == b else v / (2j * np.pi)
        out[a, b] = d
        out[b, a] = d
    return out


def numerical_rank(matrix, rel_tol=1e-7):
    """Number of singular values above rel_tol times the largest one."""
    matrix = np.asarray(matrix, dtype=complex)
    if not np.isfinite(matrix).all():
        raise ValueError("matrix has non-finite entries")
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


# ---------------------------------------------------------------------------
# genus-1 building blocks for the expansion conventions


_ODD1 = Characteristic((1,), (1,))
_EVEN1 = Characteristic((0,), (0,))


def genus1_derivatives(m1, t, orders, tol=DEFAULT_TOL):
    """d^k/dz^k theta_{m1}(t, 0) for each k in orders (genus 1; k up to 5)."""
    tau = PeriodMatrix([[t]])
    return eval_theta_many(m1, tau, [(k,) for k in orders], tol=tol, max_order=5)


def f_phi_psi(t, odd, tol=DEFAULT_TOL):
    """The triple (f, phi, psi) at the genus-1 point t.

    For an odd column f = theta'[1;1](t), phi = theta'''/theta',
    psi = theta''''' / theta' - phi^2; for an even column f = theta[0;0](t),
    phi = theta''/theta, psi = theta''''/theta - phi^2.
    """
    if odd:
        d1, d3, d5 = genus1_derivatives(_ODD1, t, (1, 3, 5), tol=tol)
        f, phi = d1, d3 / d1
        return f, phi, d5 / d1 - phi**2
    d0, d2, d4 = genus1_derivatives(_EVEN1, t, (0, 2, 4), tol=tol)
    f, phi = d0, d2 / d0
    return f, phi, d4 / d0 - phi**2


GENERICITY_FLOOR = 1e-3


def sample_generic_diagonal(g, l, rng, tol=DEFAULT_TOL, max_tries=200):
    """Diagonal entries t_1..t_g with Im t in [0.8, 2.0], Re t in [-0.5, 0.5],
    redrawn per coordinate until |psi - 2 phi^2| and |4 phi^2 - psi| are
    both above GENERICITY_FLOOR (columns 1..l are odd, the rest even)."""
    t = np.zeros(g, dtype=complex)
    for a in range(g):
        odd = a < l
        for _ in range(max_tries):
            cand = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 2.0))
            _, phi, psi = f_phi_psi(cand, odd, tol=tol)
            if (
                abs(psi - 2 * phi**2) > GENERICITY_FLOOR
                and abs(4 * phi**2 - psi) > GENERICITY_FLOOR
            ):
                t[a] = cand
                break
        else:
            raise ValueError("failed to draw a generic diagonal coordinate")
    return t
