"""Nested integrals over ordered simplices and pixel boxes.

The analytic workhorse is the N-fold nested integral of an
exponential-polynomial integrand over the ordered domain
0 < x_1 < x_2 < ... < x_N < L,

    I = int_0^L dx_N int_0^{x_N} dx_{N-1} ... int_0^{x_2} dx_1
        x_m^alpha x_n^beta exp(-i sum_j lambda_j x_j),

which is evaluated symbolically from the innermost variable outward.
Each level holds a list of terms coeff * x^p * exp(-i mu x); one level of
integration maps a term onto a few terms in the next variable through

    int x^p e^{ikx} dx = -p! (i/k)^{p+1} e^{ikx} sum_{s=0}^p (-ikx)^s / s!

with the exact polynomial branch x^(p+1)/(p+1) taken whenever the
accumulated wavenumber is (numerically) zero.  Wavenumbers appearing at
level j are partial tail sums of lambda plus the inherited exponent, so
the term count stays small after merging like terms.

Iterated Gauss-Legendre rules over the same ordered domain, and tensor
rules over axis-aligned boxes, provide the independent numerical oracle
used throughout the test suite and the direct CFI quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

# Relative threshold below which a level wavenumber is treated as exactly
# zero (the polynomial branch).  Near-zero wavenumbers arise when two
# permutations carry equal quasimomenta at some position; they must not
# hit the 1/mu closed form.
DEGENERACY_RTOL = 1e-9

# For 0 < |mu| * x_max below this, the closed form loses eps/(mu x)^depth
# to cancellation, so the exponential is expanded in a truncated series
# instead; at the cutoff both branches are accurate to machine precision.
TAYLOR_CUTOFF = 0.5
TAYLOR_ABS_TOL = 1e-18
TAYLOR_MAX_TERMS = 30

# Safety cap on the symbolic term list; generously above anything the
# supported particle numbers can produce.
DEFAULT_TERM_CAP = 100_000

DEFAULT_SIMPLEX_ORDER = 48
DEFAULT_SIMPLEX_ORDER_4D = 24


class ResourceLimitError(RuntimeError):
    """A computation would exceed a configured size cap."""


@dataclass(frozen=True)
class ExpPolyTerm:
    """One integrand term  coeff * x**power * exp(-1j * wavenumber * x)."""

    coeff: complex
    power: int
    wavenumber: float

    def __post_init__(self) -> None:
        if self.power < 0:
            raise ValueError("power must be a non-negative integer")
        if not np.isfinite(self.coeff):
            raise ValueError("coefficient must be finite")


@dataclass(frozen=True)
class SimplexIntegralRequest:
    """Specification of one nested simplex integral.

    ``lam`` holds lambda_1..lambda_N; ``alpha``/``beta`` are the powers on
    coordinates ``m``/``n`` (1-based particle indices, omitted when the
    matching power is zero).
    """

    lam: tuple
    L: float
    alpha: int = 0
    beta: int = 0
    m: Optional[int] = None
    n: Optional[int] = None

    def __post_init__(self) -> None:
        n_dim = len(self.lam)
        if n_dim < 1:
            raise ValueError("lambda must have at least one component")
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("powers must be non-negative")
        if self.alpha > 0 and not (self.m and 1 <= self.m <= n_dim):
            raise ValueError("index m required and in 1..N when alpha > 0")
        if self.beta > 0 and not (self.n and 1 <= self.n <= n_dim):
            raise ValueError("index n required and in 1..N when beta > 0")


def _closed_form_pieces(coeff: complex, power: int, mu: float):
    """Antiderivative of coeff*x^p*exp(-i mu x) for mu != 0.

    Returns (per-power coefficients c_s for s=0..p, base) such that
    F(x) = sum_s c_s x^s exp(-i mu x) and F(0) = base.
    """
    base = -coeff * math.factorial(power) * (-1j / mu) ** (power + 1)
    coeffs = [base * (1j * mu) ** s / math.factorial(s) for s in range(power + 1)]
    return coeffs, base


def antiderivative(term: ExpPolyTerm, x: float, zero_tol: float = 1e-12) -> complex:
    """Antiderivative of ``term`` evaluated at ``x``.

    Three regimes: the exact polynomial branch x^(p+1)/(p+1) when the
    wavenumber is flagged degenerate (|mu| <= zero_tol), a truncated
    series for 0 < |mu x| below the cancellation cutoff, and the closed
    exponential form above it.  The first two vanish at x = 0 while the
    closed form carries its natural constant, so take differences within
    one regime when forming definite integrals (the nested-integral
    recursion does its own consistently-normalized bookkeeping).
    """
    mu = term.wavenumber
    if abs(mu) <= zero_tol:
        return term.coeff * x ** (term.power + 1) / (term.power + 1)
    if abs(mu) * abs(x) <= TAYLOR_CUTOFF:
        return sum(c * x**p for c, p in _taylor_coeffs(term.coeff, term.power, mu, abs(x)))
    coeffs, _ = _closed_form_pieces(term.coeff, term.power, mu)
    poly = sum(c * x**s for s, c in enumerate(coeffs))
    return poly * np.exp(-1j * mu * x)


def _taylor_coeffs(coeff: complex, power: int, mu: float, span: float):
    """Series antiderivative of coeff*x^p*e^{-i mu x} for small |mu|*span.

    Yields (c_t, p_t) with F(x) = sum_t c_t x^{p_t} and F(0) = 0; the
    series is truncated once the bound (|mu| span)^t / t! drops below
    TAYLOR_ABS_TOL, which machine-exactly represents the integrand on
    [0, span].
    """
    out = []
    z = coeff
    bound = 1.0
    ratio = abs(mu) * span
    for t in range(TAYLOR_MAX_TERMS + 1):
        out.append((z / (power + t + 1), power + t + 1))
        bound *= ratio / (t + 1)
        if bound < TAYLOR_ABS_TOL:
            break
        z *= -1j * mu / (t + 1)
    return out


def _definite(coeff: complex, power: int, mu: float, upper: float, zero_tol: float) -> complex:
    """int_0^upper coeff * x^p * exp(-i mu x) dx."""
    if abs(mu) <= zero_tol:
        return coeff * upper ** (power + 1) / (power + 1)
    if abs(mu) * upper <= TAYLOR_CUTOFF:
        return sum(c * upper**p for c, p in _taylor_coeffs(coeff, power, mu, upper))
    coeffs, base = _closed_form_pieces(coeff, power, mu)
    poly = sum(c * upper**s for s, c in enumerate(coeffs))
    return poly * np.exp(-1j * mu * upper) - base


def simplex_exp_integral(req: SimplexIntegralRequest, term_cap: int = DEFAULT_TERM_CAP) -> complex:
    """Nested integral of x_m^alpha x_n^beta e^{-i lambda.x} over the ordered simplex.

    Integration proceeds innermost to outermost; every level integrates
    its term list (closed form, small-wavenumber series, or polynomial
    branch as appropriate), substitutes the limits {0, x_next},
    multiplies in the next level's own x^p e^{-i lambda x} factor and
    merges like terms keyed on (power, quantized wavenumber).
    """
    lam = np.asarray(req.lam, dtype=float)
    n_dim = lam.size
    scale = max(1.0, float(np.max(np.abs(lam))))
    zero_tol = DEGENERACY_RTOL * scale

    powers = [0] * n_dim
    if req.alpha:
        powers[req.m - 1] += req.alpha
    if req.beta:
        powers[req.n - 1] += req.beta

    return _simplex_exp_raw(lam, powers, req.L, zero_tol, term_cap)


def _simplex_exp_raw(
    lam: np.ndarray, powers: Sequence[int], L: float, zero_tol: float, term_cap: int
) -> complex:
    """Core recursion shared by the public entry point and the QFI kernel."""
    n_dim = lam.size
    # terms: dict key (power, quantized mu) -> [coeff, mu]
    terms = {(powers[0], round(lam[0] / zero_tol)): [1.0 + 0.0j, float(lam[0])]}

    for level in range(1, n_dim):
        p_next = powers[level]
        lam_next = float(lam[level])
        merged: dict = {}

        def _add(coeff: complex, power: int, mu: float) -> None:
            key = (power, round(mu / zero_tol))
            slot = merged.get(key)
            if slot is None:
                merged[key] = [coeff, mu]
            else:
                slot[0] += coeff

        for (power, _), (coeff, mu) in terms.items():
            if abs(mu) <= zero_tol:
                # polynomial branch; antiderivative vanishes at 0
                _add(coeff / (power + 1), power + 1 + p_next, lam_next)
            elif abs(mu) * L <= TAYLOR_CUTOFF:
                # series branch: exponential absorbed into the polynomial
                for c_t, p_t in _taylor_coeffs(coeff, power, mu, L):
                    _add(c_t, p_t + p_next, lam_next)
            else:
                coeffs, base = _closed_form_pieces(coeff, power, mu)
                for s, c_s in enumerate(coeffs):
                    _add(c_s, s + p_next, mu + lam_next)
                _add(-base, p_next, lam_next)

        if len(merged) > term_cap:
            raise ResourceLimitError(
                f"simplex integral term list exceeded cap ({len(merged)} > {term_cap})"
            )
        terms = merged

    total = 0.0 + 0.0j
    for (power, _), (coeff, mu) in terms.items():
        total += _definite(coeff, power, mu, L, zero_tol)
    return total


# ---------------------------------------------------------------------------
# Gauss-Legendre rules
# ---------------------------------------------------------------------------


def _gauss01(order: int):
    """Gauss-Legendre nodes/weights mapped to [0, 1]."""
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    t, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (t + 1.0), 0.5 * w


def simplex_nodes(n_dim: int, L: float, order: int):
    """Iterated Gauss-Legendre nodes/weights on 0 <= x_1 <= ... <= x_N <= L.

    Built outermost-in: x_N on [0, L], then each inner variable on
    [0, x_next] with the upper limit folded into the weight.  Points come
    back as an (n_points, n_dim) array with ascending columns.
    """
    t, w = _gauss01(order)
    pts = (L * t)[:, None]
    wts = L * w
    for _ in range(n_dim - 1):
        upper = pts[:, 0]
        new_var = (upper[:, None] * t[None, :]).ravel()
        wts = (wts[:, None] * (upper[:, None] * w[None, :])).ravel()
        pts = np.concatenate(
            [new_var[:, None], np.repeat(pts, order, axis=0)], axis=1
        )
    return pts, wts


def simplex_quadrature(
    f: Callable[[np.ndarray], np.ndarray], n_dim: int, L: float, order: int
):
    """Integrate ``f`` over the ordered simplex 0 <= x_1 <= ... <= x_N <= L.

    ``f`` must accept an (n_points, n_dim) array of ordered points and
    return one value per point (real or complex).  Deterministic for a
    fixed order; the reduction is a plain index-ordered sum.
    """
    pts, wts = simplex_nodes(n_dim, L, order)
    vals = np.asarray(f(pts))
    return np.sum(wts * vals)


def box_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    box: Sequence[tuple],
    order: int,
):
    """Integrate a symmetric ``f`` over an axis-aligned box.

    ``box`` is a sequence of (lo, hi) intervals, one per coordinate, in
    ascending order.  Runs of coordinates sharing an identical interval
    are integrated over their ordered sub-simplex and multiplied by the
    run-size factorial, which is exact for symmetric integrands and keeps
    every quadrature panel away from the coincidence cusps x_i = x_j.
    """
    t, w = _gauss01(order)
    if len(box) == 0:
        raise ValueError("box must have at least one interval")

    groups = []
    for lo, hi in box:
        lo = float(lo)
        hi = float(hi)
        if hi < lo:
            raise ValueError("box interval with hi < lo")
        if groups and groups[-1][0] == (lo, hi):
            groups[-1][1] += 1
        else:
            groups.append([(lo, hi), 1])

    pts = None
    wts = None
    for (lo, hi), size in groups:
        width = hi - lo
        if size == 1:
            g_pts = (lo + width * t)[:, None]
            g_wts = width * w
        else:
            g_pts, g_wts = simplex_nodes(size, width, order)
            g_pts = g_pts + lo
            g_wts = g_wts * math.factorial(size)
        if pts is None:
            pts, wts = g_pts, g_wts
        else:
            n_old, n_new = len(wts), len(g_wts)
            pts = np.concatenate(
                [np.repeat(pts, n_new, axis=0), np.tile(g_pts, (n_old, 1))], axis=1
            )
            wts = (wts[:, None] * g_wts[None, :]).ravel()

    vals = np.asarray(f(pts))
    return np.sum(wts * vals)


def default_order(n_dim: int) -> int:
    """Quadrature order used by the oracles: 48 points/dim up to 3-D, 24 at 4-D."""
    return DEFAULT_SIMPLEX_ORDER if n_dim <= 3 else DEFAULT_SIMPLEX_ORDER_4D
