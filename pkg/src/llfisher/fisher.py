"""Quantum and classical Fisher information of the interaction strength.

For a pure state depending on the coupling c the quantum Fisher
information is

    QFI = 4 [ <d_c psi | d_c psi> - |<psi | d_c psi>|^2 ],

and the classical Fisher information of the N-particle position
measurement is CFI = 4 int (d_c |psi|)^2.  Working with the unnormalized
ansatz psi~ and its ordered-domain norm square NS, both reduce to

    QFI = (4/NS) [ <d_c psi~|d_c psi~> - |<psi~|d_c psi~>|^2 / NS ],
    CFI = (4/NS) [ int (d_c |psi~|)^2 - (d_c sqrt(NS))^2 ],

with all inner products over 0 < x_1 < ... < x_N < L.  Expanding the
permutation sums turns the QFI into a double sum over coefficient pairs
weighted by the closed-form simplex integrals I, I^1_l and I^11_mn of
the wavenumber differences; that assembly is exact up to the Bethe
residual.  The CFI either equals the QFI outright (real or purely
imaginary phase class, where the position measurement is optimal) or is
integrated numerically on the ordered simplex.

An independent fidelity-overlap estimate,
QFI ~ 8 (1 - |<psi_{c-d/2}|psi_{c+d/2}>|) / d^2, cross-checks the
analytic assembly without sharing its derivative code paths.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bethe import (
    ModelParams,
    StateSpec,
    dnorm_sq_dc,
    norm_sq,
    solve_bethe,
)
from .integrals import (
    DEGENERACY_RTOL,
    DEFAULT_TERM_CAP,
    _simplex_exp_raw,
    default_order,
    simplex_quadrature,
)
from .wavefunction import (
    AmplitudeTable,
    PhaseClass,
    amplitudes,
    eval_batch,
    global_phase_class,
)

QFI_IMAG_RTOL = 1e-8
WORKERS_ENV = "LLFISHER_WORKERS"


class BracketError(RuntimeError):
    """The requested bracket does not contain an interior maximum."""


# ---------------------------------------------------------------------------
# permutation-pair assembly
# ---------------------------------------------------------------------------


def _bundle(lam: np.ndarray, L: float, zero_tol: float):
    """I, I^1_l and I^11_mn for one wavenumber vector lambda.

    I^11 is symmetric in (m, n), so only the upper triangle is computed.
    """
    n = lam.size
    zeros = [0] * n
    i00 = _simplex_exp_raw(lam, zeros, L, zero_tol, DEFAULT_TERM_CAP)
    i1 = np.empty(n, dtype=complex)
    for l in range(n):
        powers = zeros.copy()
        powers[l] = 1
        i1[l] = _simplex_exp_raw(lam, powers, L, zero_tol, DEFAULT_TERM_CAP)
    i11 = np.empty((n, n), dtype=complex)
    for m in range(n):
        for nn in range(m, n):
            powers = zeros.copy()
            powers[m] += 1
            powers[nn] += 1
            val = _simplex_exp_raw(lam, powers, L, zero_tol, DEFAULT_TERM_CAP)
            i11[m, nn] = val
            i11[nn, m] = val
    return i00, i1, i11


def _pair_bundles(kappa_a: np.ndarray, kappa_b: np.ndarray, L: float, full: bool):
    """Simplex-integral bundles for every pair row_a x row_b, deduplicated.

    Pairs sharing one wavenumber vector (to within the degeneracy
    quantum) share a bundle, and opposite vectors share it through
    I(-lambda) = conj(I(lambda)), which halves the recursion count.
    Returns pair-shaped arrays i00 (ra, rb) and, when ``full``, i1
    (ra, rb, n) and i11 (ra, rb, n, n).
    """
    n = kappa_a.shape[1]
    r_a, r_b = kappa_a.shape[0], kappa_b.shape[0]
    kscale = max(
        1.0, float(np.max(np.abs(kappa_a))), float(np.max(np.abs(kappa_b)))
    )
    zero_tol = DEGENERACY_RTOL * kscale

    lam_all = (kappa_a[:, None, :] - kappa_b[None, :, :]).reshape(-1, n)
    keys = np.round(lam_all / zero_tol).astype(np.int64)
    # canonical sign: make the leading nonzero key entry positive
    lead_pos = np.argmax(keys != 0, axis=1)
    lead = keys[np.arange(keys.shape[0]), lead_pos]
    flip = lead < 0
    keys[flip] = -keys[flip]
    uniq, first_occ, inverse = np.unique(
        keys, axis=0, return_index=True, return_inverse=True
    )
    inverse = inverse.reshape(-1)  # shape differs across numpy 2.x versions
    reps = np.where(flip[first_occ, None], -lam_all[first_occ], lam_all[first_occ])

    n_unique = reps.shape[0]
    i00_u = np.empty(n_unique, dtype=complex)
    i1_u = np.empty((n_unique, n), dtype=complex) if full else None
    i11_u = np.empty((n_unique, n, n), dtype=complex) if full else None
    for u in range(n_unique):
        if full:
            i00_u[u], i1_u[u], i11_u[u] = _bundle(reps[u], L, zero_tol)
        else:
            i00_u[u] = _simplex_exp_raw(reps[u], [0] * n, L, zero_tol, DEFAULT_TERM_CAP)

    def expand(values: np.ndarray) -> np.ndarray:
        out = values[inverse]
        out[flip] = np.conj(out[flip])
        return out.reshape((r_a, r_b) + values.shape[1:])

    i00 = expand(i00_u)
    if not full:
        return i00, None, None
    return i00, expand(i1_u), expand(i11_u)


def _inner_products(table: AmplitudeTable, L: float):
    """Ordered-domain <psi~|psi~>, <psi~|d_c psi~>, <d_c psi~|d_c psi~>.

    Assembled from the coefficient table and the simplex-integral
    bundles; the pair reduction is a deterministic einsum.
    """
    i00, i1_ts, i11_ts = _pair_bundles(table.kappa, table.kappa, L, full=True)

    w_amp = table.weight * table.amp
    w_damp = table.weight * table.damp
    # a[t, s] = sum_l dkappa[s, l] I^1_l(lam_ts); b uses row t instead
    a = np.einsum("tsl,sl->ts", i1_ts, table.dkappa)
    b = np.einsum("tsl,tl->ts", i1_ts, table.dkappa)
    quad = np.einsum("tm,tsmn,sn->ts", table.dkappa, i11_ts, table.dkappa)

    c_amp = np.conj(w_amp)
    c_damp = np.conj(w_damp)
    nn = np.einsum("t,s,ts->", c_amp, w_amp, i00)
    nd = np.einsum("t,s,ts->", c_amp, w_damp, i00) + 1j * np.einsum(
        "t,s,ts->", c_amp, w_amp, a
    )
    dd = (
        np.einsum("t,s,ts->", c_damp, w_damp, i00)
        + 1j * np.einsum("t,s,ts->", c_damp, w_amp, a)
        - 1j * np.einsum("t,s,ts->", c_amp, w_damp, b)
        + np.einsum("t,s,ts->", c_amp, w_amp, quad)
    )
    return complex(nn), complex(nd), complex(dd)


def _qfi_with_residue(spec: StateSpec, params: ModelParams, allow_large_n: bool = False):
    solution = solve_bethe(spec, params)
    table = amplitudes(solution, params, spec.bc, allow_large_n=allow_large_n)
    n2 = norm_sq(solution.k, params, spec.bc).norm_sq
    _, nd, dd = _inner_products(table, params.L)
    qfi_c = 4.0 / n2 * (dd - abs(nd) ** 2 / n2)
    residue = abs(qfi_c.imag) / max(abs(qfi_c.real), 1e-30)
    if residue > QFI_IMAG_RTOL:
        raise RuntimeError(
            f"QFI assembly left a relative imaginary residue {residue:.3e}"
        )
    return float(qfi_c.real), residue


def qfi_analytic(spec: StateSpec, params: ModelParams, allow_large_n: bool = False) -> float:
    """QFI of the coupling via the exact permutation-pair expansion."""
    value, _ = _qfi_with_residue(spec, params, allow_large_n)
    return value


def ordered_overlap(
    table_a: AmplitudeTable, table_b: AmplitudeTable, L: float
) -> complex:
    """<psi~_a | psi~_b> over the ordered domain, from two coefficient tables."""
    i00, _, _ = _pair_bundles(table_a.kappa, table_b.kappa, L, full=False)
    w_a = np.conj(table_a.weight * table_a.amp)
    w_b = table_b.weight * table_b.amp
    return complex(np.einsum("t,s,ts->", w_a, w_b, i00))


def qfi_overlap_oracle(
    spec: StateSpec, params: ModelParams, delta: Optional[float] = None
) -> float:
    """Fidelity-based QFI estimate, 8 (1 - |<psi_-|psi_+>|) / delta^2.

    The two states are solved at c -+ delta/2, which centers the stencil
    and makes the estimate second-order accurate.  Fully independent of
    the analytic derivative pipeline (no dA/dc, dk/dc or I^1, I^11).
    """
    if delta is None:
        delta = 1e-4 * max(params.c, 1.0)
    if delta <= 0:
        raise ValueError("delta must be positive")
    lo = ModelParams(params.c - delta / 2.0, params.L)
    hi = ModelParams(params.c + delta / 2.0, params.L)
    sol_lo = solve_bethe(spec, lo)
    sol_hi = solve_bethe(spec, hi)
    tab_lo = amplitudes(sol_lo, lo, spec.bc)
    tab_hi = amplitudes(sol_hi, hi, spec.bc)
    n2_lo = norm_sq(sol_lo.k, lo, spec.bc).norm_sq
    n2_hi = norm_sq(sol_hi.k, hi, spec.bc).norm_sq
    overlap = abs(ordered_overlap(tab_lo, tab_hi, params.L)) / math.sqrt(n2_lo * n2_hi)
    return 8.0 * (1.0 - overlap) / delta**2


# ---------------------------------------------------------------------------
# classical Fisher information
# ---------------------------------------------------------------------------


def _cfi_quadrature(spec: StateSpec, params: ModelParams, order: int) -> float:
    """CFI by direct quadrature of 4 (d_c |psi|)^2 on the ordered simplex.

    Uses the pointwise identity d_c|psi| = Re(psi* d_c psi)/|psi| on the
    normalized wavefunction; nodes of |psi| are measure-zero and guarded.
    """
    solution = solve_bethe(spec, params)
    table = amplitudes(solution, params, spec.bc)
    n2 = norm_sq(solution.k, params, spec.bc).norm_sq
    dn2 = dnorm_sq_dc(spec, params)
    norm = math.sqrt(n2)
    dnorm = dn2 / (2.0 * norm)
    sym = math.sqrt(math.factorial(spec.n))

    def integrand(points: np.ndarray) -> np.ndarray:
        vals, dvals = eval_batch(table, points)
        psi = vals / (sym * norm)
        dpsi = dvals / (sym * norm) - vals * (dnorm / (sym * n2))
        abs_sq = psi.real**2 + psi.imag**2
        radial = (np.conj(psi) * dpsi).real
        safe = np.maximum(abs_sq, 1e-300)
        out = 4.0 * radial * radial / safe
        return np.where(abs_sq < 1e-300, 0.0, out)

    value = simplex_quadrature(integrand, spec.n, params.L, order)
    return float(math.factorial(spec.n) * value.real)


def cfi(
    spec: StateSpec,
    params: ModelParams,
    force_quadrature: bool = False,
    order: Optional[int] = None,
) -> float:
    """CFI of the N-particle position measurement for the coupling.

    States whose global phase is c-independent (real/imaginary class)
    saturate CFI = QFI, so the analytic QFI is returned directly; the
    general ring states go through the simplex quadrature.
    """
    cls = global_phase_class(spec)
    if cls in (PhaseClass.REAL, PhaseClass.IMAGINARY) and not force_quadrature:
        return qfi_analytic(spec, params)
    return _cfi_quadrature(spec, params, order or default_order(spec.n))


# ---------------------------------------------------------------------------
# reports, optimal size, sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FisherReport:
    """QFI/CFI of one (state, c, L) point with method metadata."""

    qfi: float
    cfi: float
    phase_variance_term: float
    state: StateSpec
    params: ModelParams
    method: dict


def fisher_report(
    spec: StateSpec,
    params: ModelParams,
    force_quadrature: bool = False,
    order: Optional[int] = None,
) -> FisherReport:
    cls = global_phase_class(spec)
    qfi_value, residue = _qfi_with_residue(spec, params)
    saturated = cls in (PhaseClass.REAL, PhaseClass.IMAGINARY)
    if saturated and not force_quadrature:
        cfi_value = qfi_value
        route = "analytic"
        used_order = None
    else:
        used_order = order or default_order(spec.n)
        cfi_value = _cfi_quadrature(spec, params, used_order)
        route = "quadrature"
    return FisherReport(
        qfi=qfi_value,
        cfi=cfi_value,
        phase_variance_term=max(0.0, qfi_value - cfi_value),
        state=spec,
        params=params,
        method={
            "phase_class": cls.value,
            "cfi_route": route,
            "quadrature_order": used_order,
            "qfi_imag_residue": residue,
        },
    )


def lmax(
    spec: StateSpec,
    c: float,
    bracket: tuple,
    tol: Optional[float] = None,
) -> tuple:
    """System size maximizing the CFI at fixed coupling, by golden section.

    Returns (L_max, F_max).  Raises BracketError when the maximum sits at
    a bracket edge, i.e. the bracket holds no interior maximum.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (hi > lo > 0):
        raise ValueError("bracket must satisfy 0 < lo < hi")
    if tol is None:
        tol = 1e-3 * max(1.0, hi)

    def objective(L: float) -> float:
        return cfi(spec, ModelParams(c, L))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1 = objective(x1)
    f2 = objective(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = objective(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = objective(x1)
    l_best = 0.5 * (a + b)
    f_best = objective(l_best)
    if l_best - lo < 2.0 * tol or hi - l_best < 2.0 * tol:
        raise BracketError(
            f"CFI maximum sits at the bracket edge (L = {l_best:.6g}); widen the bracket"
        )
    return float(l_best), float(f_best)


@dataclass
class SweepResult:
    """Fisher reports over one axis; failed points carry None + a message."""

    axis: str
    grid: tuple
    reports: tuple
    errors: dict

    def values(self, field: str = "cfi") -> np.ndarray:
        return np.array(
            [getattr(r, field) if r is not None else np.nan for r in self.reports]
        )

    def trend(self, field: str = "cfi") -> str:
        vals = self.values(field)
        vals = vals[np.isfinite(vals)]
        if vals.size < 2:
            return "flat"
        diffs = np.diff(vals)
        if np.all(diffs < 0):
            return "decreasing"
        if np.all(diffs > 0):
            return "increasing"
        return "mixed"


def _sweep_point(payload):
    spec, axis, value, fixed_value, force_quadrature = payload
    try:
        if axis == "c":
            params = ModelParams(value, fixed_value)
        else:
            params = ModelParams(fixed_value, value)
        return ("ok", fisher_report(spec, params, force_quadrature=force_quadrature))
    except Exception as exc:  # per-point failures recorded, sweep continues
        return ("error", f"{type(exc).__name__}: {exc}")


def sweep(
    spec: StateSpec,
    axis: str,
    grid: Sequence[float],
    fixed_value: float,
    force_quadrature: bool = False,
) -> SweepResult:
    """Fisher reports along a strictly increasing c- or L-grid.

    Grid points are independent; with LLFISHER_WORKERS > 1 they run in a
    process pool, results reduced in grid order either way.
    """
    if axis not in ("c", "L"):
        raise ValueError("axis must be 'c' or 'L'")
    grid_arr = np.asarray(grid, dtype=float)
    if grid_arr.size == 0:
        raise ValueError("sweep grid is empty")
    if np.any(np.diff(grid_arr) <= 0):
        raise ValueError("sweep grid must be strictly increasing")

    payloads = [(spec, axis, float(v), float(fixed_value), force_quadrature) for v in grid_arr]
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_point, payloads))
    else:
        outcomes = [_sweep_point(p) for p in payloads]

    reports = []
    errors = {}
    for idx, (status, item) in enumerate(outcomes):
        if status == "ok":
            reports.append(item)
        else:
            reports.append(None)
            errors[idx] = item
    return SweepResult(
        axis=axis, grid=tuple(float(v) for v in grid_arr), reports=tuple(reports), errors=errors
    )
