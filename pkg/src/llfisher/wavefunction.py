"""Evaluation of the Bethe-ansatz wavefunction and its coupling derivative.

On the ordered domain 0 <= x_1 <= ... <= x_N <= L the unnormalized
eigenfunction is a permutation sum of plane waves,

  ring:  psi~(x) = sum_P A(P) exp(i sum_j k_{P_j} x_j),
         A(P) = prod_{j<l} (1 + i c / (k_{P_j} - k_{P_l})),

  box:   psi~(x) = sum_{eps, P} pi_eps A(eps, P)
                   exp(i sum_j eps_j k_{P_j} x_j),
         A(eps, P) = prod_{j<l} [1 - i c / (kap_j + kap_l)]
                               [1 + i c / (kap_j - kap_l)],

with kap_j = eps_j k_{P_j}, eps_j = +-1 and pi_eps = prod_j eps_j.  The
bosonic extension to [0, L]^N sorts the coordinates first.

Amplitude tables carry every coefficient together with its analytic
c-derivative (product rule through dk/dc), so pointwise values and
d(psi)/dc come out of a single pass over the table.  Terms are summed
with compensated (Kahan) accumulation for N >= 4, where the N! or 2^N N!
unimodular-weighted contributions start cancelling destructively.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bethe import BetheSolution, BoundaryCondition, ModelParams, StateSpec

# Particle-number caps reflecting the ~N!^2 / 2^(2N) N!^2 cost of the
# downstream double-permutation sums; override explicitly if you accept
# the wait.
MAX_N_PERIODIC = 5
MAX_N_HARD_WALL = 4

KAHAN_MIN_N = 4


class DegenerateStateError(ValueError):
    """Two quasimomenta coincide; the ansatz coefficients are singular."""


class PhaseClass(enum.Enum):
    """How the wavefunction's global phase depends on the coupling."""

    REAL = "real"
    IMAGINARY = "imaginary"
    GENERAL = "general"


@dataclass(frozen=True)
class AmplitudeTable:
    """All ansatz coefficients of one solved state, with c-derivatives.

    Each row is one term of the permutation (and, in the box, sign) sum:
    ``kappa`` holds the signed quasimomenta entering the exponent,
    ``weight`` the sign prefactor pi_eps (all ones on the ring), ``amp``
    and ``damp`` the coefficient A and dA/dc.
    """

    bc: BoundaryCondition
    n: int
    L: float
    perms: np.ndarray
    signs: np.ndarray
    weight: np.ndarray
    amp: np.ndarray
    damp: np.ndarray
    kappa: np.ndarray
    dkappa: np.ndarray

    def __post_init__(self) -> None:
        for name in ("perms", "signs", "weight", "amp", "damp", "kappa", "dkappa"):
            getattr(self, name).setflags(write=False)

    @property
    def n_terms(self) -> int:
        return self.amp.size


@dataclass(frozen=True)
class PointEval:
    value: complex
    dvalue_dc: complex
    at: tuple


def _coefficient(kappa: np.ndarray, dkappa: np.ndarray, c: float, hard_wall: bool):
    """A and dA/dc for one signed-momentum row, by product rule.

    Every factor is 1 + ic/u with real u != 0, so it cannot vanish and
    the logarithmic derivative is safe.
    """
    n = kappa.size
    scale = max(1.0, float(np.max(np.abs(kappa))))
    amp = 1.0 + 0.0j
    logder = 0.0 + 0.0j
    for j in range(n):
        for l in range(j + 1, n):
            u = kappa[j] - kappa[l]
            if abs(u) < 1e-14 * scale:
                raise DegenerateStateError("coincident quasimomenta in amplitude product")
            du = dkappa[j] - dkappa[l]
            f = 1.0 + 1j * c / u
            amp *= f
            logder += (1j / u - 1j * c * du / (u * u)) / f
            if hard_wall:
                v = kappa[j] + kappa[l]
                if abs(v) < 1e-14 * scale:
                    raise DegenerateStateError("vanishing quasimomentum sum in amplitude product")
                dv = dkappa[j] + dkappa[l]
                g = 1.0 - 1j * c / v
                amp *= g
                logder += (-1j / v + 1j * c * dv / (v * v)) / g
    return amp, amp * logder


def amplitudes(
    solution: BetheSolution,
    params: ModelParams,
    bc: BoundaryCondition,
    allow_large_n: bool = False,
) -> AmplitudeTable:
    """Build the full coefficient table of a solved state.

    N! rows on the ring, 2^N N! in the box.  Raises unless N is within
    the default cap (see module docstring) or ``allow_large_n`` is set.
    """
    n = solution.n
    cap = MAX_N_PERIODIC if bc is BoundaryCondition.PERIODIC else MAX_N_HARD_WALL
    if n > cap and not allow_large_n:
        raise ValueError(
            f"N={n} exceeds the default cap {cap} for {bc.value}; "
            "pass allow_large_n=True to override"
        )

    k = solution.k
    dk = solution.dk_dc
    perm_list = list(itertools.permutations(range(n)))
    if bc is BoundaryCondition.PERIODIC:
        sign_list = [np.ones(n)]
    else:
        sign_list = [np.array(s, dtype=float) for s in itertools.product((1.0, -1.0), repeat=n)]

    rows_p, rows_s, rows_w = [], [], []
    rows_a, rows_da, rows_kap, rows_dkap = [], [], [], []
    for signs in sign_list:
        pi_eps = float(np.prod(signs))
        for perm in perm_list:
            perm_arr = np.array(perm, dtype=int)
            kap = signs * k[perm_arr]
            dkap = signs * dk[perm_arr]
            amp, damp = _coefficient(kap, dkap, params.c, bc is BoundaryCondition.HARD_WALL)
            rows_p.append(perm_arr)
            rows_s.append(signs)
            rows_w.append(pi_eps)
            rows_a.append(amp)
            rows_da.append(damp)
            rows_kap.append(kap)
            rows_dkap.append(dkap)

    return AmplitudeTable(
        bc=bc,
        n=n,
        L=params.L,
        perms=np.array(rows_p, dtype=int),
        signs=np.array(rows_s, dtype=float),
        weight=np.array(rows_w, dtype=float),
        amp=np.array(rows_a, dtype=complex),
        damp=np.array(rows_da, dtype=complex),
        kappa=np.array(rows_kap, dtype=float),
        dkappa=np.array(rows_dkap, dtype=float),
    )


def _kahan_accumulate(total: np.ndarray, comp: np.ndarray, term: np.ndarray) -> None:
    y = term - comp
    t = total + y
    comp[...] = (t - total) - y
    total[...] = t


def eval_batch(table: AmplitudeTable, points: np.ndarray, chunk: int = 200_000):
    """(psi~, d psi~/dc) at a batch of ordered points, shape (M, N).

    Points are processed in chunks to bound the (M, n_terms) phase
    matrix; the reduction order over terms is fixed, so results are
    deterministic.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m_total = points.shape[0]
    values = np.empty(m_total, dtype=complex)
    dvalues = np.empty(m_total, dtype=complex)
    w_amp = table.weight * table.amp
    w_damp = table.weight * table.damp

    max_rows = max(1, chunk // max(1, table.n_terms))
    for start in range(0, m_total, max_rows):
        block = points[start : start + max_rows]
        if table.n < KAHAN_MIN_N:
            phases = np.exp(1j * (block @ table.kappa.T))
            vals = phases @ w_amp
            dvals = phases @ w_damp + 1j * (
                ((block @ table.dkappa.T) * phases) @ w_amp
            )
        else:
            m = block.shape[0]
            vals = np.zeros(m, dtype=complex)
            dvals = np.zeros(m, dtype=complex)
            comp_v = np.zeros(m, dtype=complex)
            comp_d = np.zeros(m, dtype=complex)
            for t in range(table.n_terms):
                phase = np.exp(1j * (block @ table.kappa[t]))
                _kahan_accumulate(vals, comp_v, w_amp[t] * phase)
                _kahan_accumulate(
                    dvals,
                    comp_d,
                    (w_damp[t] + 1j * w_amp[t] * (block @ table.dkappa[t])) * phase,
                )
        values[start : start + max_rows] = vals
        dvalues[start : start + max_rows] = dvals
    return values, dvalues


def eval_ordered(table: AmplitudeTable, solution: BetheSolution, x: Iterable[float]) -> PointEval:
    """Ansatz value and c-derivative at one ordered point x_1 <= ... <= x_N."""
    x_arr = np.asarray(tuple(x), dtype=float)
    if x_arr.size != table.n:
        raise ValueError(f"point must have {table.n} coordinates")
    if np.any(np.diff(x_arr) < 0):
        raise ValueError("coordinates must be in ascending order; use eval_symmetric")
    vals, dvals = eval_batch(table, x_arr[None, :])
    return PointEval(value=complex(vals[0]), dvalue_dc=complex(dvals[0]), at=tuple(x_arr))


def eval_symmetric(
    table: AmplitudeTable, solution: BetheSolution, x: Iterable[float]
) -> PointEval:
    """Bosonic (symmetric) extension: sort the coordinates, then evaluate."""
    x_arr = np.asarray(tuple(x), dtype=float)
    L = table.L
    if np.any(x_arr < -1e-12 * L) or np.any(x_arr > L * (1 + 1e-12)):
        raise ValueError("coordinates must lie in [0, L]")
    ordered = np.sort(x_arr)
    out = eval_ordered(table, solution, ordered)
    return PointEval(value=out.value, dvalue_dc=out.dvalue_dc, at=tuple(x_arr))


def global_phase_class(spec: StateSpec, solution: BetheSolution | None = None) -> PhaseClass:
    """Classify the coupling dependence of the wavefunction's global phase.

    Box states are real (even N) or purely imaginary (odd N) outright.
    Ring states factor into a c-independent phase times a real function
    exactly when the quantum numbers are symmetric about their own
    center, i.e. I_j + I_{N+1-j} is the same for every j; the quasimomenta
    then stay mirror-symmetric about a fixed center for all c.  For these
    two classes the position measurement is optimal (CFI = QFI).
    """
    if spec.bc is BoundaryCondition.HARD_WALL:
        return PhaseClass.REAL if spec.n % 2 == 0 else PhaseClass.IMAGINARY
    qn = spec.qn_array
    sums = qn + qn[::-1]
    if np.max(np.abs(sums - sums[0])) < 1e-12:
        return PhaseClass.REAL
    return PhaseClass.GENERAL
