"""Bethe solver, Gaudin matrices and norms against finite-difference oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llfisher.bethe import (
    BoundaryCondition,
    ModelParams,
    SolverError,
    StateSpec,
    bethe_residual,
    dk_dc,
    dnorm_sq_dc,
    gaudin_matrix,
    ground_state,
    momentum,
    momentum_of,
    norm_sq,
    solve_bethe,
    type1_excitation,
    type2_excitation,
)

PER = BoundaryCondition.PERIODIC
HW = BoundaryCondition.HARD_WALL


# ---------------------------------------------------------------------------
# state constructors and validation
# ---------------------------------------------------------------------------


def test_ground_state_examples():
    assert ground_state(PER, 2).quantum_numbers == (-0.5, 0.5)
    assert ground_state(HW, 3).quantum_numbers == (1.0, 2.0, 3.0)
    assert ground_state(PER, 1).quantum_numbers == (0.0,)


def test_ground_state_rejects_bad_n():
    with pytest.raises(ValueError):
        ground_state(PER, 0)


def test_type1_examples():
    assert type1_excitation(PER, 2, 2).quantum_numbers == (-0.5, 2.5)
    assert type1_excitation(HW, 2, 2).quantum_numbers == (1.0, 4.0)
    assert type1_excitation(PER, 3, 1).quantum_numbers == (-1.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        type1_excitation(PER, 2, 0)


def test_type2_examples():
    assert type2_excitation(PER, 2, 1).quantum_numbers == (0.5, 1.5)
    assert type2_excitation(HW, 3, 1).quantum_numbers == (2.0, 3.0, 4.0)
    assert type2_excitation(HW, 3, 2).quantum_numbers == (1.0, 3.0, 4.0)
    for bad_q in (0, 3):
        with pytest.raises(ValueError):
            type2_excitation(PER, 3, bad_q)


def test_statespec_validation():
    with pytest.raises(ValueError):
        StateSpec(PER, 2, (0.5, 0.5))  # duplicates
    with pytest.raises(ValueError):
        StateSpec(PER, 2, (0.0, 1.0))  # wrong parity for even N
    with pytest.raises(ValueError):
        StateSpec(PER, 3, (-0.5, 0.5, 1.5))  # wrong parity for odd N
    with pytest.raises(ValueError):
        StateSpec(HW, 2, (0.0, 1.0))  # box numbers must be >= 1
    with pytest.raises(ValueError):
        StateSpec(HW, 2, (1.5, 2.5))  # box numbers must be integers
    with pytest.raises(ValueError):
        StateSpec(PER, 0, ())


def test_modelparams_validation():
    with pytest.raises(ValueError):
        ModelParams(-1.0, 1.0)
    with pytest.raises(ValueError):
        ModelParams(1.0, 0.0)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def test_single_particle_ring_is_zero():
    sol = solve_bethe(ground_state(PER, 1), ModelParams(3.7, 2.0))
    assert sol.k[0] == pytest.approx(0.0, abs=1e-14)
    assert sol.energy == pytest.approx(0.0, abs=1e-28)


def test_strong_coupling_ring_pair():
    sol = solve_bethe(ground_state(PER, 2), ModelParams(1e6, 1.0))
    assert np.allclose(sol.k, [-np.pi, np.pi], atol=1e-3)


def test_weak_coupling_box_pair():
    c = 1e-8
    sol = solve_bethe(ground_state(HW, 2), ModelParams(c, 1.0))
    expected = np.array([np.pi - np.sqrt(c / 2), np.pi + np.sqrt(c / 2)])
    assert np.max(np.abs(sol.k - expected) / expected) < 1e-6


def test_weak_coupling_ring_pair_hermite_zeros():
    # ground-state quasimomenta collapse onto sqrt(2c/L) times the
    # Hermite zeros -+1/sqrt(2), i.e. -+sqrt(c) at L = 1
    c = 1e-8
    sol = solve_bethe(ground_state(PER, 2), ModelParams(c, 1.0))
    assert np.allclose(sol.k, [-np.sqrt(c), np.sqrt(c)], rtol=1e-3)


@pytest.mark.parametrize(
    "spec,params",
    [
        (ground_state(PER, 3), ModelParams(0.7, 2.0)),
        (type1_excitation(PER, 3, 2), ModelParams(5.0, 1.0)),
        (ground_state(HW, 3), ModelParams(0.05, 3.0)),
        (type2_excitation(HW, 3, 1), ModelParams(12.0, 0.5)),
        (ground_state(PER, 4), ModelParams(0.2, 40.0)),
    ],
)
def test_residual_and_ordering_invariants(spec, params):
    sol = solve_bethe(spec, params)
    scale = max(1.0, params.L * np.max(np.abs(sol.k)))
    assert sol.residual <= 1e-12 * scale
    assert np.max(np.abs(bethe_residual(sol.k, spec, params))) <= 1e-12 * scale
    assert np.all(np.diff(sol.k) > 0)
    if spec.bc is HW:
        assert sol.k[0] > 0
    assert sol.energy == pytest.approx(np.sum(sol.k**2))


def test_translation_covariance():
    # shifting all ring quantum numbers by J shifts every k by 2 pi J / L
    params = ModelParams(1.3, 2.0)
    base = solve_bethe(ground_state(PER, 3), params)
    shifted = solve_bethe(StateSpec(PER, 3, (1.0, 2.0, 3.0)), params)
    assert np.max(np.abs(shifted.k - (base.k + 2.0 * np.pi * 2.0 / params.L))) < 1e-10


@settings(max_examples=10, deadline=None)
@given(
    shift=st.integers(-4, 4).filter(lambda j: j != 0),
    c=st.floats(0.1, 20.0),
)
def test_translation_covariance_property(shift, c):
    params = ModelParams(c, 1.5)
    base = solve_bethe(ground_state(PER, 2), params)
    moved_qn = tuple(v + shift for v in ground_state(PER, 2).quantum_numbers)
    moved = solve_bethe(StateSpec(PER, 2, moved_qn), params)
    expected = base.k + 2.0 * np.pi * shift / params.L
    assert np.max(np.abs(moved.k - expected)) < 1e-10
    # the c-derivatives are translation-invariant outright
    assert np.max(np.abs(moved.dk_dc - base.dk_dc)) < 1e-10


@pytest.mark.parametrize("bc", [PER, HW])
def test_strong_coupling_limit(bc):
    L = 1.0
    spec = ground_state(bc, 3)
    sol = solve_bethe(spec, ModelParams(1e6 / L, L))
    unit = 2.0 * np.pi / L if bc is PER else np.pi / L
    anchor = unit * spec.qn_array
    mask = np.abs(anchor) > 0
    assert np.max(np.abs((sol.k[mask] - anchor[mask]) / anchor[mask])) < 1e-2


def test_free_gas_limit_distinct_momenta():
    # ring state [-0.5, 1.5] maps to free momenta {0, 2pi/L} at c = 0
    spec = StateSpec(PER, 2, (-0.5, 1.5))
    sol = solve_bethe(spec, ModelParams(0.0, 2.0))
    assert np.allclose(sol.k, [0.0, np.pi], atol=1e-14)


def test_free_gas_limit_refuses_degenerate_states():
    with pytest.raises(ValueError, match="degenerate"):
        solve_bethe(ground_state(PER, 2), ModelParams(0.0, 1.0))
    with pytest.raises(ValueError, match="degenerate"):
        solve_bethe(ground_state(HW, 2), ModelParams(0.0, 1.0))


# ---------------------------------------------------------------------------
# Gaudin matrix
# ---------------------------------------------------------------------------


def test_gaudin_single_particle():
    L = 2.5
    params = ModelParams(1.0, L)
    assert gaudin_matrix([0.0], params, PER) == pytest.approx(np.array([[L]]))
    assert gaudin_matrix([np.pi / L], params, HW) == pytest.approx(np.array([[L]]))


@pytest.mark.parametrize(
    "spec,params",
    [
        (ground_state(PER, 2), ModelParams(1.0, 1.0)),
        (ground_state(PER, 3), ModelParams(0.4, 3.0)),
        (ground_state(HW, 2), ModelParams(1.0, 1.0)),
        (ground_state(HW, 3), ModelParams(6.0, 0.8)),
    ],
)
def test_gaudin_matches_finite_difference_jacobian(spec, params):
    sol = solve_bethe(spec, params)
    analytic = gaudin_matrix(sol.k, params, spec.bc)
    h = 1e-7
    numeric = np.zeros_like(analytic)
    for i in range(spec.n):
        up = sol.k.copy()
        up[i] += h
        down = sol.k.copy()
        down[i] -= h
        numeric[:, i] = (
            bethe_residual(up, spec, params) - bethe_residual(down, spec, params)
        ) / (2 * h)
    assert np.max(np.abs(analytic - numeric)) < 1e-6
    assert np.allclose(analytic, analytic.T)
    assert np.linalg.det(analytic) > 0


# ---------------------------------------------------------------------------
# dk/dc
# ---------------------------------------------------------------------------


def test_dk_dc_single_ring_particle_is_zero():
    params = ModelParams(2.0, 1.5)
    assert dk_dc([0.0], params, PER) == pytest.approx([0.0])


def test_dk_dc_ground_state_antisymmetry():
    params = ModelParams(0.9, 2.0)
    sol = solve_bethe(ground_state(PER, 2), params)
    assert sol.dk_dc[0] == pytest.approx(-sol.dk_dc[1], rel=1e-12)


@pytest.mark.parametrize(
    "spec,params",
    [
        (ground_state(PER, 2), ModelParams(1.0, 1.0)),
        (ground_state(PER, 3), ModelParams(0.3, 5.0)),
        (ground_state(PER, 4), ModelParams(2.0, 1.0)),
        (type2_excitation(PER, 3, 1), ModelParams(0.8, 2.0)),
        (ground_state(HW, 2), ModelParams(1.0, 1.0)),
        (ground_state(HW, 3), ModelParams(0.2, 10.0)),
        (ground_state(HW, 4), ModelParams(4.0, 1.0)),
        (type1_excitation(HW, 3, 2), ModelParams(1.5, 2.0)),
    ],
)
def test_dk_dc_matches_resolve_finite_difference(spec, params):
    sol = solve_bethe(spec, params)
    h = 1e-6 * max(params.c, 1.0)
    k_hi = solve_bethe(spec, ModelParams(params.c + h, params.L)).k
    k_lo = solve_bethe(spec, ModelParams(params.c - h, params.L)).k
    numeric = (k_hi - k_lo) / (2 * h)
    scale = np.max(np.abs(numeric))
    assert np.max(np.abs(sol.dk_dc - numeric)) < 1e-6 * scale


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def test_norm_single_particle_ring():
    params = ModelParams(1.0, 2.0)
    assert norm_sq([0.0], params, PER).norm_sq == pytest.approx(2.0)


def test_norm_single_particle_box():
    # |2 sin(kx)|^2 integrates to 2L for k = pi I / L
    L = 1.7
    params = ModelParams(0.5, L)
    assert norm_sq([np.pi / L], params, HW).norm_sq == pytest.approx(2 * L)


@pytest.mark.parametrize(
    "spec,params",
    [
        (ground_state(PER, 2), ModelParams(1.0, 1.0)),
        (ground_state(HW, 2), ModelParams(1.0, 1.0)),
        (ground_state(PER, 3), ModelParams(0.5, 2.0)),
        (type2_excitation(HW, 3, 2), ModelParams(2.0, 1.0)),
    ],
)
def test_norm_positive_on_grid(spec, params):
    sol = solve_bethe(spec, params)
    data = norm_sq(sol.k, params, spec.bc)
    assert data.norm_sq > 0
    assert np.linalg.det(data.matrix) > 0


def test_dnorm_sq_dc_single_ring_particle():
    assert dnorm_sq_dc(ground_state(PER, 1), ModelParams(1.0, 2.0)) == pytest.approx(0.0)


def test_dnorm_sq_dc_against_five_point_stencil():
    spec = ground_state(PER, 2)
    params = ModelParams(1.0, 1.0)
    got = dnorm_sq_dc(spec, params)

    def n2(c):
        p = ModelParams(c, params.L)
        return norm_sq(solve_bethe(spec, p).k, p, spec.bc).norm_sq

    h = 1e-3
    stencil = (
        -n2(params.c + 2 * h)
        + 8 * n2(params.c + h)
        - 8 * n2(params.c - h)
        + n2(params.c - 2 * h)
    ) / (12 * h)
    assert got == pytest.approx(stencil, rel=1e-4)


def test_dnorm_relative_derivative_saturates_at_strong_coupling():
    spec = ground_state(PER, 2)
    params = ModelParams(1e6, 1.0)
    n2 = norm_sq(solve_bethe(spec, params).k, params, spec.bc).norm_sq
    assert abs(dnorm_sq_dc(spec, params)) / n2 < 1e-5


# ---------------------------------------------------------------------------
# momentum
# ---------------------------------------------------------------------------


def test_momentum_values():
    params = ModelParams(1.0, 2.0)
    ground = ground_state(PER, 2)
    assert momentum(ground, solve_bethe(ground, params)) == pytest.approx(0.0, abs=1e-12)

    moved = StateSpec(PER, 2, (-0.5, 2.5))
    got = momentum(moved, solve_bethe(moved, params))
    assert got == pytest.approx(4.0 * np.pi / params.L, rel=1e-12)

    # box pseudo-momentum (pi/L) sum(I_j - j + 1): N pi / L for the ground
    # state, and the type-I/type-II pairing [1,2,6] <-> [2,3,4] shares 6 pi / L
    box = ground_state(HW, 3)
    assert momentum(box, solve_bethe(box, params)) == pytest.approx(
        3.0 * np.pi / params.L
    )
    assert momentum_of(type2_excitation(HW, 3, 1), params) == pytest.approx(
        6.0 * np.pi / params.L
    )
    assert momentum_of(type1_excitation(HW, 3, 3), params) == pytest.approx(
        momentum_of(type2_excitation(HW, 3, 1), params)
    )
