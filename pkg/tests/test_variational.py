# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Define tests for the discrete variational problem and the diagonal claims."""

import json

import numpy as np
import pytest

from perc_ldp.config import Settings
from perc_ldp.exceptions import InfeasibleProblemError
from perc_ldp.model_analytics import (
    DiagonalSegment,
    PowerSegment,
    Trajectory,
    functional_I,
    optimal_trajectory,
    phi,
    rate_xi,
)
from perc_ldp.variational import (
    Abscissa,
    EndpointMode,
    TrajectoryProblem,
    contact_runs,
    contact_set,
    el_residual,
    maximize_trajectory,
    sigma_total,
    snapped_resolution,
    stationarity_residual,
    verify_diagonal_claims,
)


def test_trajectory_problem_defaults():
    problem = TrajectoryProblem(alpha=0.5, beta=0.9, r=2, m=10)
    assert problem.cap == 3.0
    assert problem.start == pytest.approx(0.25)
    assert problem.endpoint_mode == EndpointMode.FREE
    assert problem.grid[-1] == 0.9
    assert problem.grid.size == 11
    fixed = TrajectoryProblem(alpha=0.5, beta=0.9, r=2, m=10, endpoint=1.1)
    assert fixed.endpoint_mode == EndpointMode.FIXED


@pytest.mark.parametrize(
    "kwargs",
    [
        {"cap": 0.8},
        {"cap": 0.2},
        {"endpoint": 0.5},
        {"endpoint": 3.5},
    ],
)
def test_trajectory_problem_infeasible(kwargs):
    with pytest.raises(InfeasibleProblemError):
        TrajectoryProblem(alpha=0.5, beta=0.9, r=2, m=16, **kwargs)


@pytest.mark.parametrize(
    "kwargs", [{"alpha": 1.0}, {"beta": 0.0}, {"m": 1}, {"r": 1}]
)
def test_trajectory_problem_rejects_invalid(kwargs):
    params = {"alpha": 0.5, "beta": 0.9, "r": 2, "m": 16, **kwargs}
    with pytest.raises(ValueError):
        TrajectoryProblem(**params)


def test_sigma_total_converges_to_xi():
    alpha, beta, r = 0.8, 0.6, 2
    xi = rate_xi(alpha, beta, r).xi
    errors = []
    for k in range(4, 11):
        traj = optimal_trajectory(alpha, beta, r, 2**k)
        errors.append(abs(sigma_total(traj, r).total - xi))
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert errors[-1] < 1e-3
    cell = sigma_total(optimal_trajectory(alpha, beta, r, 1024), r, Abscissa.CELL)
    assert cell.total == pytest.approx(xi, abs=1e-3)


def test_sigma_total_single_cell_on_its_rate():
    # w = s gives sigma = s log(e) - s = 0
    traj = Trajectory(grid=[0.0, 1.0], values=[0.0, 1.0])
    evaluation = sigma_total(traj, 2)
    assert evaluation.total == pytest.approx(0.0, abs=1e-15)
    assert evaluation.sigma.shape == (1,)


def test_sigma_total_flat_trajectory():
    traj = Trajectory(grid=np.linspace(0.0, 1.0, 5), values=np.full(5, 0.3))
    evaluation = sigma_total(traj, 2)
    # s = x_1, x_1, x_2, x_3 with the first cell evaluated at x_1
    np.testing.assert_allclose(evaluation.sigma, [-0.25, -0.25, -0.5, -0.75])
    assert evaluation.total == pytest.approx(-1.75 * 0.25)


def test_sigma_total_rejects_bad_trajectories():
    with pytest.raises(ValueError):
        sigma_total(Trajectory(grid=[0.0, 0.5, 1.0], values=[0.0, 0.5, 0.4]), 2)
    with pytest.raises(ValueError):
        sigma_total(Trajectory(grid=[0.0, 0.1, 1.0], values=[0.0, 0.5, 1.0]), 2)


def test_sigma_frame():
    traj = optimal_trajectory(0.5, 0.9, 2, 8)
    frame = sigma_total(traj, 2).to_frame(traj)
    assert list(frame.columns) == ["x", "f", "sigma"]
    assert np.isnan(frame["sigma"].iloc[-1])


@pytest.mark.parametrize("window, blocks", [(1, 10), (4, 3)])
def test_el_residual_vanishes_on_power_laws(window, blocks):
    traj = optimal_trajectory(0.8, 0.6, 2, 10)
    report = el_residual(traj, 2, window=window)
    assert report.flagged.size == 0
    assert report.residuals.size == blocks
    assert report.max_deviation < 1e-10


def test_el_residual_spreads_along_the_diagonal():
    grid = np.linspace(0.0, 1.0, 21)
    report = el_residual(Trajectory(grid=grid, values=grid), 2)
    assert report.max_deviation > 0.5


def test_el_residual_flags_flat_blocks():
    traj = Trajectory(grid=np.linspace(0.0, 1.0, 11), values=np.full(11, 0.5))
    report = el_residual(traj, 2)
    assert report.flagged.tolist() == list(range(10))
    assert np.all(np.isnan(report.residuals))
    assert np.isnan(report.max_deviation)
    with pytest.raises(ValueError):
        el_residual(traj, 2, window=0)


def test_el_residual_min_rise():
    traj = optimal_trajectory(0.8, 0.6, 2, 10)
    report = el_residual(traj, 2, min_rise=0.01)
    # the power law starts flat, so the first cells rise least
    assert report.flagged.size > 0
    assert report.flagged[0] == 0
    assert report.max_deviation < 1e-10


def test_snapped_resolution():
    problem = TrajectoryProblem(alpha=0.8, beta=0.6, r=2, m=256)
    res = snapped_resolution(problem, 1 / 2000)
    h = 0.6 / 256
    assert res == pytest.approx(h / 5)
    assert snapped_resolution(problem, 10.0) == pytest.approx(h)
    # the default request 1 / 2000 snaps to h / 5
    assert snapped_resolution(problem) == pytest.approx(h / 5)
    finer = snapped_resolution(problem, settings=Settings(lattice_divisor=10000))
    assert finer == pytest.approx(h / 23)
    with pytest.raises(ValueError):
        snapped_resolution(problem, 0.0)


def test_maximizer_tracks_power_law():
    problem = TrajectoryProblem(alpha=0.8, beta=0.6, r=2, m=64)
    traj = maximize_trajectory(problem, resolution=5e-4, abscissa=Abscissa.CELL)
    target = optimal_trajectory(0.8, 0.6, 2, 64)
    assert traj.values[0] == pytest.approx(problem.start)
    assert traj.is_monotone()
    assert traj.satisfies_obstacle(tol=1e-12)
    assert traj.sup_distance(target) <= 2e-2
    res = snapped_resolution(problem, 5e-4)
    assert 0.6 - 1e-12 <= traj.values[-1] <= 0.6 + 3 * res


def test_maximizer_follows_the_diagonal():
    problem = TrajectoryProblem(alpha=0.5, beta=1.0, r=2, m=64)
    traj = maximize_trajectory(problem, resolution=5e-4, abscissa=Abscissa.CELL)
    res = snapped_resolution(problem, 5e-4)
    tol = 2 * res
    touching = contact_set(traj, tol)
    late = np.flatnonzero(traj.grid >= 0.55)
    assert set(late.tolist()) <= set(touching.tolist())
    runs = contact_runs(traj, tol)
    assert len(runs) == 1
    assert runs[0][1] == problem.m
    assert traj.values[-1] == pytest.approx(1.0, abs=tol)
    assert traj.sup_distance(optimal_trajectory(0.5, 1.0, 2, 64)) <= 2e-2


def test_maximizer_fixed_endpoint():
    problem = TrajectoryProblem(alpha=0.5, beta=0.9, r=2, m=32, endpoint=1.2)
    traj = maximize_trajectory(problem, resolution=1e-3)
    res = snapped_resolution(problem, 1e-3)
    assert traj.values[-1] == pytest.approx(1.2, abs=res)
    assert traj.satisfies_obstacle(tol=1e-12)


def test_maximizer_beats_lattice_perturbations():
    problem = TrajectoryProblem(alpha=0.5, beta=0.9, r=2, m=32)
    resolution = 1e-3
    traj = maximize_trajectory(problem, resolution=resolution)
    best = sigma_total(traj, 2).total
    res = snapped_resolution(problem, resolution)
    h = problem.beta / problem.m
    levels = np.round((traj.values - problem.start) / res).astype(int)
    rng = np.random.default_rng(0)
    tried = 0
    for _ in range(500):
        moved = levels.copy()
        for i in rng.integers(1, problem.m, size=rng.integers(1, 4)):
            moved[i] += rng.choice([-1, 1])
        values = problem.start + moved * res
        rises = np.diff(values)
        if np.any(rises < 0) or np.any(values < problem.grid - 1e-12):
            continue
        if np.any(rises > 2 * problem.r * h + 1e-12):
            continue
        tried += 1
        perturbed = Trajectory(grid=problem.grid, values=values)
        assert sigma_total(perturbed, 2).total <= best + 1e-10
    assert tried > 50


def test_maximizer_infeasible_and_invalid_inputs():
    problem = TrajectoryProblem(alpha=0.5, beta=0.9, r=2, m=16)
    with pytest.raises(InfeasibleProblemError):
        maximize_trajectory(problem, max_slope=0.5)
    with pytest.raises(ValueError):
        maximize_trajectory(TrajectoryProblem(alpha=0.5, beta=0.9, r=2, m=4))
    with pytest.raises(ValueError, match="levels"):
        maximize_trajectory(problem, resolution=1e-7)
    # with slopes of at most one the values stay below 0.25 + 0.9
    capped = TrajectoryProblem(alpha=0.5, beta=0.9, r=2, m=16, endpoint=2.0)
    with pytest.raises(InfeasibleProblemError):
        maximize_trajectory(capped, resolution=1e-3, max_slope=1.0)


ACCEPTANCE = [(0.8, 0.6, 2), (0.5, 1.0, 2), (0.6, 0.9, 3)]


@pytest.mark.parametrize("alpha, beta, r", ACCEPTANCE)
def test_maximizer_acceptance(alpha, beta, r):
    # default lattice step and abscissa, as used by the trajectory command
    problem = TrajectoryProblem(alpha=alpha, beta=beta, r=r, m=256)
    traj = maximize_trajectory(problem)
    assert traj.sup_distance(optimal_trajectory(alpha, beta, r, 256)) <= 5e-3


@pytest.mark.parametrize("alpha, beta, r", ACCEPTANCE)
def test_maximizer_value_matches_rate(alpha, beta, r):
    traj = maximize_trajectory(TrajectoryProblem(alpha=alpha, beta=beta, r=r, m=256))
    xi = rate_xi(alpha, beta, r).xi
    assert abs(sigma_total(traj, r).total - xi) <= 1e-2


@pytest.mark.parametrize("alpha, beta, r", ACCEPTANCE)
def test_maximizer_contact_is_one_interval(alpha, beta, r):
    problem = TrajectoryProblem(alpha=alpha, beta=beta, r=r, m=256)
    traj = maximize_trajectory(problem)
    tol = 2 * snapped_resolution(problem)
    runs = contact_runs(traj, tol)
    assert len(runs) == 1
    # every f* here ends on the diagonal
    assert runs[0][1] == problem.m
    if beta > alpha:
        late = np.flatnonzero(traj.grid >= alpha + 0.1)
        assert runs[0][0] <= late[0]


def test_maximizer_converges_on_a_grid():
    gaps = {64: [], 256: []}
    for alpha in (0.3, 0.5, 0.8):
        for beta in (0.6, 0.8, 1.0):
            for m in gaps:
                traj = maximize_trajectory(TrajectoryProblem(alpha=alpha, beta=beta, r=2, m=m))
                gaps[m].append(traj.sup_distance(optimal_trajectory(alpha, beta, 2, m)))
    assert max(gaps[256]) <= 1e-2
    assert np.mean(gaps[256]) < np.mean(gaps[64])


@pytest.mark.slow
@pytest.mark.parametrize("alpha, beta, r", ACCEPTANCE)
def test_stationarity_residual_shrinks_with_m(alpha, beta, r):
    deviations = []
    for m in (64, 128, 256):
        problem = TrajectoryProblem(alpha=alpha, beta=beta, r=r, m=m)
        traj, report = stationarity_residual(problem, max_slope=2.0)
        assert traj.satisfies_obstacle(tol=1e-12)
        assert report.flagged.size < 8
        deviations.append(report.max_deviation)
    assert deviations[1] <= 0.1
    assert deviations[2] <= 0.1
    assert deviations[2] < deviations[0]


def test_stationarity_residual_excludes_contact():
    problem = TrajectoryProblem(alpha=0.5, beta=1.0, r=2, m=64)
    traj, report = stationarity_residual(problem, levels_per_cell=16, max_slope=2.0)
    assert report.window == 8
    # blocks past x = 0.5 run along the diagonal
    assert {4, 5, 6, 7} <= set(report.flagged.tolist())
    assert np.all(np.isnan(report.residuals[report.flagged]))
    assert np.isfinite(report.max_deviation)
    with pytest.raises(ValueError, match="multiple"):
        stationarity_residual(TrajectoryProblem(alpha=0.5, beta=1.0, r=2, m=60))


def test_contact_runs():
    grid = np.linspace(0.0, 1.0, 6)
    values = grid + np.array([0.1, 0.0, 0.0, 0.2, 0.0, 0.0])
    traj = Trajectory(grid=grid, values=values)
    assert contact_set(traj, 1e-12).tolist() == [1, 2, 4, 5]
    assert contact_runs(traj, 1e-12) == [(1, 2), (4, 5)]
    assert contact_runs(Trajectory(grid=grid, values=grid + 1.0), 1e-12) == []


def test_diagonal_inequality_example():
    # leaving the diagonal at b = 0.5 with c2 = 1 up to beta = 0.8
    power = functional_I(PowerSegment(c=1.0, c0=0.0, u=0.5, v=0.8), 0.5, 0.8, 2)
    diagonal = functional_I(DiagonalSegment(u=0.5, v=0.8), 0.5, 0.8, 2)
    assert power == pytest.approx(0.1197, abs=1e-4)
    assert diagonal == pytest.approx(0.1681, abs=1e-4)


def test_claims_hold_on_a_grid():
    report = verify_diagonal_claims(2, [0.3, 0.6], [0.5, 0.8, 1.0])
    assert report.all_hold
    assert report.min_margin > 0
    claims = {c.claim for c in report.checks}
    assert claims == {"diag_coincide", "diag_touch", "touch_limit", "first_contact"}
    frame = report.to_frame()
    assert list(frame.columns) == [
        "claim",
        "alpha",
        "beta",
        "parameter",
        "multiplier",
        "lhs",
        "rhs",
        "margin",
    ]
    record = json.loads(report.to_json())
    assert record["all_hold"] is True
    assert len(record["checks"]) == len(report.checks)


def test_claims_hold_for_r3():
    assert verify_diagonal_claims(3, [0.2, 0.5, 0.8], [0.6, 0.9]).all_hold


@pytest.mark.parametrize("r", [2, 3])
def test_claims_hold_on_the_default_grid(r):
    alphas = [0.1, 0.3, 0.5, 0.7, 0.9]
    betas = [0.2, 0.4, 0.6, 0.8, 1.0]
    report = verify_diagonal_claims(r, alphas, betas)
    assert report.all_hold
    assert report.min_margin > 0
    # every pair above phi_alpha contributes checks
    pairs = {(c.alpha, c.beta) for c in report.checks}
    assert pairs == {(a, b) for a in alphas for b in betas if b > phi(a, r)}


def test_touch_limit_is_tight_below_alpha():
    report = verify_diagonal_claims(2, [0.6], [0.5])
    limits = [c for c in report.checks if c.claim == "touch_limit"]
    assert len(limits) == 1
    assert limits[0].margin == pytest.approx(0.0, abs=1e-12)


def test_first_contact_margin_example():
    report = verify_diagonal_claims(2, [0.6], [0.9])
    contacts = [c for c in report.checks if c.claim == "first_contact"]
    assert contacts[0].parameter == pytest.approx(0.3)
    assert contacts[0].margin == pytest.approx(0.092, abs=1e-3)
    assert all(c.margin > 0 for c in contacts)


def test_claims_skip_invalid_pairs():
    report = verify_diagonal_claims(2, [0.5], [0.1, 1.5])
    assert report.checks == []
    assert np.isnan(report.min_margin)
