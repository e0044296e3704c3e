"""Tabular urn process: conservation, convergence, trajectory format."""

import csv

import numpy as np
import pytest

from apa import profiles, urn


def test_urn_init_counts_sum_to_n_balls():
    counts = urn.urn_init(100, 3, np.random.default_rng(0))
    assert counts.sum() == 100
    assert counts.shape == (3,)
    assert np.all(counts >= 0)


def test_urn_init_rejects_empty():
    with pytest.raises(ValueError):
        urn.urn_init(0, 3, np.random.default_rng(0))


def test_urn_config_validation():
    with pytest.raises(ValueError):
        urn.UrnConfig(n_alternatives=3, mutation_rate=1.5)
    with pytest.raises(ValueError):
        urn.UrnConfig(n_alternatives=0)
    with pytest.raises(ValueError):
        urn.UrnConfig(n_alternatives=3, n_balls=0)


def test_ball_conservation():
    users, oracle = profiles.cyclic_three_profile()
    sampler = profiles.uniform_user_sampler(users)
    cfg = urn.UrnConfig(n_alternatives=3, n_balls=50, mutation_rate=0.05)
    traj = urn.urn_run(cfg, 2000, oracle, sampler, np.random.default_rng(1))
    assert traj.initial.sum() == 50
    assert np.all(traj.snapshots.sum(axis=1) == 50)
    assert np.all(traj.snapshots >= 0)


def test_unanimous_profile_absorbs():
    users, oracle = profiles.unanimous_profile(3, best=1)
    sampler = profiles.uniform_user_sampler(users)
    cfg = urn.UrnConfig(n_alternatives=3, n_balls=100, mutation_rate=0.0)
    traj = urn.urn_run(cfg, 5000, oracle, sampler, np.random.default_rng(2))
    assert traj.snapshots[-1, 1] == 100


def test_rps_time_average_near_uniform():
    users, oracle = profiles.cyclic_three_profile()
    sampler = profiles.uniform_user_sampler(users)
    cfg = urn.UrnConfig(n_alternatives=3, n_balls=100, mutation_rate=0.01)
    traj = urn.urn_run(cfg, 80_000, oracle, sampler, np.random.default_rng(3))
    avg = urn.time_average(traj, burn_in=8000)
    assert avg.sum() == pytest.approx(1.0)
    assert np.max(np.abs(avg - 1.0 / 3.0)) < 0.1


def test_time_average_burn_in_validation():
    users, oracle = profiles.cyclic_three_profile()
    sampler = profiles.uniform_user_sampler(users)
    cfg = urn.UrnConfig(n_alternatives=3)
    traj = urn.urn_run(cfg, 10, oracle, sampler, np.random.default_rng(0))
    with pytest.raises(ValueError):
        urn.time_average(traj, burn_in=10)


def test_trajectory_csv(tmp_path):
    users, oracle = profiles.cyclic_three_profile()
    sampler = profiles.uniform_user_sampler(users)
    cfg = urn.UrnConfig(n_alternatives=3, n_balls=20)
    traj = urn.urn_run(cfg, 5, oracle, sampler, np.random.default_rng(4))
    path = tmp_path / "traj.csv"
    urn.trajectory_to_csv(traj, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "count_0", "count_1", "count_2"]
    assert len(rows) == 7  # header + initial + 5 steps
    assert [int(v) for v in rows[1][1:]] == list(traj.initial)
    for row in rows[1:]:
        assert sum(int(v) for v in row[1:]) == 20
