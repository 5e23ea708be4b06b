"""Shared fixtures: the synthetic two-Gaussian PU fixture and its pipeline runs."""
from __future__ import annotations

import time

import numpy as np
import pytest

from trendpu.data import GaussianConfig, gen_two_gaussians, make_pu_split
from trendpu.pipeline import PipelineConfig, run_pipeline, train_and_trace

DIM, SIGMA, N, PI, N_LABELED = 50, 0.5, 2000, 0.5, 200
BATCH, T = 64, 30
FIXTURE_SEEDS = (0, 1, 2, 3, 4)


def fixture_interval(n_unlabeled: int, batch: int = BATCH) -> int:
    """Snapshot interval scaled to the data: a quarter of an unlabeled epoch."""
    return max(1, (n_unlabeled // batch) // 4)


def make_fixture(seed: int):
    """(pu, test set, config) for one seed of the end-to-end fixture."""
    data = gen_two_gaussians(GaussianConfig(DIM, SIGMA, N, PI), seed)
    pu = make_pu_split(data, N_LABELED, seed + 1)
    test = gen_two_gaussians(GaussianConfig(DIM, SIGMA, 1000, PI), seed + 10_000)
    config = PipelineConfig(batch_size=BATCH, snapshot_interval=fixture_interval(pu.n_unlabeled),
                            max_snapshots=T, alpha=2.0, stopping="fixed", seed=seed)
    return pu, test, config


@pytest.fixture(scope="session")
def fixture_runs():
    """Pipeline report, traces and wall time for every fixture seed."""
    runs = []
    for seed in FIXTURE_SEEDS:
        pu, test, config = make_fixture(seed)
        t0 = time.perf_counter()
        report = run_pipeline(config, pu, test)
        elapsed = time.perf_counter() - t0
        traces, _ = train_and_trace(pu, config)
        runs.append({"seed": seed, "pu": pu, "test": test, "config": config,
                     "report": report, "traces": traces, "seconds": elapsed})
    return runs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
