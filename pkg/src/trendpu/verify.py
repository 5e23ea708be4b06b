"""Verification suites run by ``trendpu verify``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jenks, theory
from .errors import UnlearnableHyperplaneError
from .model import ModelSpec, backward, batch_loss, init_params

__all__ = ["Check", "jenks_suite", "gradient_suite", "concentration_suite",
           "hyperplane_suite", "SUITES"]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    reproduce: str = ""


def random_break_input(rng, max_n: int) -> np.ndarray:
    """Uniform or two-component normal sample of random size in [2, max_n]."""
    n = int(rng.integers(2, max_n + 1))
    if rng.random() < 0.5:
        return rng.uniform(-1.0, 1.0, size=n)
    k = int(rng.integers(1, n)) if n > 1 else 1
    gap = rng.uniform(0.5, 5.0)
    return np.concatenate([rng.normal(0.0, 1.0, size=k), rng.normal(gap, 1.0, size=n - k)])


def jenks_suite(trials: int = 200, max_n: int = 500, seed: int = 0) -> list[Check]:
    matches = 0
    failures = []
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        x = random_break_input(np.random.default_rng(child), max_n)
        fast = jenks.natural_break_fast(x)
        slow = jenks.natural_break_oracle(x)
        same_obj = abs(fast.objective - slow.objective) <= 1e-9
        if fast.break_index == slow.break_index and same_obj:
            matches += 1
            continue
        # a different index is acceptable only for a numerical tie
        xs = np.sort(x)
        tie = abs(jenks.split_objective(xs, fast.break_index)
                  - jenks.split_objective(xs, slow.break_index)) <= 1e-12
        if tie and same_obj:
            matches += 1
        else:
            failures.append(f"trial={k} n={x.size} fast=({fast.break_index}, {fast.objective!r}) "
                            f"oracle=({slow.break_index}, {slow.objective!r})")
    return [Check("jenks-oracle-equivalence", not failures,
                  f"{matches}/{trials} oracle matches",
                  "; ".join(failures[:5]) + (f" (seed={seed}, max_n={max_n})" if failures else ""))]


def finite_difference_grad(params, pos, unl, h: float = 1e-5):
    """Central differences of batch_loss for every parameter entry."""
    out = params.zeros_like()
    for p_arr, g_arr in zip(params.arrays(), out.arrays()):
        flat, gflat = p_arr.reshape(-1), g_arr.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = batch_loss(params, pos, unl)
            flat[i] = old - h
            down = batch_loss(params, pos, unl)
            flat[i] = old
            gflat[i] = (up - down) / (2.0 * h)
    return out


def max_relative_error(a, b, floor: float = 1e-8) -> float:
    worst = 0.0
    for x, y in zip(a.arrays(), b.arrays()):
        den = np.maximum(np.maximum(np.abs(x), np.abs(y)), floor)
        worst = max(worst, float(np.max(np.abs(x - y) / den)))
    return worst


def gradient_fixture(rng):
    """Random (spec, params, positive batch, unlabeled batch); half logistic, half 2-hidden MLP."""
    d = int(rng.integers(2, 7))
    hidden = () if rng.random() < 0.5 else (int(rng.integers(2, 7)), int(rng.integers(2, 7)))
    spec = ModelSpec(d, hidden)
    params = init_params(spec, rng)
    npos, nunl = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    return spec, params, rng.normal(size=(npos, d)), rng.normal(size=(nunl, d))


def gradient_suite(trials: int = 50, seed: int = 0, tol: float = 1e-4) -> list[Check]:
    worst, worst_case = 0.0, ""
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        spec, params, pos, unl = gradient_fixture(np.random.default_rng(child))
        err = max_relative_error(backward(params, pos, unl), finite_difference_grad(params, pos, unl))
        if err > worst:
            worst, worst_case = err, f"trial={k} spec={spec}"
    return [Check("gradient-finite-differences", worst < tol,
                  f"max relative error {worst:.3e} over {trials} fixtures (tol {tol:g})",
                  "" if worst < tol else f"{worst_case} seed={seed}")]


def concentration_suite(epsilon: float = 0.05, trials: int = 1000, seed: int = 0,
                        ts=(10, 20, 40), alpha: float = 2.0, mu: float = 0.1,
                        sigma_d: float = 0.2) -> list[Check]:
    checks = []
    medians = {}
    for t in ts:
        cfg = theory.ConcentrationConfig(t, alpha, mu, sigma_d, epsilon, trials, seed + t)
        rep = theory.concentration_experiment(cfg)
        medians[t] = rep.median_deviation
        checks.append(Check(
            f"coverage t={t}", rep.coverage >= 1.0 - 2.0 * epsilon,
            f"coverage {rep.coverage:.4f} (need >= {1 - 2 * epsilon:.2f}), bound {rep.bound:.5f}, "
            f"median deviation {rep.median_deviation:.5f}",
            f"{cfg}"))
    if len(ts) >= 2:
        lo, hi = min(ts), max(ts)
        ratio = medians[lo] / medians[hi]
        checks.append(Check(
            f"rate t={lo}->{hi}", ratio >= 2.0,
            f"median deviation shrinks by {ratio:.2f}x (need >= 2)", f"seed={seed}"))
    return checks


def hyperplane_suite(trials: int = 50, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst_offset = 0.0
    worst_root = 0.0
    side_ok = True
    unlearnable_ok = True
    for _ in range(trials):
        p = int(rng.integers(1, 20))
        v = rng.normal(size=p)
        pi = float(rng.uniform(0.01, 0.99))
        sigma = float(rng.uniform(0.1, 3.0))
        s = theory.HyperplaneSetting(v, sigma, pi, 1.0)
        worst_offset = max(worst_offset, abs(theory.hyperplane_offset(s)))
        worst_root = max(worst_root, abs(theory.g_pu_root(s)))
        x = rng.normal(size=(20, p))
        proj = x @ s.v
        g = theory.g_pu(x, s)
        side_ok &= bool(np.all(g * proj > 0))
        try:
            theory.hyperplane_offset(theory.HyperplaneSetting(v, sigma, pi, pi * rng.uniform(0.1, 1.0)))
            unlearnable_ok = False
        except UnlearnableHyperplaneError:
            pass
    return [
        Check("offset(r=1)=0", worst_offset <= 1e-12,
              f"max |offset| {worst_offset:.3e} across {trials} settings", f"seed={seed}"),
        Check("g_pu root at 0", worst_root <= 1e-9,
              f"max |root| {worst_root:.3e} across {trials} settings", f"seed={seed}"),
        Check("same side as balanced PN", side_ok, "sign(g_pu) == sign(v.x) off the plane",
              f"seed={seed}"),
        Check("r <= pi unlearnable", unlearnable_ok, "hyperplane_offset raises when r <= pi",
              f"seed={seed}"),
    ]


SUITES = {
    "jenks": jenks_suite,
    "gradients": gradient_suite,
    "concentration": concentration_suite,
    "hyperplane": hyperplane_suite,
}
