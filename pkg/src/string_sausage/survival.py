"""Annealed and quenched survival estimation among Poisson traps.

Hard obstacles kill on contact with the closed ball B(xi, a); survival can
equivalently be estimated through the Poisson identity
S_T = E exp(-nu |sausage|).  Soft indicator obstacles weight each path by
exp(-int int V).  Contact is tested at the sampled (s, x) points only, so
finite resolution overestimates survival; the resolution-doubling report
quantifies the effect.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import rng as streams
from .geometry import PointCloud, bounding_box, sausage_volume_hit_or_miss
from .simulate import Trace, simulate
from .spectral import ModelParams
from .traps import (
    Box,
    GridIndex,
    PoissonEnvironment,
    PotentialKind,
    PotentialSpec,
    any_contact,
    path_functional,
    sample_environment,
)

ENV_PAD_MARGIN = 0.5


class ResolutionError(ValueError):
    """Hard resolution failure: the realized trap box cannot cover the trajectory."""


@dataclass(frozen=True)
class SurvivalEstimate:
    p_hat: float
    stderr: float
    n_replicas: int
    method: str
    params: ModelParams

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0 + 1e-12:
            raise ValueError("p_hat must lie in [0, 1]")

    def ci95(self) -> tuple[float, float]:
        return (self.p_hat - 1.96 * self.stderr, self.p_hat + 1.96 * self.stderr)


@dataclass(frozen=True)
class ScaledParams:
    """Image of (T, nu, a, H) under the J -> 1 diffusive scaling map."""

    T_tilde: float
    nu_tilde: float
    a_tilde: float
    H_scale: float


def scaling_transform(params: ModelParams) -> ScaledParams:
    """(T, nu, a) -> (T J^-2, nu J^{d/2}, a J^{-1/2}); potentials gain height J^3."""
    if params.J < 1:
        raise ValueError("scaling transform requires J >= 1")
    J = params.J
    return ScaledParams(
        T_tilde=params.T / J ** 2,
        nu_tilde=params.nu * J ** (params.d / 2.0),
        a_tilde=params.a / math.sqrt(J),
        H_scale=J ** 3,
    )


def scaled_unit_params(params: ModelParams) -> ModelParams:
    """Unit-J parameter set whose discretized survival law matches `params`.

    The sampling grid is mapped along with the model (dt -> dt J^-2, same M
    and K), so the two discretizations are images of each other under the
    exact scaling map.
    """
    s = scaling_transform(params)
    return replace(params, J=1.0, nu=s.nu_tilde, a=s.a_tilde, dt=params.dt / params.J ** 2, T=s.T_tilde)


def environment_for_cloud(
    cloud: PointCloud, nu: float, a: float, rng: np.random.Generator
) -> PoissonEnvironment:
    """Sample traps in the cloud's bounding box padded by a + safety margin.

    Traps farther than `a` from every string point cannot interact, so the
    padded-box restriction of the infinite process is exact in law.
    """
    box = bounding_box(cloud, a + ENV_PAD_MARGIN)
    cell = max(a, float(np.max(box.upper - box.lower)) / 128.0)
    return sample_environment(box, nu, rng, cell=cell)


def survive_hard_once(
    cloud: PointCloud, env: PoissonEnvironment, a: float, require_cover: bool = True
) -> bool:
    """True iff no sampled string point is within distance a of any trap."""
    if require_cover:
        padded = bounding_box(cloud, a)
        if np.any(padded.lower < env.box.lower) or np.any(padded.upper > env.box.upper):
            raise ResolutionError(
                "environment box does not cover the padded trajectory box; "
                "the restricted trap law would be wrong"
            )
    return not any_contact(cloud.points, env, a)


def _indicator_stats(hits: np.ndarray, method: str, params: ModelParams) -> SurvivalEstimate:
    n = hits.shape[0]
    p = float(np.mean(hits))
    stderr = math.sqrt(p * (1.0 - p) / n)
    return SurvivalEstimate(p, stderr, n, method, params)


def _weight_stats(weights: np.ndarray, method: str, params: ModelParams) -> SurvivalEstimate:
    n = weights.shape[0]
    p = float(np.mean(weights))
    stderr = float(np.std(weights, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SurvivalEstimate(min(p, 1.0), stderr, n, method, params)


def _hard_direct_batch(args) -> np.ndarray:
    params, seed, replicas = args
    out = np.empty(len(replicas), dtype=bool)
    for i, r in enumerate(replicas):
        cloud = simulate(params, seed, replica=r).cloud()
        env = environment_for_cloud(
            cloud, params.nu, params.a, streams.substream(seed, streams.ENV, r)
        )
        out[i] = survive_hard_once(cloud, env, params.a)
    return out


def _hard_volume_batch(args) -> np.ndarray:
    params, seed, replicas, n_mc = args
    out = np.empty(len(replicas))
    for i, r in enumerate(replicas):
        cloud = simulate(params, seed, replica=r).cloud()
        est = sausage_volume_hit_or_miss(
            cloud, params.a, n_mc, streams.substream(seed, streams.MC, r)
        )
        out[i] = math.exp(-params.nu * est.volume)
    return out


def _soft_batch(args) -> np.ndarray:
    params, spec, seed, replicas = args
    out = np.empty(len(replicas))
    for i, r in enumerate(replicas):
        trace = simulate(params, seed, replica=r)
        cloud = trace.cloud()
        env = environment_for_cloud(
            cloud, params.nu, spec.a, streams.substream(seed, streams.ENV, r)
        )
        functional = path_functional(
            [trace.samples(j) for j in range(trace.n_snapshots)],
            env,
            spec,
            dt=params.dt,
            dx=params.J / params.M,
        )
        out[i] = math.exp(-functional)
    return out


def _quenched_batch(args) -> np.ndarray:
    params, spec, env, seed, replicas = args
    hard = spec is None or spec.kind is PotentialKind.HARD
    a = params.a if spec is None else spec.a
    out = np.empty(len(replicas))
    for i, r in enumerate(replicas):
        trace = simulate(params, seed, replica=r)
        cloud = trace.cloud()
        if hard:
            out[i] = float(survive_hard_once(cloud, env, a, require_cover=False))
        else:
            functional = path_functional(
                [trace.samples(j) for j in range(trace.n_snapshots)],
                env,
                spec,
                dt=params.dt,
                dx=params.J / params.M,
            )
            out[i] = math.exp(-functional)
    return out


def n_workers(requested: int | None = None) -> int:
    if requested is not None and requested >= 1:
        return requested
    env_val = os.environ.get("STRING_SAUSAGE_THREADS")
    if env_val:
        return max(1, int(env_val))
    return os.cpu_count() or 1


def _run_batches(fn, make_args, n_rep: int, workers: int) -> np.ndarray:
    """Replica-parallel execution with an order-independent merge.

    Replicas are split into contiguous chunks; each chunk's output is keyed
    by replica index, so the concatenated result never depends on worker
    scheduling.
    """
    replicas = list(range(n_rep))
    if workers <= 1:
        return fn(make_args(replicas))
    chunk = max(1, math.ceil(n_rep / (workers * 4)))
    chunks = [replicas[i : i + chunk] for i in range(0, n_rep, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [make_args(c) for c in chunks]))
    return np.concatenate(parts)


def annealed_hard(
    params: ModelParams,
    n_rep: int,
    seed: int,
    method: str = "hard_direct",
    n_mc: int = 2000,
    workers: int | None = None,
) -> SurvivalEstimate:
    """Annealed hard-obstacle survival S_T.

    method='hard_direct' averages the contact indicator over independent
    (noise, environment) pairs; method='hard_via_volume' averages
    exp(-nu * sausage volume) over noise replicas via the Poisson identity.
    Both estimate the same quantity.
    """
    if n_rep < 100:
        raise ValueError("need n_rep >= 100")
    if params.T == 0:
        # empty time integral: the survival weight is exp(-0) for every path
        return SurvivalEstimate(1.0, 0.0, n_rep, method, params)
    w = n_workers(workers)
    if method == "hard_direct":
        hits = _run_batches(_hard_direct_batch, lambda c: (params, seed, c), n_rep, w)
        return _indicator_stats(hits, "hard_direct", params)
    if method == "hard_via_volume":
        weights = _run_batches(
            _hard_volume_batch, lambda c: (params, seed, c, n_mc), n_rep, w
        )
        return _weight_stats(weights, "hard_via_volume", params)
    raise ValueError(f"unknown method {method!r}")


def annealed_soft(
    params: ModelParams,
    spec: PotentialSpec,
    n_rep: int,
    seed: int,
    workers: int | None = None,
) -> SurvivalEstimate:
    """Annealed soft-obstacle survival: mean of exp(-path functional)."""
    if spec.kind is not PotentialKind.SOFT_INDICATOR:
        raise ValueError("annealed_soft requires a SoftIndicator spec; use annealed_hard")
    if n_rep < 100:
        raise ValueError("need n_rep >= 100")
    if params.T == 0:
        return SurvivalEstimate(1.0, 0.0, n_rep, "soft_weight", params)
    w = n_workers(workers)
    weights = _run_batches(_soft_batch, lambda c: (params, spec, seed, c), n_rep, w)
    return _weight_stats(weights, "soft_weight", params)


def quenched(
    params: ModelParams,
    env: PoissonEnvironment,
    n_rep: int,
    seed: int,
    spec: PotentialSpec | None = None,
    workers: int | None = None,
) -> SurvivalEstimate:
    """Survival over noise with the trap configuration held fixed.

    The supplied environment is taken as the whole trap field (no traps
    outside its box), so trajectory coverage is not enforced.
    """
    if env is None:
        raise ValueError("quenched estimation requires an explicit environment")
    if params.T == 0:
        return SurvivalEstimate(1.0, 0.0, n_rep, "quenched", params)
    w = n_workers(workers)
    out = _run_batches(
        _quenched_batch, lambda c: (params, spec, env, seed, c), n_rep, w
    )
    if spec is None or spec.kind is PotentialKind.HARD:
        return _indicator_stats(out.astype(bool), "quenched_hard", params)
    return _weight_stats(out, "quenched_soft", params)


@dataclass(frozen=True)
class ScalingReport:
    original: SurvivalEstimate
    scaled: SurvivalEstimate

    @property
    def overlap(self) -> bool:
        lo1, hi1 = self.original.ci95()
        lo2, hi2 = self.scaled.ci95()
        return max(lo1, lo2) <= min(hi1, hi2)


def scaling_check(
    params: ModelParams,
    n_rep: int,
    seed: int,
    method: str = "hard_direct",
    workers: int | None = None,
) -> ScalingReport:
    """Estimate S_T at J and at the scaled unit-J parameters with independent seeds."""
    original = annealed_hard(params, n_rep, seed, method=method, workers=workers)
    scaled = annealed_hard(
        scaled_unit_params(params), n_rep, seed + 1, method=method, workers=workers
    )
    return ScalingReport(original, scaled)


def resolution_doubling_report(
    params: ModelParams, n_rep: int, seed: int, workers: int | None = None
) -> tuple[SurvivalEstimate, SurvivalEstimate]:
    """Hard-survival estimates at (dt, M) and (dt/2, 2M) to expose discretization bias."""
    fine = replace(params, dt=params.dt / 2.0, M=2 * params.M)
    return (
        annealed_hard(params, n_rep, seed, workers=workers),
        annealed_hard(fine, n_rep, seed + 1, workers=workers),
    )
