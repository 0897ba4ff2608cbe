"""Trajectory driver: evolve a string over a sampling grid and keep the trace."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import rng as streams
from .geometry import PointCloud
from .spectral import (
    FieldSamples,
    ModelParams,
    StringState,
    evolve,
    init_from_profile,
    zero_state,
)
from .statistics import PathRecord, center_of_mass


@dataclass(frozen=True)
class Trace:
    """States of one trajectory at times 0, dt, ..., T."""

    params: ModelParams
    times: np.ndarray
    coeffs: np.ndarray  # (n+1, d, 2K+1)

    @property
    def n_snapshots(self) -> int:
        return self.times.shape[0]

    def state(self, i: int) -> StringState:
        return StringState(self.params, float(self.times[i]), self.coeffs[i])

    @cached_property
    def values(self) -> np.ndarray:
        """Field values (n+1, M, d) on the evaluation grid, via batched inverse FFT."""
        p = self.params
        K, M, J = p.K, p.M, p.J
        spec = np.zeros((self.n_snapshots, M // 2 + 1, p.d), dtype=complex)
        spec[:, 0, :] = self.coeffs[:, :, 0] / math.sqrt(J)
        bk = self.coeffs[:, :, 1 : K + 1]
        ck = self.coeffs[:, :, K + 1 :]
        spec[:, 1 : K + 1, :] = np.transpose(bk - 1j * ck, (0, 2, 1)) / math.sqrt(2.0 * J)
        return np.fft.irfft(spec * M, n=M, axis=1)

    def samples(self, i: int) -> FieldSamples:
        return FieldSamples(self.params.grid(), self.values[i])

    def cloud(self) -> PointCloud:
        """All space-time samples flattened into one point cloud in R^d."""
        p = self.params
        pts = self.values.reshape(-1, p.d)
        return PointCloud(pts, meta={"dt": p.dt, "dx": p.J / p.M, "T": p.T})

    def path_record(self) -> PathRecord:
        X = self.coeffs[:, :, 0] / math.sqrt(self.params.J)
        dev = self.values - X[:, None, :]
        R = np.sqrt((dev ** 2).sum(axis=2)).max(axis=1)
        return PathRecord(self.times, X, R)


def simulate(
    params: ModelParams,
    seed: int,
    replica: int = 0,
    u0: FieldSamples | None = None,
    noise_scale: float = 1.0,
) -> Trace:
    """Run one replica on the (dt, M) sampling grid with exact transitions.

    Draws come from the counter-based stream (seed; NOISE, replica, step),
    so traces are reproducible and independent across replicas.
    """
    n = params.n_steps
    state = zero_state(params) if u0 is None else init_from_profile(params, u0)
    coeffs = np.empty((n + 1,) + state.coeffs.shape)
    coeffs[0] = state.coeffs
    times = np.arange(n + 1) * params.dt
    for step in range(n):
        gen = streams.substream(seed, streams.NOISE, replica, step)
        state = evolve(state, params.dt, gen, noise_scale=noise_scale)
        coeffs[step + 1] = state.coeffs
    return Trace(params, times, coeffs)


def brownian_path(
    d: int, T: float, dt: float, seed: int, replica: int = 0
) -> PointCloud:
    """Sampled standard Brownian path in R^d (used for Wiener-sausage checks)."""
    n = int(round(T / dt))
    gen = streams.substream(seed, streams.AUX, replica)
    steps = gen.standard_normal((n, d)) * math.sqrt(dt)
    path = np.vstack([np.zeros((1, d)), np.cumsum(steps, axis=0)])
    return PointCloud(path, meta={"dt": dt, "T": T})
