"""Monte Carlo projection of the 3-d VAR(1) with reproducible parallelism.

Randomness is organized in fixed blocks of paths. Block b of a run with seed
s draws from a counter-based Philox stream keyed on (s, b); inside a block
the draw layout per step is fixed and full-block-sized arrays are always
drawn (a trailing partial block discards the unused lanes). Consequences:

* the ensemble is a pure function of the spec (bit-identical reruns),
* worker count never changes the output (blocks are the parallel unit),
* growing n_paths leaves the draws of every existing path unchanged,
* an integer `stream` tag yields independent sub-ensembles under one seed
  (used by the conditional projections of the stress module), while reusing
  a seed across parameter sets reuses the underlying variates (common
  random numbers).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .levy_ou import Var1Params, stationarity_check
from .nig import _inverse_gaussian_from_variates

__all__ = ["SimSpec", "PathEnsemble", "simulate", "conditional_simulate", "BLOCK"]

BLOCK = 4096


def _block_rng(seed: int, block_index: int, stream: int) -> np.random.Generator:
    key = np.array([seed, block_index], dtype=np.uint64)
    counter = np.zeros(4, dtype=np.uint64)
    counter[3] = stream
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def _draw_step(rng: np.random.Generator, params: Var1Params) -> np.ndarray:
    """One step of structural noise for a full block, shape (BLOCK, 3).

    Component order and the per-component variate order are fixed; this
    layout is part of the determinism contract.
    """
    eps = np.empty((BLOCK, 3))
    if params.noise_family == "gaussian":
        for i in range(3):
            eps[:, i] = params.sigma[i] * rng.standard_normal(BLOCK)
        return eps
    for i in range(3):
        q = params.nig[i]
        nu = rng.standard_normal(BLOCK)
        u = rng.random(BLOCK)
        v = _inverse_gaussian_from_variates(nu * nu, u, q.delta / q.gamma, q.delta ** 2)
        z = rng.standard_normal(BLOCK)
        eps[:, i] = q.mu + q.beta * v + np.sqrt(v) * z
    return eps


@dataclass(frozen=True)
class SimSpec:
    """Specification of one Monte Carlo run."""

    params: Var1Params
    x0: np.ndarray
    n_paths: int = 100_000
    horizon_steps: int = 120
    seed: int = 0
    transform: tuple[str, str, str] = ("level", "log", "log")
    zero_noise: bool = False
    store: str = "full"            # "full" | "volume"
    workers: int = 1

    def __post_init__(self):
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if x0.shape != (3,) or not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be a finite 3-vector")
        object.__setattr__(self, "x0", x0)
        if self.n_paths < 1 or self.horizon_steps < 1:
            raise ValueError("n_paths and horizon_steps must be >= 1")
        if not all(t in ("level", "log") for t in self.transform):
            raise ValueError("transform entries must be 'level' or 'log'")
        if self.transform[2] != "log":
            raise ValueError("the volume component is always modelled in logs")
        if self.store not in ("full", "volume"):
            raise ValueError("store must be 'full' or 'volume'")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass
class PathEnsemble:
    """Simulated paths on a monthly grid.

    states has shape (n_paths, horizon+1, 3) and is None in volume-only
    storage mode; log_volumes always holds the third component. Deposit
    volumes are recovered on demand as exp(log-volume).
    """

    grid: np.ndarray               # month indices 0..horizon
    states: Optional[np.ndarray]
    log_volumes: np.ndarray
    x0: np.ndarray
    seed: int
    transform: tuple[str, str, str]
    stationary: bool

    @property
    def n_paths(self) -> int:
        return self.log_volumes.shape[0]

    @property
    def horizon_steps(self) -> int:
        return self.log_volumes.shape[1] - 1

    def volumes(self) -> np.ndarray:
        return np.exp(self.log_volumes)

    def initial_volume(self) -> float:
        return float(math.exp(self.x0[2]))


def simulate(spec: SimSpec) -> PathEnsemble:
    """Generate the path ensemble described by spec."""
    p = spec.params
    n, t = spec.n_paths, spec.horizon_steps
    n_blocks = (n + BLOCK - 1) // BLOCK
    if spec.store == "full":
        states = np.empty((n, t + 1, 3))
        states[:, 0, :] = spec.x0
    else:
        states = None
        logv = np.empty((n, t + 1))
        logv[:, 0] = spec.x0[2]

    bt = p.B.T.copy()
    st = p.S.T.copy()

    def run_block(b: int) -> None:
        lo = b * BLOCK
        hi = min(n, lo + BLOCK)
        m = hi - lo
        rng = None if spec.zero_noise else _block_rng(spec.seed, b, 0)
        x = np.broadcast_to(spec.x0, (BLOCK, 3)).copy()
        for k in range(1, t + 1):
            x = p.a + x @ bt
            if not spec.zero_noise:
                x = x + _draw_step(rng, p) @ st
            if states is not None:
                states[lo:hi, k, :] = x[:m]
            else:
                logv[lo:hi, k] = x[:m, 2]

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            list(pool.map(run_block, range(n_blocks)))
    else:
        for b in range(n_blocks):
            run_block(b)

    log_volumes = states[:, :, 2] if states is not None else logv
    return PathEnsemble(
        grid=np.arange(t + 1),
        states=states,
        log_volumes=log_volumes,
        x0=spec.x0.copy(),
        seed=int(spec.seed),
        transform=spec.transform,
        stationary=bool(stationarity_check(p.B, "B")),
    )


def conditional_simulate(params: Var1Params, x_t, h_steps: int, n_paths: int,
                         seed: int, stream: int = 0,
                         zero_noise: bool = False) -> np.ndarray:
    """Distribution of the volume ratio D(t+h)/D(t) given the state x_t.

    Simulates h_steps forward from x_t and returns the sample of
    exp(X3(t+h) - X3(t)). With h_steps = 0 the ratio is identically 1.
    The stream tag selects an independent substream of the seed; reusing
    (seed, stream) across parameter sets reuses the same variates.
    """
    x_t = np.array(x_t, dtype=float).reshape(-1)
    if x_t.shape != (3,) or not np.all(np.isfinite(x_t)):
        raise ValueError("x_t must be a finite 3-vector")
    if h_steps < 0:
        raise ValueError("h_steps must be >= 0")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if h_steps == 0:
        return np.ones(n_paths)
    out = np.empty(n_paths)
    n_blocks = (n_paths + BLOCK - 1) // BLOCK
    bt = params.B.T.copy()
    st = params.S.T.copy()
    for b in range(n_blocks):
        lo = b * BLOCK
        hi = min(n_paths, lo + BLOCK)
        rng = None if zero_noise else _block_rng(seed, b, stream)
        x = np.broadcast_to(x_t, (BLOCK, 3)).copy()
        for _ in range(h_steps):
            x = params.a + x @ bt
            if not zero_noise:
                x = x + _draw_step(rng, params) @ st
        out[lo:hi] = np.exp(x[:hi - lo, 2] - x_t[2])
    return out
