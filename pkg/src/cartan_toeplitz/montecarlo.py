"""Shard-independent Monte Carlo over uniform domain samples.

Samples are produced in fixed-size blocks; block ``b`` always comes from
``RngStream(seed, b, TAG_DOMAIN_SAMPLES)``. A shard owns a contiguous
range of sample indices, generates the blocks overlapping it and keeps
its slice, so the concatenated sample array (and every reduction over
it) is identical for any shard count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .matdomain import TAG_DOMAIN_SAMPLES, RngStream, sample_domain_batch
from .symbols.core import EvalContext

MIN_SAMPLES = 1000
JACKKNIFE_BATCHES = 20


@dataclass(frozen=True)
class MCConfig:
    nsamples: int
    master_seed: int = 0
    shards: int = 1
    block_size: int = 8192
    proposal: str = "rowball"
    workers: int = 1

    def __post_init__(self):
        if self.nsamples < MIN_SAMPLES:
            raise ValueError(f"nsamples must be >= {MIN_SAMPLES}")
        if self.shards < 1 or self.block_size < 1 or self.workers < 1:
            raise ValueError("shards, block_size and workers must be positive")

    def shard_ranges(self) -> list[tuple[int, int]]:
        q, r = divmod(self.nsamples, self.shards)
        out, start = [], 0
        for i in range(self.shards):
            stop = start + q + (1 if i < r else 0)
            out.append((start, stop))
            start = stop
        return out


@dataclass(frozen=True)
class MCEstimate:
    value: complex
    stderr: float
    nsamples: int

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError("stderr must be non-negative")

    def merge(self, other: "MCEstimate") -> "MCEstimate":
        """Sample-weighted combination of two independent estimates of one quantity."""
        n = self.nsamples + other.nsamples
        value = (self.nsamples * self.value + other.nsamples * other.value) / n
        var = (self.nsamples * self.stderr) ** 2 + (other.nsamples * other.stderr) ** 2
        return MCEstimate(value, math.sqrt(var) / n, n)

    def z_score(self, target: complex = 0.0) -> float:
        d = abs(self.value - target)
        return math.inf if self.stderr == 0 and d > 0 else (d / self.stderr if self.stderr else 0.0)


def mean_estimate(x: np.ndarray) -> MCEstimate:
    x = np.asarray(x)
    N = x.shape[0]
    m = x.mean()
    se = math.sqrt(float(np.sum(np.abs(x - m) ** 2)) / (N - 1) / N)
    return MCEstimate(complex(m), se, N)


def ratio_estimate(x: np.ndarray, w: np.ndarray) -> MCEstimate:
    """``mean(x) / mean(w)`` with delta-method standard error."""
    N = x.shape[0]
    wbar = float(np.mean(w))
    R = np.mean(x) / wbar
    r = (x - R * w) / wbar
    se = math.sqrt(float(np.sum(np.abs(r) ** 2)) / (N - 1) / N)
    return MCEstimate(complex(R), se, N)


def batch_slices(N: int, K: int = JACKKNIFE_BATCHES) -> list[slice]:
    edges = [round(i * N / K) for i in range(K + 1)]
    return [slice(a, b) for a, b in zip(edges, edges[1:])]


def jackknife_stderr(replicates: np.ndarray, full=None) -> np.ndarray:
    """Leave-one-batch-out standard error from an array of replicates (axis 0)."""
    reps = np.asarray(replicates)
    K = reps.shape[0]
    centre = reps.mean(axis=0)
    return np.sqrt((K - 1) / K * np.sum(np.abs(reps - centre) ** 2, axis=0))


def _block(n: int, cfg: MCConfig, b: int) -> tuple[np.ndarray, int]:
    stream = RngStream(cfg.master_seed, b, TAG_DOMAIN_SAMPLES)
    s = sample_domain_batch(n, cfg.block_size, stream, proposal=cfg.proposal)
    return s.points, s.proposals


def _shard(n: int, cfg: MCConfig, start: int, stop: int) -> tuple[np.ndarray, int]:
    B = cfg.block_size
    parts, proposals = [], 0
    for b in range(start // B, (stop - 1) // B + 1 if stop > start else start // B):
        pts, prop = _block(n, cfg, b)
        lo, hi = max(start - b * B, 0), min(stop - b * B, B)
        parts.append(pts[lo:hi])
        proposals += prop
    if not parts:
        return np.zeros((0, n, n), complex), 0
    return np.concatenate(parts), proposals


class SampleSet:
    """Uniform domain samples plus cached per-sample quantities."""

    def __init__(self, n: int, cfg: MCConfig, points: np.ndarray, proposals: int):
        self.n = n
        self.cfg = cfg
        self.points = points
        self.points.setflags(write=False)
        self.proposals = proposals
        self.ctx = EvalContext(points)
        self._weights: dict = {}
        self._basis: dict = {}

    def __len__(self):
        return self.points.shape[0]

    @property
    def key(self) -> tuple:
        c = self.cfg
        return (self.n, c.nsamples, c.master_seed, c.block_size, c.proposal)

    def weight(self, lam: float) -> np.ndarray:
        """``det(I - Z Z*)^(lam - 2n)`` per sample (real, positive)."""
        w = self._weights.get(lam)
        if w is None:
            s = self.ctx.s
            w = np.prod(1.0 - s * s, axis=1) ** (lam - 2 * self.n)
            w.setflags(write=False)
            self._weights[lam] = w
        return w

    def basis_values(self, key, polys) -> np.ndarray:
        from .polyrep import evaluate_many

        E = self._basis.get(key)
        if E is None:
            E = evaluate_many(list(polys), self.points)
            E.setflags(write=False)
            self._basis[key] = E
        return E

    def batches(self, K: int = JACKKNIFE_BATCHES) -> list[slice]:
        return batch_slices(len(self), K)


def draw_samples(n: int, cfg: MCConfig) -> SampleSet:
    ranges = cfg.shard_ranges()
    if cfg.workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(lambda r: _shard(n, cfg, *r), ranges))
    else:
        results = [_shard(n, cfg, *r) for r in ranges]
    points = np.concatenate([p for p, _ in results])
    # a block straddling two shards is generated (and its proposals counted) by both
    proposals = sum(p for _, p in results)
    return SampleSet(n, cfg, points, proposals)


@lru_cache(maxsize=8)
def cached_samples(n: int, cfg: MCConfig) -> SampleSet:
    return draw_samples(n, cfg)
