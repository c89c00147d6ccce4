"""
Trajectory unraveling of the walk.

Each trajectory starts at label i_0 with probability Tr ρ_{i_0} and carries a
normalized internal state σ. A step from j picks the target i with weight
Tr(B_j^i σ B_j^{i†}) and renormalizes. Trajectories are simulated in
vectorized shards; shard s draws from the s-th child of SeedSequence(seed),
so the merged counts depend on (seed, count, shard size) only and never on
the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.core.config import Tolerances, get_settings
from app.core.errors import InvalidParameter, SizeOverflow, ZeroWeightState
from app.core.logger import logger
from app.models.walk import WalkSpec
from app.walk.oqrw import Path


@dataclass(frozen=True)
class SampleResult:
    length: int
    count: int
    seed: int
    counts: Dict[Path, int] = field(default_factory=dict)

    def distribution(self) -> Dict[Path, float]:
        return {path: c / self.count for path, c in self.counts.items()}


def _shard_sizes(count: int, shard_size: int) -> List[int]:
    full, rest = divmod(count, shard_size)
    return [shard_size] * full + ([rest] if rest else [])


def _run_shard(spec: WalkSpec, length: int, size: int, rng: np.random.Generator, floor: float) -> np.ndarray:
    n = spec.dim_position
    traces = spec.rho_traces
    start = traces / traces.sum()
    labels = rng.choice(n, size=size, p=start)
    if np.any(traces[labels] <= floor):
        raise ZeroWeightState("a trajectory started on a zero initial block")
    sigma = spec.rho[labels] / traces[labels][:, None, None]
    codes = labels.astype(np.int64)
    rows = np.arange(size)

    for step in range(length):
        B = spec.transitions[labels]
        candidates = np.einsum("niab,nbc,nidc->niad", B, sigma, B.conj())
        weights = np.real(np.einsum("niaa->ni", candidates))
        cumulative = np.cumsum(np.clip(weights, 0.0, None), axis=1)
        u = rng.random(size) * cumulative[:, -1]
        choice = np.minimum((cumulative <= u[:, None]).sum(axis=1), n - 1)
        chosen = weights[rows, choice]
        if np.any(chosen <= floor):
            raise ZeroWeightState(
                f"normalization trace underflowed at step {step + 1} (min {chosen.min():.3e})",
                step=step + 1,
            )
        sigma = candidates[rows, choice] / chosen[:, None, None]
        labels = choice
        codes = codes * n + choice
    return codes


def _decode(code: int, length: int, labels: Tuple[str, ...]) -> Path:
    n = len(labels)
    word = []
    for _ in range(length + 1):
        code, r = divmod(code, n)
        word.append(labels[r])
    return tuple(reversed(word))


def sample_trajectories(
    spec: WalkSpec,
    length: int,
    count: int,
    seed: int,
    workers: Optional[int] = None,
    shard_size: Optional[int] = None,
    tolerances: Optional[Tolerances] = None,
) -> SampleResult:
    if count < 1:
        raise InvalidParameter(f"count must be >= 1, got {count}")
    if length < 0:
        raise InvalidParameter(f"length must be >= 0, got {length}")
    if spec.dim_position ** (length + 1) >= 2 ** 62:
        raise SizeOverflow(f"paths of length {length} over {spec.dim_position} labels cannot be encoded")
    settings = get_settings()
    t = tolerances or spec.tolerances()
    workers = workers or settings.sampler_workers
    sizes = _shard_sizes(count, shard_size or settings.sampler_shard_size)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(sizes))]

    logger.info(f"Sampler: {count} trajectories of length {length} in {len(sizes)} shard(s), {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        shards = list(executor.map(lambda job: _run_shard(spec, length, job[0], job[1], t.trace_floor), zip(sizes, streams)))

    codes, counts = np.unique(np.concatenate(shards), return_counts=True)
    table = {_decode(int(c), length, spec.labels): int(k) for c, k in zip(codes, counts)}
    logger.info(f"Sampler: done, {len(table)} distinct paths observed")
    return SampleResult(length=length, count=count, seed=seed, counts=table)
