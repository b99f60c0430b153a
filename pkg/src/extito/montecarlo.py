"""Deterministic seed-keyed map-reduce and small Monte Carlo statistics."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


def path_seeds(seed_base: int, n_paths: int) -> list[int]:
    """Path ``j`` always gets seed ``seed_base + j``."""
    return [int(seed_base) + j for j in range(n_paths)]


def mc_map(fn: Callable, seeds: Sequence[int], workers: int = 1) -> list:
    """Apply ``fn`` to every seed; results come back in seed order whatever
    the scheduling. ``fn`` must be picklable when ``workers > 1``."""
    seeds = list(seeds)
    if workers <= 1 or len(seeds) < 2:
        return [fn(s) for s in seeds]
    chunk = max(1, len(seeds) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, seeds, chunksize=chunk))


def fmean(values: Iterable[float]) -> float:
    vals = [float(v) for v in values]
    return math.fsum(vals) / len(vals)


@dataclass(frozen=True)
class Summary:
    mean: float
    se: float
    max_abs: float
    n: int


def summarize(values) -> Summary:
    """Mean, standard error and max |.|; exactly rounded sums so the result
    does not depend on the order of ``values``."""
    v = np.asarray(values, dtype=float).ravel()
    n = len(v)
    if n == 0:
        raise ValueError("no samples")
    mean = math.fsum(v) / n
    if n > 1:
        var = math.fsum((v - mean) ** 2) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = math.inf
    return Summary(mean, se, float(np.max(np.abs(v))), n)
