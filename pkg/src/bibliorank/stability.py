"""Percentile-bootstrap stability intervals for per-institution indicators.

An interval is built by drawing resamples of size n with replacement from an
institution's publication set, evaluating the indicator on each resample, and
taking symmetric percentiles of the resulting distribution (2.5th and 97.5th
for the default 95% level, linear-interpolation percentile rule).  Resample
indices depend only on (seed, resample index, n), so evaluation order and
parallelism cannot change results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

DEFAULT_SAMPLES = 1000
DEFAULT_LEVEL = 95.0

Statistic = Callable[[Sequence], "float | None"]


@dataclass(frozen=True)
class StabilityInterval:
    """Point value with its bootstrap percentile band.

    ``undefined_count`` is the number of resamples on which the statistic was
    undefined (excluded from the percentiles).  ``point_outside`` flags the
    pathological percentile-bootstrap case where the point value falls outside
    its own interval.
    """

    point: float
    lower: float
    upper: float
    samples: int
    level: float
    seed: int
    undefined_count: int = 0

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def point_outside(self) -> bool:
        return not self.lower <= self.point <= self.upper


class AllResamplesUndefinedError(ValueError):
    """The statistic was undefined on every bootstrap resample."""


def resample_indices(seed: int, sample_index: int, n: int) -> np.ndarray:
    """Indices of one with-replacement resample of size n.

    Derived from an independent substream keyed by (seed, sample_index) so
    that resamples can be generated in any order or in parallel.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(sample_index,))
    return np.random.default_rng(ss).integers(0, n, size=n)


def bootstrap_intervals(
    pubs: Sequence,
    statistics: Mapping[str, Statistic],
    samples: int = DEFAULT_SAMPLES,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
) -> dict[str, StabilityInterval]:
    """Intervals for several statistics over shared resamples.

    All statistics see the same resamples, so any one of them gets exactly
    the interval bootstrap_interval would produce with the same seed.
    """
    if len(pubs) == 0:
        raise ValueError("cannot bootstrap an empty publication set")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if not 0.0 < level < 100.0:
        raise ValueError(f"level must be in (0, 100), got {level}")
    arr = pubs if isinstance(pubs, np.ndarray) else np.asarray(pubs, dtype=object)
    n = len(arr)
    values: dict[str, list[float]] = {name: [] for name in statistics}
    undefined: dict[str, int] = {name: 0 for name in statistics}
    for r in range(samples):
        resample = arr[resample_indices(seed, r, n)]
        for name, stat in statistics.items():
            value = stat(resample)
            if value is None:
                undefined[name] += 1
            else:
                values[name].append(float(value))

    lo_q = (100.0 - level) / 2.0
    hi_q = (100.0 + level) / 2.0
    out: dict[str, StabilityInterval] = {}
    for name, stat in statistics.items():
        point = stat(arr)
        defined = values[name]
        if not defined:
            raise AllResamplesUndefinedError(
                f"statistic {name!r} undefined on all {samples} resamples"
            )
        lower, upper = np.percentile(defined, [lo_q, hi_q])
        out[name] = StabilityInterval(
            point=float(point) if point is not None else float("nan"),
            lower=float(lower),
            upper=float(upper),
            samples=samples,
            level=level,
            seed=seed,
            undefined_count=undefined[name],
        )
    return out


def bootstrap_interval(
    pubs: Sequence,
    statistic: Statistic,
    samples: int = DEFAULT_SAMPLES,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
) -> StabilityInterval:
    """Percentile bootstrap interval for one statistic.

    ``pubs`` is the institution's weighted publication multiset (any sequence
    the statistic accepts; numpy arrays are resampled without copying into
    Python objects).  Fully determined by (pubs, statistic, samples, level,
    seed).
    """
    return bootstrap_intervals(pubs, {"stat": statistic}, samples, level, seed)["stat"]
