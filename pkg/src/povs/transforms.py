"""Pooled midranks and Van der Waerden normal scores.

All observations from both groups are ranked together; each transformed value
goes back to the slot (pair coordinate or unpaired list) of its source.
"""

from __future__ import annotations

import numpy as np

from .sample import PartiallyOverlappingSample, SampleSummary, summarize
from .special import normal_quantile

__all__ = [
    "TransformedSample",
    "midranks",
    "pooled_ranks",
    "transformed_summary",
    "vdw_scores",
]

RANKS = "ranks"
VDW_SCORES = "vdw_scores"


class TransformedSample(PartiallyOverlappingSample):
    """A sample whose values were replaced by pooled ranks or normal scores."""

    def __init__(self, paired, unpaired_a, unpaired_b, *, kind: str, tie_count: int):
        super().__init__(paired, unpaired_a, unpaired_b)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "tie_count", int(tie_count))

    @property
    def N(self) -> int:
        return self.n_a + self.n_b + 2 * self.n_c

    def __repr__(self):
        return (
            f"TransformedSample(kind={self.kind!r}, n_a={self.n_a}, n_b={self.n_b}, "
            f"n_c={self.n_c}, tie_count={self.tie_count})"
        )


def midranks(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending ranks along the last axis, ties sharing their mean position.

    Returns ``(ranks, tie_count)`` where ``tie_count`` counts observations
    that share their value with at least one other (per leading index).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    order = np.argsort(x, axis=-1, kind="stable")
    s = np.take_along_axis(x, order, axis=-1)
    pos = np.broadcast_to(np.arange(n), s.shape)
    starts = np.ones(s.shape, dtype=bool)
    starts[..., 1:] = s[..., 1:] != s[..., :-1]
    ends = np.ones(s.shape, dtype=bool)
    ends[..., :-1] = starts[..., 1:]
    first = np.maximum.accumulate(np.where(starts, pos, 0), axis=-1)
    last = np.flip(
        np.minimum.accumulate(np.flip(np.where(ends, pos, n - 1), axis=-1), axis=-1),
        axis=-1,
    )
    ranks = np.empty(s.shape)
    np.put_along_axis(ranks, order, 0.5 * (first + last) + 1.0, axis=-1)
    tie_count = np.sum(last > first, axis=-1)
    return ranks, tie_count


def pool_split(pair1, pair2, only_a, only_b, func):
    """Apply ``func`` to the pooled observations and split back into slots.

    ``func`` maps the pooled array (last axis = observations) to
    ``(values, extra)``; returns ``(pair1', pair2', only_a', only_b', extra)``.
    """
    n_c = pair1.shape[-1]
    n_a = only_a.shape[-1]
    pooled = np.concatenate([pair1, pair2, only_a, only_b], axis=-1)
    values, extra = func(pooled)
    cuts = np.cumsum([n_c, n_c, n_a])
    p1, p2, a, b = np.split(values, cuts, axis=-1)
    return p1, p2, a, b, extra


def _vdw_from_ranks(ranks, n_total, c=0.0):
    return normal_quantile((ranks - c) / (n_total - 2.0 * c + 1.0))


def _transform(s: PartiallyOverlappingSample, kind: str, c: float) -> TransformedSample:
    def func(pooled):
        ranks, ties = midranks(pooled)
        if kind == VDW_SCORES:
            return _vdw_from_ranks(ranks, pooled.shape[-1], c), ties
        return ranks, ties

    p1, p2, a, b, ties = pool_split(
        s.paired[:, 0], s.paired[:, 1], s.unpaired_a, s.unpaired_b, func
    )
    return TransformedSample(np.column_stack([p1, p2]), a, b, kind=kind, tie_count=ties)


def pooled_ranks(s: PartiallyOverlappingSample) -> TransformedSample:
    """Replace every observation by its midrank in the pooled sample."""
    return _transform(s, RANKS, 0.0)


def vdw_scores(s: PartiallyOverlappingSample, c: float = 0.0) -> TransformedSample:
    """Replace every observation by ``Phi^-1((y - c) / (N - 2c + 1))``.

    ``y`` is the pooled midrank and ``N`` the pooled size. The default
    ``c = 0`` gives Van der Waerden scores.
    """
    if not 0.0 <= c < 1.0:
        raise ValueError("rank offset c must lie in [0, 1)")
    return _transform(s, VDW_SCORES, c)


def transformed_summary(t: TransformedSample) -> SampleSummary:
    """Summary statistics computed on the transformed values."""
    return summarize(t)
