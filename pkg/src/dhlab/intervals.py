"""Sorted disjoint interval unions with exact measure bookkeeping.

Intervals are stored half-open [start, end) and merged so that no two
stored intervals overlap or touch.  Measures are plain sums of lengths;
endpoint conventions never change a measure, which is all downstream
consumers (representable/exceptional sets, kernel supports) care about.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class IntervalUnion:
    """Disjoint sorted half-open intervals; `starts`/`ends` are float arrays."""

    starts: np.ndarray
    ends: np.ndarray

    # ------------------------------------------------------------------ build
    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def from_pairs(cls, pairs) -> "IntervalUnion":
        """Union of arbitrary (start, end) pairs; degenerate pairs dropped."""
        pairs = [(float(a), float(b)) for a, b in pairs if b > a]
        if not pairs:
            return cls.empty()
        starts = np.array([p[0] for p in pairs])
        ends = np.array([p[1] for p in pairs])
        return cls._merge_sorted(*_sort_by_start(starts, ends))

    @classmethod
    def from_sorted_arrays(cls, starts: np.ndarray, ends: np.ndarray) -> "IntervalUnion":
        """Merge intervals already sorted by start (the streaming fast path)."""
        keep = ends > starts
        return cls._merge_sorted(starts[keep], ends[keep])

    @classmethod
    def from_sorted_points(cls, points: np.ndarray, radius: float) -> "IntervalUnion":
        """Union of (p - radius, p + radius) over an ascending point array."""
        if len(points) == 0:
            return cls.empty()
        return cls._merge_sorted(points - radius, points + radius)

    @classmethod
    def _merge_sorted(cls, starts: np.ndarray, ends: np.ndarray) -> "IntervalUnion":
        if len(starts) == 0:
            return cls.empty()
        # A new interval begins wherever the start exceeds the running
        # maximum of previous ends (touching intervals are merged).
        cummax = np.maximum.accumulate(ends)
        breaks = np.flatnonzero(starts[1:] > cummax[:-1]) + 1
        first = np.concatenate(([0], breaks))
        last = np.concatenate((breaks, [len(starts)]))
        return cls(starts[first].copy(), cummax[last - 1].copy())

    def __post_init__(self):
        if len(self.starts) != len(self.ends):
            raise ValidationError("starts/ends length mismatch")
        if len(self.starts):
            if np.any(self.ends <= self.starts):
                raise ValidationError("empty or inverted interval")
            if np.any(self.starts[1:] <= self.ends[:-1]):
                raise ValidationError("intervals overlap or touch; merge first")

    # ------------------------------------------------------------------ query
    def __len__(self) -> int:
        return len(self.starts)

    @property
    def measure(self) -> float:
        return float(np.sum(self.ends - self.starts))

    def __contains__(self, x: float) -> bool:
        i = int(np.searchsorted(self.starts, x, side="right")) - 1
        return i >= 0 and x < self.ends[i]

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.starts, self.ends)]

    # -------------------------------------------------------------- operations
    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        if len(other) == 0:
            return self
        if len(self) == 0:
            return other
        starts = np.concatenate((self.starts, other.starts))
        ends = np.concatenate((self.ends, other.ends))
        return IntervalUnion._merge_sorted(*_sort_by_start(starts, ends))

    def clip(self, lo: float, hi: float) -> "IntervalUnion":
        """Intersection with [lo, hi)."""
        if hi <= lo or len(self) == 0:
            return IntervalUnion.empty()
        starts = np.clip(self.starts, lo, hi)
        ends = np.clip(self.ends, lo, hi)
        keep = ends > starts
        return IntervalUnion(starts[keep], ends[keep])

    def complement(self, lo: float, hi: float) -> "IntervalUnion":
        """[lo, hi) minus this union."""
        clipped = self.clip(lo, hi)
        if len(clipped) == 0:
            return IntervalUnion.from_pairs([(lo, hi)])
        starts = np.concatenate(([lo], clipped.ends))
        ends = np.concatenate((clipped.starts, [hi]))
        keep = ends > starts
        return IntervalUnion(starts[keep], ends[keep])

    def translate(self, offset: float) -> "IntervalUnion":
        return IntervalUnion(self.starts + offset, self.ends + offset)

    # ------------------------------------------------------------ serialization
    def to_json(self) -> str:
        # json uses repr for floats, which round-trips exactly
        return json.dumps(self.pairs())

    @classmethod
    def from_json(cls, text: str) -> "IntervalUnion":
        return cls.from_pairs([(float(a), float(b)) for a, b in json.loads(text)])


def _sort_by_start(starts: np.ndarray, ends: np.ndarray):
    order = np.argsort(starts, kind="stable")
    return starts[order], ends[order]


def union_accumulator():
    """Mutable accumulator used by streaming merges: call add() with interval
    unions, read result() at the end.  Re-merges lazily to stay O(output)."""
    return _UnionAccumulator()


class _UnionAccumulator:
    def __init__(self):
        self._current = IntervalUnion.empty()
        self._pending: list[IntervalUnion] = []
        self._pending_size = 0

    def add(self, u: IntervalUnion) -> None:
        if len(u) == 0:
            return
        self._pending.append(u)
        self._pending_size += len(u)
        if self._pending_size > max(4096, 4 * len(self._current)):
            self._flush()

    def _flush(self) -> None:
        if not self._pending:
            return
        starts = np.concatenate([self._current.starts] + [u.starts for u in self._pending])
        ends = np.concatenate([self._current.ends] + [u.ends for u in self._pending])
        self._current = IntervalUnion._merge_sorted(*_sort_by_start(starts, ends))
        self._pending = []
        self._pending_size = 0

    def result(self) -> IntervalUnion:
        self._flush()
        return self._current
