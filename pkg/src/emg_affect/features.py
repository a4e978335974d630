"""The eight time-domain feature extractors and the slot-major matrix layout.

Each extractor maps one slot's samples to a single real. A row is the
extractors applied to every slot of a trimmed recording, laid out
slot-major: column = slot_index * 8 + feature ordinal.

AAC is defined through the same absolute-difference sum as WL, so the
collinearity wl = (N-1) * aac holds bit-exactly, not just approximately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum, unique

import numpy as np

from .errors import EmptyMatrix, EmptySlot, NonFinite, RaggedRows, TooFewSamples
from .signals import Condition, Label, SampleSeries, SlotPartition

FEATURES_PER_SLOT = 8


@unique
class FeatureKind(IntEnum):
    """Fixed ordinals; the matrix column layout depends on this order."""

    MAXP = 0
    MAV = 1
    MAVSLP = 2
    PAAF = 3
    RMS = 4
    AAC = 5
    DASDV = 6
    WL = 7


def _require(x: np.ndarray, minimum: int, exc: type[Exception]):
    if x.size < minimum:
        raise exc(f"need at least {minimum} samples, got {x.size}")


def maxp(x) -> float:
    """Maximum peak amplitude of the slot."""
    x = np.asarray(x, dtype=np.float64)
    _require(x, 1, EmptySlot)
    return float(np.max(x))


def mav(x) -> float:
    """Mean absolute value of the slot."""
    x = np.asarray(x, dtype=np.float64)
    _require(x, 1, EmptySlot)
    return float(np.mean(np.abs(x)))


def mavslp(x, sub_segments: int = 3) -> float:
    """Mean difference between MAVs of adjacent equal sub-segments.

    The slot is split into ``sub_segments`` parts (remainder to the last);
    the mean of adjacent MAV differences telescopes to
    (MAV_last - MAV_first) / (sub_segments - 1).
    """
    if sub_segments < 2:
        raise ValueError("sub_segments must be >= 2")
    x = np.asarray(x, dtype=np.float64)
    _require(x, sub_segments, TooFewSamples)
    base = x.size // sub_segments
    mavs = []
    for i in range(sub_segments):
        start = i * base
        end = start + base if i < sub_segments - 1 else x.size
        mavs.append(mav(x[start:end]))
    diffs = np.diff(mavs)
    return float(np.mean(diffs))


def paaf(x) -> float:
    """Count of strict local maxima exceeding the slot mean.

    Plateaus never count: both neighbours must be strictly smaller.
    """
    x = np.asarray(x, dtype=np.float64)
    _require(x, 3, TooFewSamples)
    inner = x[1:-1]
    peaks = (inner > x[:-2]) & (inner > x[2:]) & (inner > np.mean(x))
    return float(np.count_nonzero(peaks))


def rms(x) -> float:
    """Root mean square amplitude of the slot."""
    x = np.asarray(x, dtype=np.float64)
    _require(x, 1, EmptySlot)
    return float(np.sqrt(np.mean(np.square(x))))


def _abs_diff_sum(x: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(x))))


def aac(x) -> float:
    """Average absolute successive difference; equals wl / (N-1) exactly."""
    x = np.asarray(x, dtype=np.float64)
    _require(x, 2, TooFewSamples)
    return _abs_diff_sum(x) / (x.size - 1)


def dasdv(x) -> float:
    """Root mean square of successive differences."""
    x = np.asarray(x, dtype=np.float64)
    _require(x, 2, TooFewSamples)
    d = np.diff(x)
    return float(np.sqrt(np.sum(np.square(d)) / d.size))


def wl(x) -> float:
    """Waveform length: cumulative absolute successive difference."""
    x = np.asarray(x, dtype=np.float64)
    _require(x, 2, TooFewSamples)
    return _abs_diff_sum(x)


_EXTRACTORS = {
    FeatureKind.MAXP: maxp,
    FeatureKind.MAV: mav,
    FeatureKind.MAVSLP: mavslp,
    FeatureKind.PAAF: paaf,
    FeatureKind.RMS: rms,
    FeatureKind.AAC: aac,
    FeatureKind.DASDV: dasdv,
    FeatureKind.WL: wl,
}


def column_index(slot: int, kind: FeatureKind) -> int:
    if slot < 0:
        raise ValueError("slot must be non-negative")
    return slot * FEATURES_PER_SLOT + int(kind)


def column_label(index: int) -> tuple[int, FeatureKind]:
    if index < 0:
        raise ValueError("column index must be non-negative")
    return divmod(index, FEATURES_PER_SLOT)[0], FeatureKind(index % FEATURES_PER_SLOT)


def columns_for_kinds(kinds, slot_count: int) -> tuple[int, ...]:
    """Expand feature types to their column indices across every slot."""
    cols = [
        column_index(slot, FeatureKind(kind))
        for slot in range(slot_count)
        for kind in sorted(int(k) for k in kinds)
    ]
    return tuple(sorted(cols))


@dataclass(frozen=True)
class FeatureVector:
    """One recording's features: slot-major values plus label and provenance."""

    values: tuple[float, ...]
    label: Label
    user_id: str
    condition: Condition

    def __post_init__(self):
        if len(self.values) % FEATURES_PER_SLOT != 0:
            raise ValueError(
                f"row length {len(self.values)} is not a multiple of {FEATURES_PER_SLOT}"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise NonFinite("feature vector contains non-finite values")

    @property
    def slot_count(self) -> int:
        return len(self.values) // FEATURES_PER_SLOT


@dataclass(frozen=True)
class FeatureMatrix:
    """Stacked feature rows with column labels and per-row label/provenance."""

    values: np.ndarray
    labels: tuple[Label, ...]
    users: tuple[str, ...]
    conditions: tuple[Condition, ...]
    column_labels: tuple[tuple[int, FeatureKind], ...]

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if arr.shape[1] != len(self.column_labels):
            raise ValueError("column_labels length must equal the column count")
        if not (arr.shape[0] == len(self.labels) == len(self.users) == len(self.conditions)):
            raise ValueError("labels/users/conditions must match the row count")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.values.shape[1])

    @property
    def slot_count(self) -> int:
        return self.n_cols // FEATURES_PER_SLOT

    def user_ids(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.users)))

    def take(self, row_indices) -> "FeatureMatrix":
        """New matrix holding the given rows, in the given order."""
        idx = list(row_indices)
        return FeatureMatrix(
            values=self.values[idx],
            labels=tuple(self.labels[i] for i in idx),
            users=tuple(self.users[i] for i in idx),
            conditions=tuple(self.conditions[i] for i in idx),
            column_labels=self.column_labels,
        )


def extract_row(
    series: SampleSeries,
    partition: SlotPartition,
    label: Label,
    user_id: str,
    condition: Condition,
    center: bool = False,
) -> FeatureVector:
    """Compute the slot-major feature vector for one trimmed recording.

    ``center`` subtracts the series mean before extraction; default keeps
    raw sensor integers.
    """
    x = series.samples.astype(np.float64)
    if partition.slot_bounds[-1][1] != x.size:
        raise ValueError("partition does not match series length")
    if center:
        x = x - np.mean(x)
    values = []
    for start, end in partition.slot_bounds:
        seg = x[start:end]
        for kind in FeatureKind:
            values.append(_EXTRACTORS[kind](seg))
    return FeatureVector(
        values=tuple(values), label=label, user_id=user_id, condition=condition
    )


def build_matrix(rows) -> FeatureMatrix:
    """Stack feature vectors into a matrix; all rows must share one length."""
    rows = list(rows)
    if not rows:
        raise EmptyMatrix("cannot build a matrix from zero rows")
    width = len(rows[0].values)
    for i, row in enumerate(rows):
        if len(row.values) != width:
            raise RaggedRows(f"row {i} has length {len(row.values)}, expected {width}")
    column_labels = tuple(
        column_label(i) for i in range(width)
    )
    return FeatureMatrix(
        values=np.array([row.values for row in rows], dtype=np.float64),
        labels=tuple(row.label for row in rows),
        users=tuple(row.user_id for row in rows),
        conditions=tuple(row.condition for row in rows),
        column_labels=column_labels,
    )
