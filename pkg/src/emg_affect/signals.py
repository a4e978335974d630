"""Sample series, rest-window trimming, slot segmentation, synthetic source.

A recording is a fixed-rate sequence of integer ADC counts in [0, 999].
The synthetic generator stands in for live sensor hardware: a baseline with
Gaussian noise plus Poisson-arriving exponential-decay spikes, which is
enough to give the relaxed/angry classes distinct amplitude statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, unique

import numpy as np

from .errors import DurationTooShort, TooFewSamples

ADC_MIN = 0
ADC_MAX = 999


@unique
class Label(str, Enum):
    RELAXED = "relaxed"
    ANGRY = "angry"


@unique
class Condition(str, Enum):
    FIXED = "fixed"
    OPEN = "open"


def _as_readonly(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.int64).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SampleSeries:
    """One recording: integer ADC samples at a fixed rate.

    ``start_offset_ms`` tracks how far into the original session the first
    sample lies, so trimmed series keep their position on the timeline.
    """

    sample_rate_hz: int
    samples: np.ndarray
    start_offset_ms: int = 0

    def __post_init__(self):
        if self.sample_rate_hz < 1:
            raise ValueError(f"sample_rate_hz must be >= 1, got {self.sample_rate_hz}")
        if self.start_offset_ms < 0:
            raise ValueError(f"start_offset_ms must be >= 0, got {self.start_offset_ms}")
        arr = _as_readonly(self.samples)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if arr.size and (arr.min() < ADC_MIN or arr.max() > ADC_MAX):
            raise ValueError(f"sample values must lie in [{ADC_MIN}, {ADC_MAX}]")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleSeries):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.start_offset_ms == other.start_offset_ms
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True)
class SlotPartition:
    """Contiguous half-open index ranges covering a series exactly.

    All slots share one length except the last, which absorbs the remainder.
    """

    slot_count: int
    slot_bounds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.slot_count < 1:
            raise ValueError("slot_count must be positive")
        if len(self.slot_bounds) != self.slot_count:
            raise ValueError("slot_bounds length must equal slot_count")
        prev_end = self.slot_bounds[0][0]
        for start, end in self.slot_bounds:
            if start != prev_end or end <= start:
                raise ValueError("slot bounds must be contiguous and non-empty")
            prev_end = end


@dataclass(frozen=True)
class SynthProfile:
    """Parameters of the synthetic two-state signal source."""

    label: Label
    baseline: float
    noise_sd: float
    spike_rate_hz: float
    spike_amplitude_mean: float
    spike_duration_ms: float
    seed: int = 0

    def __post_init__(self):
        if self.noise_sd < 0 or self.spike_rate_hz < 0 or self.spike_amplitude_mean < 0:
            raise ValueError("noise_sd, spike_rate_hz, spike_amplitude_mean must be >= 0")
        if self.spike_duration_ms <= 0:
            raise ValueError("spike_duration_ms must be positive")


# Default profiles: the angry source has strictly higher noise_sd and
# spike_rate_hz, mirroring the visibly busier trace of an agitated forearm.
RELAXED_PROFILE = SynthProfile(
    label=Label.RELAXED,
    baseline=120.0,
    noise_sd=6.0,
    spike_rate_hz=0.4,
    spike_amplitude_mean=70.0,
    spike_duration_ms=40.0,
)
ANGRY_PROFILE = SynthProfile(
    label=Label.ANGRY,
    baseline=150.0,
    noise_sd=18.0,
    spike_rate_hz=3.0,
    spike_amplitude_mean=220.0,
    spike_duration_ms=60.0,
)

DEFAULT_PROFILES = {Label.RELAXED: RELAXED_PROFILE, Label.ANGRY: ANGRY_PROFILE}

DEFAULT_HEAD_S = 10.0
DEFAULT_TAIL_S = 5.0
DEFAULT_SLOT_COUNT = 10
DEFAULT_SAMPLE_RATE_HZ = 200


def trim_rest_windows(
    series: SampleSeries,
    head_s: float = DEFAULT_HEAD_S,
    tail_s: float = DEFAULT_TAIL_S,
) -> SampleSeries:
    """Drop the leading/trailing rest windows, keeping only the typing span.

    Trimming is time-based so it is independent of the sample rate.
    Raises DurationTooShort when nothing would remain.
    """
    if head_s < 0 or tail_s < 0:
        raise ValueError("head_s and tail_s must be >= 0")
    if series.duration_s <= head_s + tail_s:
        raise DurationTooShort(
            f"recording of {series.duration_s:g} s cannot lose "
            f"{head_s:g} s head + {tail_s:g} s tail"
        )
    rate = series.sample_rate_hz
    start = int(round(head_s * rate))
    stop = len(series) - int(round(tail_s * rate))
    return SampleSeries(
        sample_rate_hz=rate,
        samples=series.samples[start:stop],
        start_offset_ms=series.start_offset_ms + int(round(head_s * 1000)),
    )


def partition_slots(series: SampleSeries, slot_count: int = DEFAULT_SLOT_COUNT) -> SlotPartition:
    """Split a series into ``slot_count`` contiguous slots; remainder goes last."""
    if slot_count < 1:
        raise ValueError("slot_count must be positive")
    n = len(series)
    if n < slot_count:
        raise TooFewSamples(f"{n} samples cannot fill {slot_count} slots")
    base = n // slot_count
    bounds = []
    start = 0
    for i in range(slot_count):
        end = start + base if i < slot_count - 1 else n
        bounds.append((start, end))
        start = end
    return SlotPartition(slot_count=slot_count, slot_bounds=tuple(bounds))


def generate_synthetic(
    profile: SynthProfile,
    duration_s: float,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
) -> SampleSeries:
    """Generate a deterministic synthetic recording for a profile.

    baseline + Gaussian noise + Poisson-arriving spikes, each spike an
    exponential-decay pulse truncated at spike_duration_ms, rounded and
    clamped to the ADC range.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    if sample_rate_hz < 1:
        raise ValueError("sample_rate_hz must be >= 1")
    n = int(round(duration_s * sample_rate_hz))
    rng = np.random.Generator(np.random.PCG64(profile.seed))
    signal = np.full(n, profile.baseline, dtype=np.float64)
    if profile.noise_sd > 0:
        signal += rng.normal(0.0, profile.noise_sd, size=n)
    if profile.spike_rate_hz > 0:
        count = rng.poisson(profile.spike_rate_hz * duration_s)
        starts = np.sort(rng.uniform(0.0, duration_s, size=count))
        amplitudes = rng.exponential(profile.spike_amplitude_mean, size=count)
        width = max(1, int(round(profile.spike_duration_ms / 1000.0 * sample_rate_hz)))
        # decay constant chosen so the pulse falls to ~5% at truncation
        t = np.arange(width) / sample_rate_hz
        tau = profile.spike_duration_ms / 3000.0
        pulse = np.exp(-t / tau)
        for t0, amp in zip(starts, amplitudes):
            i0 = int(t0 * sample_rate_hz)
            i1 = min(i0 + width, n)
            if i0 < n:
                signal[i0:i1] += amp * pulse[: i1 - i0]
    values = np.clip(np.rint(signal), ADC_MIN, ADC_MAX).astype(np.int64)
    return SampleSeries(sample_rate_hz=sample_rate_hz, samples=values)


def concat_series(parts: list[SampleSeries]) -> SampleSeries:
    """Join consecutive segments recorded at one rate into a single series."""
    if not parts:
        raise ValueError("need at least one segment")
    rate = parts[0].sample_rate_hz
    if any(p.sample_rate_hz != rate for p in parts):
        raise ValueError("all segments must share one sample rate")
    samples = np.concatenate([p.samples for p in parts])
    return SampleSeries(
        sample_rate_hz=rate,
        samples=samples,
        start_offset_ms=parts[0].start_offset_ms,
    )
