"""Plain-text persistence: recordings, manifests, matrices, models, corpora.

Every format is line-oriented UTF-8 with LF newlines. Floats are written
with ``repr`` (shortest round-trip form), so write-then-read reproduces the
exact values and read-then-write reproduces the exact bytes. Malformed
input raises ``ParseError`` (or a subclass) carrying the line number —
parsing never lets a bare ValueError/IndexError escape.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    IoError,
    ManifestMismatch,
    NonMonotonicTimestamp,
    ParseError,
    ValueOutOfRange,
    VersionMismatch,
)
from .features import (
    FEATURES_PER_SLOT,
    FeatureKind,
    FeatureMatrix,
    build_matrix,
    column_label,
    extract_row,
)
from .signals import (
    ADC_MAX,
    ADC_MIN,
    ANGRY_PROFILE,
    DEFAULT_HEAD_S,
    DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_SLOT_COUNT,
    DEFAULT_TAIL_S,
    RELAXED_PROFILE,
    Condition,
    Label,
    SampleSeries,
    concat_series,
    generate_synthetic,
    partition_slots,
    trim_rest_windows,
)
from .svm import Normalizer, SvmModel

MODEL_MAGIC = "emg-affect-model"
MODEL_VERSION = "v1"
_SEPARATOR = "---"


@dataclass(frozen=True)
class Recording:
    """A sample series plus the session metadata stored in its file header."""

    series: SampleSeries
    user_id: str
    condition: Condition
    label: Label
    started_at: str | None = None


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    user_id: str
    condition: Condition
    label: Label


def _read_text(path: Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8: {exc}") from None
    return text.split("\n")


def _open_for_write(path: Path, overwrite: bool):
    path = Path(path)
    if path.exists() and not overwrite:
        raise IoError(f"refusing to overwrite existing file {path}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse_int(text: str, what: str, line_no: int | None = None) -> int:
    text = text.strip()
    if not text or not (text.lstrip("-").isdigit()):
        raise ParseError(f"{what} must be an integer, got {text!r}", line_no)
    return int(text)


def _parse_float(text: str, what: str, line_no: int | None = None) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise ParseError(f"{what} must be a number, got {text!r}", line_no) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {text!r}", line_no)
    return value


def _parse_enum(enum_cls, text: str, what: str, line_no: int | None = None):
    try:
        return enum_cls(text.strip())
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ParseError(
            f"{what} must be one of {allowed}, got {text!r}", line_no
        ) from None


# --- recordings -----------------------------------------------------------

_REQUIRED_HEADER_KEYS = ("user_id", "condition", "label", "sample_rate_hz")
_HEADER_KEYS = _REQUIRED_HEADER_KEYS + ("started_at",)


def write_recording(recording: Recording, path, overwrite: bool = False) -> None:
    """Write the key=value header, a separator, then timestamp,value lines.

    Timestamps are regenerated from the rate and start offset, so a file
    written by this function always has the canonical spacing.
    """
    series = recording.series
    with _open_for_write(Path(path), overwrite) as fh:
        fh.write(f"user_id={recording.user_id}\n")
        fh.write(f"condition={recording.condition.value}\n")
        fh.write(f"label={recording.label.value}\n")
        fh.write(f"sample_rate_hz={series.sample_rate_hz}\n")
        if recording.started_at is not None:
            fh.write(f"started_at={recording.started_at}\n")
        fh.write(f"{_SEPARATOR}\n")
        offset = series.start_offset_ms
        rate = series.sample_rate_hz
        for i, value in enumerate(series.samples):
            ts = offset + round(i * 1000 / rate)
            fh.write(f"{ts},{value}\n")


def read_recording(path) -> Recording:
    """Parse a recording file; every malformation is a typed ParseError."""
    lines = _read_text(Path(path))
    header: dict[str, str] = {}
    body_start = None
    for idx, line in enumerate(lines):
        line_no = idx + 1
        if line == _SEPARATOR:
            body_start = idx + 1
            break
        if line == "" and idx == len(lines) - 1:
            break
        if "=" not in line:
            raise ParseError(f"expected key=value in header, got {line!r}", line_no)
        key, value = line.split("=", 1)
        if key not in _HEADER_KEYS:
            raise ParseError(f"unknown header key {key!r}", line_no)
        if key in header:
            raise ParseError(f"duplicate header key {key!r}", line_no)
        header[key] = value
    if body_start is None:
        raise ParseError(f"missing {_SEPARATOR!r} separator")
    for key in _REQUIRED_HEADER_KEYS:
        if key not in header:
            raise ParseError(f"missing header key {key!r}")

    rate = _parse_int(header["sample_rate_hz"], "sample_rate_hz")
    if rate < 1:
        raise ParseError(f"sample_rate_hz must be >= 1, got {rate}")
    condition = _parse_enum(Condition, header["condition"], "condition")
    label = _parse_enum(Label, header["label"], "label")

    timestamps: list[int] = []
    values: list[int] = []
    for idx in range(body_start, len(lines)):
        line = lines[idx]
        line_no = idx + 1
        if line == "":
            if idx == len(lines) - 1:
                break
            raise ParseError("blank line inside body", line_no)
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected timestamp,value, got {line!r}", line_no)
        ts = _parse_int(parts[0], "timestamp_ms", line_no)
        value = _parse_int(parts[1], "value", line_no)
        if not ADC_MIN <= value <= ADC_MAX:
            raise ValueOutOfRange(
                f"value {value} outside [{ADC_MIN}, {ADC_MAX}]", line_no
            )
        if timestamps and ts <= timestamps[-1]:
            raise NonMonotonicTimestamp(
                f"timestamp {ts} does not increase past {timestamps[-1]}", line_no
            )
        if ts < 0:
            raise ParseError(f"timestamp {ts} must be >= 0", line_no)
        timestamps.append(ts)
        values.append(value)

    if not values:
        raise ParseError("recording has no samples", len(lines))

    series = SampleSeries(
        sample_rate_hz=rate,
        samples=np.array(values, dtype=np.int64),
        start_offset_ms=timestamps[0] if timestamps else 0,
    )
    return Recording(
        series=series,
        user_id=header["user_id"],
        condition=condition,
        label=label,
        started_at=header.get("started_at"),
    )


# --- manifests ------------------------------------------------------------

_MANIFEST_HEADER = ["path", "user_id", "condition", "label"]


def save_manifest(entries, path, overwrite: bool = False) -> None:
    with _open_for_write(Path(path), overwrite) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_MANIFEST_HEADER)
        for entry in entries:
            writer.writerow(
                [entry.path, entry.user_id, entry.condition.value, entry.label.value]
            )


def load_manifest(path) -> tuple[ManifestEntry, ...]:
    lines = _read_text(Path(path))
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise ParseError("manifest is empty")
    rows = list(csv.reader(lines))
    if rows[0] != _MANIFEST_HEADER:
        raise ParseError(
            f"manifest header must be {','.join(_MANIFEST_HEADER)!r}", 1
        )
    entries = []
    for idx, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", idx)
        rel_path, user_id, condition, label = row
        if not rel_path or not user_id:
            raise ParseError("path and user_id must be non-empty", idx)
        entries.append(
            ManifestEntry(
                path=rel_path,
                user_id=user_id,
                condition=_parse_enum(Condition, condition, "condition", idx),
                label=_parse_enum(Label, label, "label", idx),
            )
        )
    if not entries:
        raise ParseError("manifest lists no recordings")
    return tuple(entries)


def load_corpus(
    manifest_path,
    head_s: float = DEFAULT_HEAD_S,
    tail_s: float = DEFAULT_TAIL_S,
    slot_count: int = DEFAULT_SLOT_COUNT,
) -> FeatureMatrix:
    """Read every manifest entry, trim, slot, extract: one matrix row each.

    The recording header must agree with its manifest row, otherwise
    ManifestMismatch names the offending file.
    """
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    rows = []
    for entry in load_manifest(manifest_path):
        recording = read_recording(root / entry.path)
        if (
            recording.user_id != entry.user_id
            or recording.condition is not entry.condition
            or recording.label is not entry.label
        ):
            raise ManifestMismatch(
                f"{entry.path}: header "
                f"({recording.user_id}, {recording.condition.value}, "
                f"{recording.label.value}) contradicts manifest "
                f"({entry.user_id}, {entry.condition.value}, {entry.label.value})"
            )
        trimmed = trim_rest_windows(recording.series, head_s, tail_s)
        partition = partition_slots(trimmed, slot_count)
        rows.append(
            extract_row(
                trimmed,
                partition,
                recording.label,
                recording.user_id,
                recording.condition,
            )
        )
    return build_matrix(rows)


# --- feature matrices -----------------------------------------------------

_MATRIX_META = ["label", "user_id", "condition"]


def _column_name(index: int) -> str:
    slot, kind = column_label(index)
    return f"s{slot:02d}_{kind.name.lower()}"


def write_matrix(matrix: FeatureMatrix, path, overwrite: bool = False) -> None:
    with _open_for_write(Path(path), overwrite) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        names = [_column_name(i) for i in range(matrix.n_cols)]
        writer.writerow(_MATRIX_META + names)
        for i in range(matrix.n_rows):
            row = [
                matrix.labels[i].value,
                matrix.users[i],
                matrix.conditions[i].value,
            ]
            row.extend(repr(float(v)) for v in matrix.values[i])
            writer.writerow(row)


def read_matrix(path) -> FeatureMatrix:
    lines = _read_text(Path(path))
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise ParseError("matrix file is empty")
    rows = list(csv.reader(lines))
    header = rows[0]
    if header[: len(_MATRIX_META)] != _MATRIX_META:
        raise ParseError(
            f"matrix header must start with {','.join(_MATRIX_META)!r}", 1
        )
    width = len(header) - len(_MATRIX_META)
    if width < FEATURES_PER_SLOT or width % FEATURES_PER_SLOT != 0:
        raise ParseError(
            f"column count {width} is not a positive multiple of {FEATURES_PER_SLOT}", 1
        )
    expected_names = [_column_name(i) for i in range(width)]
    if header[len(_MATRIX_META):] != expected_names:
        raise ParseError("matrix columns are misnamed or out of order", 1)

    labels: list[Label] = []
    users: list[str] = []
    conditions: list[Condition] = []
    values = []
    for idx, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, got {len(row)}", idx
            )
        labels.append(_parse_enum(Label, row[0], "label", idx))
        if not row[1]:
            raise ParseError("user_id must be non-empty", idx)
        users.append(row[1])
        conditions.append(_parse_enum(Condition, row[2], "condition", idx))
        values.append(
            [_parse_float(cell, "feature value", idx) for cell in row[3:]]
        )
    if not values:
        raise ParseError("matrix file lists no rows")
    return FeatureMatrix(
        values=np.array(values, dtype=np.float64),
        labels=tuple(labels),
        users=tuple(users),
        conditions=tuple(conditions),
        column_labels=tuple(column_label(i) for i in range(width)),
    )


# --- models ---------------------------------------------------------------

def _format_floats(arr) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(arr).ravel())


def _parse_floats(text: str, what: str, line_no: int) -> list[float]:
    if text == "":
        return []
    return [_parse_float(part, what, line_no) for part in text.split(",")]


def save_model(model: SvmModel, path, overwrite: bool = False) -> None:
    """Versioned key=value header, separator, one support vector per line."""
    with _open_for_write(Path(path), overwrite) as fh:
        fh.write(f"{MODEL_MAGIC} {MODEL_VERSION}\n")
        fh.write(f"gamma={repr(model.gamma)}\n")
        fh.write(f"bias={repr(model.bias)}\n")
        fh.write(f"input_width={model.input_width}\n")
        fh.write(f"active_columns={','.join(str(c) for c in model.active_columns)}\n")
        fh.write(f"converged={'true' if model.converged else 'false'}\n")
        fh.write(f"passes={model.passes}\n")
        fh.write(f"means={_format_floats(model.normalizer.means)}\n")
        fh.write(f"sds={_format_floats(model.normalizer.sds)}\n")
        fh.write(f"dual_coefs={_format_floats(model.dual_coefs)}\n")
        fh.write(f"{_SEPARATOR}\n")
        for row in model.support_vectors:
            fh.write(_format_floats(row) + "\n")


_MODEL_KEYS = (
    "gamma",
    "bias",
    "input_width",
    "active_columns",
    "converged",
    "passes",
    "means",
    "sds",
    "dual_coefs",
)


def load_model(path) -> SvmModel:
    lines = _read_text(Path(path))
    if not lines or not lines[0]:
        raise ParseError("model file is empty")
    magic = lines[0].split(" ")
    if len(magic) != 2 or magic[0] != MODEL_MAGIC:
        raise ParseError(f"not a model file: {lines[0]!r}", 1)
    if magic[1] != MODEL_VERSION:
        raise VersionMismatch(
            f"model version {magic[1]!r} is not supported (expected {MODEL_VERSION})"
        )

    header: dict[str, str] = {}
    header_lines: dict[str, int] = {}
    body_start = None
    for idx in range(1, len(lines)):
        line = lines[idx]
        line_no = idx + 1
        if line == _SEPARATOR:
            body_start = idx + 1
            break
        if "=" not in line:
            raise ParseError(f"expected key=value in header, got {line!r}", line_no)
        key, value = line.split("=", 1)
        if key not in _MODEL_KEYS:
            raise ParseError(f"unknown header key {key!r}", line_no)
        if key in header:
            raise ParseError(f"duplicate header key {key!r}", line_no)
        header[key] = value
        header_lines[key] = line_no
    if body_start is None:
        raise ParseError(f"missing {_SEPARATOR!r} separator")
    for key in _MODEL_KEYS:
        if key not in header:
            raise ParseError(f"missing header key {key!r}")

    gamma = _parse_float(header["gamma"], "gamma", header_lines["gamma"])
    if gamma <= 0:
        raise ParseError("gamma must be positive", header_lines["gamma"])
    bias = _parse_float(header["bias"], "bias", header_lines["bias"])
    input_width = _parse_int(header["input_width"], "input_width", header_lines["input_width"])
    if input_width < 1:
        raise ParseError("input_width must be positive", header_lines["input_width"])
    cols_text = header["active_columns"]
    if not cols_text:
        raise ParseError("active_columns must be non-empty", header_lines["active_columns"])
    active_columns = tuple(
        _parse_int(part, "active column", header_lines["active_columns"])
        for part in cols_text.split(",")
    )
    for c in active_columns:
        if not 0 <= c < input_width:
            raise ParseError(
                f"active column {c} outside input width {input_width}",
                header_lines["active_columns"],
            )
    if header["converged"] not in ("true", "false"):
        raise ParseError("converged must be true or false", header_lines["converged"])
    converged = header["converged"] == "true"
    passes = _parse_int(header["passes"], "passes", header_lines["passes"])
    means = _parse_floats(header["means"], "mean", header_lines["means"])
    sds = _parse_floats(header["sds"], "sd", header_lines["sds"])
    dual_coefs = _parse_floats(header["dual_coefs"], "dual coef", header_lines["dual_coefs"])
    if len(means) != len(active_columns) or len(sds) != len(active_columns):
        raise ParseError("means/sds length must match active_columns")

    vectors = []
    for idx in range(body_start, len(lines)):
        line = lines[idx]
        line_no = idx + 1
        if line == "":
            if idx == len(lines) - 1:
                break
            raise ParseError("blank line inside body", line_no)
        vector = _parse_floats(line, "support vector value", line_no)
        if len(vector) != len(active_columns):
            raise ParseError(
                f"support vector has {len(vector)} values, expected {len(active_columns)}",
                line_no,
            )
        vectors.append(vector)
    if len(vectors) != len(dual_coefs):
        raise ParseError(
            f"{len(vectors)} support vectors but {len(dual_coefs)} dual coefs"
        )

    width = len(active_columns)
    return SvmModel(
        support_vectors=np.array(vectors, dtype=np.float64).reshape(len(vectors), width),
        dual_coefs=np.array(dual_coefs, dtype=np.float64),
        bias=bias,
        gamma=gamma,
        normalizer=Normalizer(
            means=np.array(means, dtype=np.float64),
            sds=np.array(sds, dtype=np.float64),
        ),
        active_columns=active_columns,
        input_width=input_width,
        converged=converged,
        passes=passes,
    )


# --- synthetic corpus -----------------------------------------------------

REST_SPIKE_FACTOR = 0.25
DEFAULT_TYPING_S = 60.0
DEFAULT_STARTED_AT = "2000-01-01T00:00:00Z"


def generate_corpus(
    root,
    user_count: int = 10,
    seed: int = 0,
    typing_s: float = DEFAULT_TYPING_S,
    head_s: float = DEFAULT_HEAD_S,
    tail_s: float = DEFAULT_TAIL_S,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
    overwrite: bool = False,
) -> Path:
    """Write a deterministic synthetic corpus and return its manifest path.

    Every user records all four condition x label combinations. Per-user
    jitter on the profile parameters keeps users distinguishable (so
    leave-one-user-out is a meaningful test) while classes stay separable.
    Recording timestamps are fixed, so two runs with one seed produce
    byte-identical trees.
    """
    root = Path(root)
    entries = []
    rec_index = 0
    for user_idx in range(user_count):
        user_id = f"u{user_idx + 1:02d}"
        jitter = np.random.default_rng((seed, user_idx))
        baseline_shift = jitter.uniform(-8.0, 8.0)
        noise_scale = jitter.uniform(0.85, 1.2)
        rate_scale = jitter.uniform(0.8, 1.25)
        amp_scale = jitter.uniform(0.85, 1.2)
        for condition in (Condition.FIXED, Condition.OPEN):
            for label in (Label.RELAXED, Label.ANGRY):
                base = RELAXED_PROFILE if label is Label.RELAXED else ANGRY_PROFILE
                profile = replace(
                    base,
                    baseline=base.baseline + baseline_shift,
                    noise_sd=base.noise_sd * noise_scale,
                    spike_rate_hz=base.spike_rate_hz * rate_scale,
                    spike_amplitude_mean=base.spike_amplitude_mean * amp_scale,
                )
                rest = replace(
                    RELAXED_PROFILE,
                    baseline=RELAXED_PROFILE.baseline + baseline_shift,
                    noise_sd=RELAXED_PROFILE.noise_sd * noise_scale,
                    spike_rate_hz=RELAXED_PROFILE.spike_rate_hz * REST_SPIKE_FACTOR,
                )
                base_seed = seed + 1_000_003 * rec_index
                series = concat_series(
                    [
                        generate_synthetic(
                            replace(rest, seed=base_seed),
                            head_s,
                            sample_rate_hz,
                        ),
                        generate_synthetic(
                            replace(profile, seed=base_seed + 1),
                            typing_s,
                            sample_rate_hz,
                        ),
                        generate_synthetic(
                            replace(rest, seed=base_seed + 2),
                            tail_s,
                            sample_rate_hz,
                        ),
                    ]
                )
                rel_path = f"recordings/{user_id}_{condition.value}_{label.value}.txt"
                write_recording(
                    Recording(
                        series=series,
                        user_id=user_id,
                        condition=condition,
                        label=label,
                        started_at=DEFAULT_STARTED_AT,
                    ),
                    root / rel_path,
                    overwrite=overwrite,
                )
                entries.append(
                    ManifestEntry(
                        path=rel_path,
                        user_id=user_id,
                        condition=condition,
                        label=label,
                    )
                )
                rec_index += 1
    manifest_path = root / "manifest.csv"
    save_manifest(entries, manifest_path, overwrite=overwrite)
    return manifest_path
