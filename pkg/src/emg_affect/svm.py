"""From-scratch soft-margin RBF SVM: normalizer, training, prediction, CV.

The dual problem is solved by the SMO backend in ``emg_affect._smo``; this
module owns everything around it — z-score normalization, the RBF kernel,
gamma resolution, the trained-model container, and stratified k-fold
cross-validation. Angry is the positive class (+1) and a decision value of
exactly zero predicts Angry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _smo
from .errors import (
    DimensionMismatch,
    EmptyMatrix,
    KOutOfRange,
    NonFinite,
    SingleClass,
    TooFewRows,
)
from .features import FeatureMatrix
from .signals import Label

POSITIVE_LABEL = Label.ANGRY
NEGATIVE_LABEL = Label.RELAXED


def label_to_sign(label: Label) -> float:
    return 1.0 if label is POSITIVE_LABEL else -1.0


def sign_to_label(decision: float) -> Label:
    return POSITIVE_LABEL if decision >= 0.0 else NEGATIVE_LABEL


@dataclass(frozen=True)
class Normalizer:
    """Per-column z-score parameters fitted on training data (ddof=0).

    A constant column (sd == 0) maps to 0.0 everywhere rather than
    dividing by zero.
    """

    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64).copy()
        sds = np.asarray(self.sds, dtype=np.float64).copy()
        if means.shape != sds.shape or means.ndim != 1:
            raise ValueError("means and sds must be 1-D and the same length")
        means.flags.writeable = False
        sds.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)

    @classmethod
    def fit(cls, values: np.ndarray) -> "Normalizer":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] == 0:
            raise EmptyMatrix("cannot fit a normalizer on an empty matrix")
        return cls(means=values.mean(axis=0), sds=values.std(axis=0, ddof=0))

    def transform(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if values.shape[1] != self.means.shape[0]:
            raise DimensionMismatch(
                f"expected {self.means.shape[0]} columns, got {values.shape[1]}"
            )
        out = values - self.means
        nonzero = self.sds != 0.0
        out[:, nonzero] /= self.sds[nonzero]
        out[:, ~nonzero] = 0.0
        return out


@dataclass(frozen=True)
class SvmHyperparams:
    """Training knobs; ``gamma`` is either a positive float or "auto"."""

    c: float = 1.0
    gamma: float | str = "auto"
    tolerance: float = 1e-3
    max_passes: int = 200
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.c <= 0.0:
            raise ValueError("c must be positive")
        if isinstance(self.gamma, str):
            if self.gamma != "auto":
                raise ValueError("gamma must be a positive number or 'auto'")
        elif self.gamma <= 0.0:
            raise ValueError("gamma must be a positive number or 'auto'")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")
        if self.folds < 2:
            raise KOutOfRange("folds must be at least 2")


def resolve_gamma(gamma: float | str, normalized: np.ndarray) -> float:
    """Resolve "auto" to 1 / (d * mean column variance) of normalized data.

    After z-scoring every non-constant column has unit variance, so the
    mean variance is the fraction of informative columns; an all-constant
    matrix falls back to 1/d.
    """
    if not isinstance(gamma, str):
        value = float(gamma)
        if value <= 0.0 or not math.isfinite(value):
            raise ValueError("gamma must be a positive finite number")
        return value
    if gamma != "auto":
        raise ValueError(f"unknown gamma setting {gamma!r}")
    d = normalized.shape[1]
    mean_var = float(np.mean(np.var(normalized, axis=0, ddof=0)))
    if mean_var == 0.0:
        return 1.0 / d
    return 1.0 / (d * mean_var)


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a_i - b_j||^2), computed via the expanded square.

    The shared kernel matrix is computed here once, in numpy, so both SMO
    backends consume identical values.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def dual_objective(K: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """W(alpha) = sum(alpha) - 1/2 * alpha^T (yy^T * K) alpha."""
    alpha = np.asarray(alpha, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ay = alpha * y
    return float(np.sum(alpha) - 0.5 * (ay @ np.asarray(K) @ ay))


def kkt_violations(
    K: np.ndarray,
    y: np.ndarray,
    alpha: np.ndarray,
    bias: float | None,
    c: float,
    tol: float,
) -> list[tuple[int, float]]:
    """Indices violating the KKT conditions at slack ``tol``, with margins.

    Returns (index, excess) pairs where excess measures how far past the
    tolerance the condition is broken; an empty list certifies the solution.

    ``bias=None`` certifies the dual variables alone: the bias only enters
    the conditions as a free intercept, so the check uses the most
    favorable one (the midpoint of the interval the conditions imply).
    When every variable sits at a bound that interval is the only honest
    choice — any single returned bias is arbitrary within it.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    g = K.T @ (alpha * y)
    if bias is None:
        bias = _certifying_bias(y, alpha, g, c, tol)
    f = g + bias
    margins = y * f
    out: list[tuple[int, float]] = []
    for i in range(alpha.shape[0]):
        a = alpha[i]
        m = margins[i]
        if a <= tol:
            excess = (1.0 - tol) - m
        elif a >= c - tol:
            excess = m - (1.0 + tol)
        else:
            excess = abs(m - 1.0) - tol
        if excess > 0.0:
            out.append((i, float(excess)))
    return out


def _certifying_bias(
    y: np.ndarray, alpha: np.ndarray, g: np.ndarray, c: float, tol: float
) -> float:
    """Midpoint of the bias interval the KKT conditions allow, given alpha.

    Each point contributes ``y_i (g_i + b) >= 1`` (at the lower bound),
    ``<= 1`` (at the upper bound), or ``== 1`` (free), which is a one-sided
    or two-sided constraint on ``b`` alone.
    """
    lo = -math.inf
    hi = math.inf
    for i in range(alpha.shape[0]):
        pivot = y[i] - g[i]  # b making this margin exactly 1 (y_i^2 == 1)
        a = alpha[i]
        at_lower = a <= tol
        at_upper = a >= c - tol
        if at_lower:
            if y[i] > 0.0:
                lo = max(lo, pivot)
            else:
                hi = min(hi, pivot)
        elif at_upper:
            if y[i] > 0.0:
                hi = min(hi, pivot)
            else:
                lo = max(lo, pivot)
        else:
            lo = max(lo, pivot)
            hi = min(hi, pivot)
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi
    if math.isinf(hi):
        return lo
    return (lo + hi) / 2.0


@dataclass(frozen=True)
class SvmModel:
    """A trained classifier, self-contained for prediction and persistence.

    ``support_vectors`` live in normalized space; ``active_columns`` selects
    model inputs out of a full extracted row of ``input_width`` columns.
    """

    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    gamma: float
    normalizer: Normalizer
    active_columns: tuple[int, ...]
    input_width: int
    converged: bool
    passes: int

    def __post_init__(self):
        sv = np.asarray(self.support_vectors, dtype=np.float64).copy()
        dc = np.asarray(self.dual_coefs, dtype=np.float64).copy()
        if sv.ndim != 2 or dc.ndim != 1 or sv.shape[0] != dc.shape[0]:
            raise ValueError("support_vectors and dual_coefs must align")
        sv.flags.writeable = False
        dc.flags.writeable = False
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", dc)

    def decision_values(self, rows: np.ndarray) -> np.ndarray:
        """Decision function for raw (unnormalized, full-width) rows."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if rows.shape[1] != self.input_width:
            raise DimensionMismatch(
                f"expected rows of width {self.input_width}, got {rows.shape[1]}"
            )
        if not np.all(np.isfinite(rows)):
            raise NonFinite("prediction input contains non-finite values")
        selected = rows[:, list(self.active_columns)]
        normalized = self.normalizer.transform(selected)
        if self.support_vectors.shape[0] == 0:
            return np.full(rows.shape[0], self.bias)
        k = rbf_kernel(normalized, self.support_vectors, self.gamma)
        return k @ self.dual_coefs + self.bias

    def predict_row(self, row) -> Label:
        return sign_to_label(float(self.decision_values(np.asarray(row))[0]))

    def predict(self, matrix: FeatureMatrix) -> tuple[Label, ...]:
        values = self.decision_values(matrix.values)
        return tuple(sign_to_label(float(v)) for v in values)


def _training_arrays(
    matrix: FeatureMatrix, columns: Sequence[int] | None
) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    if matrix.n_rows == 0:
        raise EmptyMatrix("cannot train on an empty matrix")
    if matrix.n_rows < 2:
        raise TooFewRows("need at least two rows to train")
    if columns is None:
        active = tuple(range(matrix.n_cols))
    else:
        active = tuple(int(c) for c in columns)
        if not active:
            raise DimensionMismatch("need at least one active column")
        for c in active:
            if not 0 <= c < matrix.n_cols:
                raise DimensionMismatch(f"column {c} out of range")
    X = matrix.values[:, list(active)]
    if not np.all(np.isfinite(X)):
        raise NonFinite("training data contains non-finite values")
    y = np.array([label_to_sign(lab) for lab in matrix.labels], dtype=np.float64)
    if len(set(matrix.labels)) < 2:
        raise SingleClass("training data holds a single class")
    return X, y, active


def train(
    matrix: FeatureMatrix,
    hp: SvmHyperparams = SvmHyperparams(),
    columns: Sequence[int] | None = None,
) -> SvmModel:
    """Fit on the given matrix (optionally a column subset) via SMO."""
    X, y, active = _training_arrays(matrix, columns)
    normalizer = Normalizer.fit(X)
    Xn = normalizer.transform(X)
    gamma = resolve_gamma(hp.gamma, Xn)
    K = rbf_kernel(Xn, Xn, gamma)
    alpha, bias, passes, converged, _ = _smo.smo_solve(
        K, y, hp.c, hp.tolerance, hp.max_passes, hp.seed
    )
    keep = alpha > 0.0
    return SvmModel(
        support_vectors=Xn[keep],
        dual_coefs=alpha[keep] * y[keep],
        bias=bias,
        gamma=gamma,
        normalizer=normalizer,
        active_columns=active,
        input_width=matrix.n_cols,
        converged=converged,
        passes=passes,
    )


def stratified_folds(labels: Sequence[Label], fold_count: int) -> tuple[tuple[int, ...], ...]:
    """Deterministic stratified fold assignment.

    Rows are walked class by class (Angry first, then Relaxed, each in row
    order) while one global cursor deals them round-robin, so class balance
    per fold is within one row and ``fold_count == len(labels)`` degrades
    gracefully to leave-one-out.
    """
    n = len(labels)
    if not 2 <= fold_count <= n:
        raise KOutOfRange(f"fold count must be in [2, {n}], got {fold_count}")
    folds: list[list[int]] = [[] for _ in range(fold_count)]
    cursor = 0
    for wanted in (POSITIVE_LABEL, NEGATIVE_LABEL):
        for i, label in enumerate(labels):
            if label is wanted:
                folds[cursor % fold_count].append(i)
                cursor += 1
    return tuple(tuple(f) for f in folds)


@dataclass(frozen=True)
class CvResult:
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float


def cross_validate(
    matrix: FeatureMatrix,
    hp: SvmHyperparams = SvmHyperparams(),
    columns: Sequence[int] | None = None,
) -> CvResult:
    """Stratified k-fold accuracy; the unweighted mean of fold accuracies.

    Fold ``f`` trains with seed ``hp.seed + f`` so repeated runs are
    reproducible yet folds do not share SMO tie-breaking streams.
    """
    folds = stratified_folds(matrix.labels, hp.folds)
    accuracies = []
    for f, held_out in enumerate(folds):
        held = set(held_out)
        train_rows = [i for i in range(matrix.n_rows) if i not in held]
        fold_hp = SvmHyperparams(
            c=hp.c,
            gamma=hp.gamma,
            tolerance=hp.tolerance,
            max_passes=hp.max_passes,
            folds=hp.folds,
            seed=hp.seed + f,
        )
        model = train(matrix.take(train_rows), fold_hp, columns)
        test = matrix.take(held_out)
        predicted = model.predict(test)
        hits = sum(1 for p, t in zip(predicted, test.labels) if p is t)
        accuracies.append(hits / len(held_out))
    return CvResult(
        fold_accuracies=tuple(accuracies),
        mean_accuracy=float(np.mean(accuracies)),
    )
