"""Evaluation harness: splits, confusion counts, and the metric suite.

Two schemes: leave-one-user-out (every recording of one user held out per
iteration) and a stratified 80-20 split re-drawn per iteration. Each
iteration derives its own seeds from the plan seed and its index, so a run
is reproducible for any worker count and results reduce in index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum, unique

import numpy as np

from .errors import IterationFailure, TooFewUsers, UnknownUser
from .features import FeatureMatrix
from .selection import SelectionSpec, select_features
from .signals import Label
from .svm import POSITIVE_LABEL, SvmHyperparams, train


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary counts with Angry as the positive class."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.fp + self.tn

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )

    @classmethod
    def from_pairs(cls, predicted, actual) -> "ConfusionMatrix":
        tp = fp = fn = tn = 0
        for p, a in zip(predicted, actual, strict=True):
            if a is POSITIVE_LABEL:
                if p is POSITIVE_LABEL:
                    tp += 1
                else:
                    fn += 1
            else:
                if p is POSITIVE_LABEL:
                    fp += 1
                else:
                    tn += 1
        return cls(tp=tp, fp=fp, fn=fn, tn=tn)


_METRIC_NAMES = ("acc", "ppv", "tpr", "spc", "fpr", "fnr", "f1")


@dataclass(frozen=True)
class MetricsReport:
    """The seven ratios; any 0/0 is reported as 0.0 and flagged degenerate."""

    acc: float
    ppv: float
    tpr: float
    spc: float
    fpr: float
    fnr: float
    f1: float
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _METRIC_NAMES}


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    degenerate: list[str] = []

    def ratio(name: str, num: int, den: int) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    return MetricsReport(
        acc=ratio("acc", cm.tp + cm.tn, cm.total),
        ppv=ratio("ppv", cm.tp, cm.tp + cm.fp),
        tpr=ratio("tpr", cm.tp, cm.tp + cm.fn),
        spc=ratio("spc", cm.tn, cm.fp + cm.tn),
        fpr=ratio("fpr", cm.fp, cm.fp + cm.tn),
        fnr=ratio("fnr", cm.fn, cm.fn + cm.tp),
        f1=ratio("f1", 2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn),
        degenerate=tuple(degenerate),
    )


@unique
class Scheme(str, Enum):
    LOUO = "louo"
    SPLIT_8020 = "8020"


@dataclass(frozen=True)
class EvalPlan:
    """Everything one evaluation run depends on."""

    scheme: Scheme = Scheme.LOUO
    iterations: int = 50
    seed: int = 0
    reselect_per_iteration: bool = True
    jobs: int = 1
    selection: SelectionSpec | None = SelectionSpec()
    hp: SvmHyperparams = SvmHyperparams()

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


def user_order(matrix: FeatureMatrix, seed: int) -> tuple[str, ...]:
    """Users sorted, then shuffled once by the plan seed."""
    users = matrix.user_ids()
    if len(users) < 2:
        raise TooFewUsers("leave-one-user-out needs at least two users")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(users))
    return tuple(users[i] for i in order)


def split_louo(
    matrix: FeatureMatrix, seed: int, iteration: int
) -> tuple[tuple[int, ...], tuple[int, ...], str]:
    """Hold out every row of one user; cycle users in shuffled order."""
    order = user_order(matrix, seed)
    held_user = order[iteration % len(order)]
    test = tuple(i for i, u in enumerate(matrix.users) if u == held_user)
    train_rows = tuple(i for i, u in enumerate(matrix.users) if u != held_user)
    if not test:
        raise UnknownUser(f"no rows for user {held_user!r}")
    return train_rows, test, held_user


def _apportion(class_counts: list[tuple[Label, int]], fraction: float) -> dict[Label, int]:
    """Largest-remainder apportionment of the test quota across classes."""
    total = sum(c for _, c in class_counts)
    target = math.ceil(fraction * total)
    floors = {lab: math.floor(fraction * c) for lab, c in class_counts}
    remainders = sorted(
        class_counts,
        key=lambda item: (
            -(fraction * item[1] - floors[item[0]]),
            item[0].value,
        ),
    )
    short = target - sum(floors.values())
    for lab, count in remainders:
        if short <= 0:
            break
        if floors[lab] < count:
            floors[lab] += 1
            short -= 1
    return floors


def split_8020(
    matrix: FeatureMatrix, seed: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Stratified 80-20 split: ceil(0.2 N) test rows, per-class quotas."""
    by_class: dict[Label, list[int]] = {}
    for i, lab in enumerate(matrix.labels):
        by_class.setdefault(lab, []).append(i)
    ordered = sorted(by_class.items(), key=lambda kv: kv[0].value)
    quotas = _apportion([(lab, len(rows)) for lab, rows in ordered], 0.2)
    rng = np.random.default_rng(seed)
    test: list[int] = []
    for lab, rows in ordered:
        picked = rng.permutation(len(rows))[: quotas[lab]]
        test.extend(rows[j] for j in picked)
    test_set = set(test)
    train_rows = tuple(i for i in range(matrix.n_rows) if i not in test_set)
    return train_rows, tuple(sorted(test))


@dataclass(frozen=True)
class IterationResult:
    index: int
    held_user: str | None
    selected_members: tuple[int, ...] | None
    confusion: ConfusionMatrix
    accuracy: float


@dataclass(frozen=True)
class EvalReport:
    plan: EvalPlan
    iterations: tuple[IterationResult, ...]
    confusion: ConfusionMatrix
    mean_accuracy: float
    accuracy_sd: float
    report: MetricsReport


def _run_iteration(args) -> IterationResult:
    """One evaluation iteration; a plain function so worker processes can map it.

    ``fixed_columns`` carries a pre-selected subset when the plan selects
    once up front; otherwise selection (if any) reruns on this iteration's
    training split with an iteration-derived seed.
    """
    matrix, plan, index, fixed_columns, fixed_members = args
    try:
        if plan.scheme is Scheme.LOUO:
            train_rows, test_rows, held_user = split_louo(matrix, plan.seed, index)
        else:
            train_rows, test_rows = split_8020(matrix, plan.seed + index)
            held_user = None
        train_matrix = matrix.take(train_rows)
        test_matrix = matrix.take(test_rows)

        hp = replace(plan.hp, seed=plan.hp.seed + index)
        columns = fixed_columns
        members = fixed_members
        if columns is None and plan.selection is not None:
            spec = replace(plan.selection, seed=plan.selection.seed + index)
            chosen = select_features(train_matrix, spec, hp)
            columns = chosen.columns
            members = chosen.members

        model = train(train_matrix, hp, columns)
        predicted = model.predict(test_matrix)
        cm = ConfusionMatrix.from_pairs(predicted, test_matrix.labels)
        return IterationResult(
            index=index,
            held_user=held_user,
            selected_members=members,
            confusion=cm,
            accuracy=(cm.tp + cm.tn) / cm.total,
        )
    except Exception as exc:  # noqa: BLE001 - rewrapped with the iteration index
        raise IterationFailure(index, exc) from exc


def run_eval(matrix: FeatureMatrix, plan: EvalPlan) -> EvalReport:
    """Run every iteration and reduce in index order.

    With ``jobs > 1`` iterations run in worker processes; identical output
    is guaranteed because each iteration is seeded by its index alone and
    the reduction preserves index order.
    """
    preselected: tuple[int, ...] | None = None
    pre_members: tuple[int, ...] | None = None
    if plan.selection is not None and not plan.reselect_per_iteration:
        chosen = select_features(matrix, plan.selection, plan.hp)
        preselected = chosen.columns
        pre_members = chosen.members

    tasks = [(matrix, plan, i, preselected, pre_members) for i in range(plan.iterations)]
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            results = list(pool.map(_run_iteration, tasks))
    else:
        results = [_run_iteration(task) for task in tasks]

    total = ConfusionMatrix()
    for r in results:
        total = total + r.confusion
    accuracies = np.array([r.accuracy for r in results], dtype=np.float64)
    return EvalReport(
        plan=plan,
        iterations=tuple(results),
        confusion=total,
        mean_accuracy=float(np.mean(accuracies)),
        accuracy_sd=float(np.std(accuracies, ddof=0)),
        report=metrics(total),
    )
