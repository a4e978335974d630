"""Wrapper feature selection scored by cross-validated accuracy.

Candidates are subsets of the eight feature types (each type keeps its
column in every slot) or, at column granularity, raw matrix columns.
Exhaustive search enumerates all k-subsets; greedy forward search adds one
member at a time. ``AUTO`` chooses exhaustive when the subset count fits
the evaluation budget. All ties break toward the lexicographically
smallest subset, which enumeration order plus strict comparison provides
for free.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from enum import Enum, unique

from .errors import BudgetExceeded, KOutOfRange
from .features import FeatureKind, FeatureMatrix, columns_for_kinds
from .svm import CvResult, SvmHyperparams, cross_validate


@unique
class Strategy(str, Enum):
    EXHAUSTIVE = "exhaustive"
    GREEDY_FORWARD = "greedy-forward"
    AUTO = "auto"


@unique
class Granularity(str, Enum):
    FEATURE_TYPE = "feature-type"
    COLUMN = "column"


@dataclass(frozen=True)
class SelectionSpec:
    """What to search: subset size, strategy, granularity, budget, seed."""

    k: int = 5
    strategy: Strategy = Strategy.AUTO
    granularity: Granularity = Granularity.FEATURE_TYPE
    budget: int = 100_000
    seed: int = 0
    keep_log: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise KOutOfRange("k must be at least 1")
        if self.budget < 1:
            raise ValueError("budget must be positive")


@dataclass(frozen=True)
class SelectionResult:
    """Chosen subset with its score and the search's bookkeeping."""

    members: tuple[int, ...]
    columns: tuple[int, ...]
    granularity: Granularity
    strategy: Strategy
    cv_accuracy: float
    fold_accuracies: tuple[float, ...]
    evaluated: int
    log: tuple[tuple[tuple[int, ...], float], ...]

    def kinds(self) -> tuple[FeatureKind, ...]:
        if self.granularity is not Granularity.FEATURE_TYPE:
            raise ValueError("members are columns, not feature types")
        return tuple(FeatureKind(m) for m in self.members)


def _pool(matrix: FeatureMatrix, granularity: Granularity) -> tuple[int, ...]:
    if granularity is Granularity.FEATURE_TYPE:
        return tuple(int(k) for k in FeatureKind)
    return tuple(range(matrix.n_cols))


def _expand(members, matrix: FeatureMatrix, granularity: Granularity) -> tuple[int, ...]:
    if granularity is Granularity.FEATURE_TYPE:
        return columns_for_kinds(members, matrix.slot_count)
    return tuple(sorted(int(m) for m in members))


def subset_count(pool_size: int, k: int) -> int:
    return math.comb(pool_size, k)


def _score(matrix, members, granularity, hp) -> CvResult:
    return cross_validate(matrix, hp, columns=_expand(members, matrix, granularity))


def select_features(
    matrix: FeatureMatrix,
    spec: SelectionSpec = SelectionSpec(),
    hp: SvmHyperparams = SvmHyperparams(),
) -> SelectionResult:
    """Search for the best k-subset under the spec's strategy.

    Scoring always uses ``spec.seed`` (not ``hp.seed``) so selection is
    reproducible independently of how the surrounding evaluation is seeded.
    """
    pool = _pool(matrix, spec.granularity)
    if spec.k > len(pool):
        raise KOutOfRange(f"k={spec.k} exceeds the pool of {len(pool)} candidates")
    hp = replace(hp, seed=spec.seed)

    strategy = spec.strategy
    if strategy is Strategy.AUTO:
        if subset_count(len(pool), spec.k) <= spec.budget:
            strategy = Strategy.EXHAUSTIVE
        else:
            strategy = Strategy.GREEDY_FORWARD

    if strategy is Strategy.EXHAUSTIVE:
        total = subset_count(len(pool), spec.k)
        if total > spec.budget:
            raise BudgetExceeded(
                f"{total} subsets exceed the budget of {spec.budget}"
            )
        members, cv, evaluated, log = _exhaustive(matrix, pool, spec, hp)
    else:
        members, cv, evaluated, log = _greedy_forward(matrix, pool, spec, hp)

    return SelectionResult(
        members=members,
        columns=_expand(members, matrix, spec.granularity),
        granularity=spec.granularity,
        strategy=strategy,
        cv_accuracy=cv.mean_accuracy,
        fold_accuracies=cv.fold_accuracies,
        evaluated=evaluated,
        log=tuple(log),
    )


def _exhaustive(matrix, pool, spec, hp):
    best_members: tuple[int, ...] | None = None
    best_cv: CvResult | None = None
    evaluated = 0
    log = []
    # combinations() walks candidates in lexicographic order, so with a
    # strict > the first of any tied subsets (the smallest) is kept.
    for members in itertools.combinations(pool, spec.k):
        cv = _score(matrix, members, spec.granularity, hp)
        evaluated += 1
        if spec.keep_log:
            log.append((members, cv.mean_accuracy))
        if best_cv is None or cv.mean_accuracy > best_cv.mean_accuracy:
            best_members, best_cv = members, cv
    return best_members, best_cv, evaluated, log


def _greedy_forward(matrix, pool, spec, hp):
    chosen: list[int] = []
    best_cv: CvResult | None = None
    evaluated = 0
    log = []
    for _ in range(spec.k):
        round_best: int | None = None
        round_cv: CvResult | None = None
        for candidate in pool:
            if candidate in chosen:
                continue
            members = tuple(sorted(chosen + [candidate]))
            cv = _score(matrix, members, spec.granularity, hp)
            evaluated += 1
            if spec.keep_log:
                log.append((members, cv.mean_accuracy))
            if round_cv is None or cv.mean_accuracy > round_cv.mean_accuracy:
                round_best, round_cv = candidate, cv
        chosen.append(round_best)
        best_cv = round_cv
    return tuple(sorted(chosen)), best_cv, evaluated, log


def sweep_k(
    matrix: FeatureMatrix,
    ks,
    spec: SelectionSpec = SelectionSpec(),
    hp: SvmHyperparams = SvmHyperparams(),
) -> tuple[SelectionResult, ...]:
    """Run selection for each subset size; used by the CLI's sweep table."""
    return tuple(
        select_features(matrix, replace(spec, k=int(k)), hp) for k in ks
    )
