"""Independent oracles the tests check the implementation against.

Everything here is written from first principles with different machinery
than the package uses (math.fsum accumulation, explicit loops, exact
active-set enumeration), so agreement is evidence, not tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# --- feature oracles (fsum / explicit loops) ------------------------------

def maxp_oracle(x) -> float:
    return float(max(float(v) for v in x))


def mav_oracle(x) -> float:
    return math.fsum(abs(float(v)) for v in x) / len(x)


def rms_oracle(x) -> float:
    return math.sqrt(math.fsum(float(v) ** 2 for v in x) / len(x))


def wl_oracle(x) -> float:
    xs = [float(v) for v in x]
    return math.fsum(abs(b - a) for a, b in zip(xs, xs[1:]))


def aac_oracle(x) -> float:
    return wl_oracle(x) / (len(x) - 1)


def dasdv_oracle(x) -> float:
    xs = [float(v) for v in x]
    return math.sqrt(
        math.fsum((b - a) ** 2 for a, b in zip(xs, xs[1:])) / (len(xs) - 1)
    )


def paaf_oracle(x) -> float:
    xs = [float(v) for v in x]
    mean = math.fsum(xs) / len(xs)
    count = 0
    for i in range(1, len(xs) - 1):
        if xs[i] > xs[i - 1] and xs[i] > xs[i + 1] and xs[i] > mean:
            count += 1
    return float(count)


def mavslp_oracle(x, sub_segments: int = 3) -> float:
    xs = [float(v) for v in x]
    base = len(xs) // sub_segments
    mavs = []
    for i in range(sub_segments):
        start = i * base
        end = start + base if i < sub_segments - 1 else len(xs)
        seg = xs[start:end]
        mavs.append(math.fsum(abs(v) for v in seg) / len(seg))
    diffs = [b - a for a, b in zip(mavs, mavs[1:])]
    return math.fsum(diffs) / len(diffs)


# --- dual objective (fsum, plain loops) -----------------------------------

def dual_objective_oracle(K, y, alpha) -> float:
    n = len(y)
    lin = math.fsum(float(a) for a in alpha)
    quad = math.fsum(
        float(alpha[i]) * float(alpha[j]) * float(y[i]) * float(y[j]) * float(K[i][j])
        for i in range(n)
        for j in range(n)
    )
    return lin - 0.5 * quad


# --- exact QP oracle ------------------------------------------------------

def qp_solve_exact(K, y, C):
    """Exact maximizer of the soft-margin dual by active-set enumeration.

    Every bound/free pattern over the n variables is tried: bounded
    variables are fixed at 0 or C, free ones come from the pattern's
    bordered KKT system (stationarity + the equality constraint). The
    global optimum satisfies its own pattern's system, so taking the
    feasible candidate with the largest objective is exact.

    Returns (alpha, objective, bias) — bias is the equality multiplier,
    None when the best candidate has no free variables.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    Q = (y[:, None] * y[None, :]) * K
    best_obj = -math.inf
    best_alpha = None
    best_bias = None
    for pattern in itertools.product((0, 1, 2), repeat=n):
        upper = [i for i, p in enumerate(pattern) if p == 1]
        free = [i for i, p in enumerate(pattern) if p == 2]
        alpha = np.zeros(n)
        alpha[upper] = C
        bias = None
        if free:
            m = len(free)
            A = np.zeros((m + 1, m + 1))
            A[:m, :m] = Q[np.ix_(free, free)]
            A[:m, m] = y[free]
            A[m, :m] = y[free]
            rhs = np.empty(m + 1)
            rhs[:m] = 1.0 - C * Q[np.ix_(free, upper)].sum(axis=1)
            rhs[m] = -C * y[upper].sum()
            try:
                solution = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            free_alpha = solution[:m]
            if np.any(free_alpha < -1e-9) or np.any(free_alpha > C + 1e-9):
                continue
            alpha[free] = np.clip(free_alpha, 0.0, C)
            bias = float(solution[m])
        if abs(float(y @ alpha)) > 1e-7:
            continue
        obj = float(np.sum(alpha) - 0.5 * (alpha @ Q @ alpha))
        if obj > best_obj:
            best_obj = obj
            best_alpha = alpha
            best_bias = bias
    return best_alpha, best_obj, best_bias


def qp_grid_max(K, y, C, step):
    """Best dual objective over a projected grid (a dense feasible sample).

    The first n-1 coordinates walk the grid; the last is solved from the
    equality constraint and kept only when it lands inside the box. Always
    a lower bound on the true optimum.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    Q = (y[:, None] * y[None, :]) * K
    steps = int(round(C / step))
    values = [i * step for i in range(steps + 1)]
    best = -math.inf
    alpha = np.zeros(n)
    for combo in itertools.product(values, repeat=n - 1):
        alpha[: n - 1] = combo
        last = -y[n - 1] * float(y[: n - 1] @ alpha[: n - 1])
        if last < -1e-12 or last > C + 1e-12:
            continue
        alpha[n - 1] = min(max(last, 0.0), C)
        obj = float(np.sum(alpha) - 0.5 * (alpha @ Q @ alpha))
        if obj > best:
            best = obj
    return best


def random_smo_instance(index: int):
    """A reproducible 6-point RBF instance with both classes present."""
    rng = np.random.default_rng(90_000 + index)
    n = 6
    X = rng.normal(0.0, 1.0, size=(n, 2))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    if np.all(y == y[0]):
        y[-1] = -y[0]
    gamma = float(rng.uniform(0.3, 1.5))
    C = (0.5, 1.0, 2.0)[index % 3]
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    K = np.exp(-gamma * sq)
    return K, y, C
