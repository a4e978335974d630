"""Pure-Python SMO solver for the soft-margin dual problem.

This is the fallback backend. The compiled core (``_smo_cy``) mirrors this
file operation-for-operation: same scalar arithmetic in the same order, same
PRNG, so both backends produce bit-identical iterates. Any change here must
be made in the ``.pyx`` twin as well.

Working-set selection follows the classic two-heuristic SMO scheme: an outer
loop alternating examine-all and non-bound-only passes, and a second-index
choice that maximises the error gap with seeded-random fallbacks.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_STEP_EPS = 1e-12


class SplitMix64:
    """Tiny deterministic PRNG shared verbatim with the compiled backend."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n


def _objective(alpha, y, K, n):
    lin = 0.0
    quad = 0.0
    for i in range(n):
        lin += alpha[i]
        for j in range(n):
            quad += alpha[i] * alpha[j] * y[i] * y[j] * K[i][j]
    return lin - 0.5 * quad


def _objective_with(alpha, y, K, n, i1, v1, i2, v2):
    """Dual objective with alpha[i1], alpha[i2] replaced by v1, v2."""
    lin = 0.0
    quad = 0.0
    for i in range(n):
        ai = v1 if i == i1 else (v2 if i == i2 else alpha[i])
        lin += ai
        for j in range(n):
            aj = v1 if j == i1 else (v2 if j == i2 else alpha[j])
            quad += ai * aj * y[i] * y[j] * K[i][j]
    return lin - 0.5 * quad


class _Solver:
    def __init__(self, K, y, C, tol, max_passes, seed, track_objective):
        self.n = len(y)
        self.K = np.asarray(K, dtype=np.float64).tolist()
        self.y = [float(v) for v in y]
        self.C = float(C)
        self.tol = float(tol)
        self.max_passes = int(max_passes)
        self.rng = SplitMix64(seed)
        self.alpha = [0.0] * self.n
        self.b = 0.0
        # f == 0 everywhere at the start, so E_i = f_i - y_i = -y_i.
        self.errors = [-v for v in self.y]
        self.trace = [] if track_objective else None

    def _recompute_errors(self):
        K, y, alpha, n = self.K, self.y, self.alpha, self.n
        for i in range(n):
            f = self.b
            for j in range(n):
                f += alpha[j] * y[j] * K[j][i]
            self.errors[i] = f - y[i]

    def _take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        K, y, alpha, C = self.K, self.y, self.alpha, self.C
        a1 = alpha[i1]
        a2 = alpha[i2]
        y1 = y[i1]
        y2 = y[i2]
        e1 = self.errors[i1]
        e2 = self.errors[i2]
        s = y1 * y2
        if s > 0.0:
            L = max(0.0, a1 + a2 - C)
            H = min(C, a1 + a2)
        else:
            L = max(0.0, a2 - a1)
            H = min(C, C + a2 - a1)
        if L == H:
            return False
        k11 = K[i1][i1]
        k12 = K[i1][i2]
        k22 = K[i2][i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2new = a2 + y2 * (e1 - e2) / eta
            if a2new < L:
                a2new = L
            elif a2new > H:
                a2new = H
        else:
            # Degenerate curvature: compare the full objective at both ends.
            obj_l = _objective_with(
                alpha, y, K, self.n, i1, a1 + s * (a2 - L), i2, L
            )
            obj_h = _objective_with(
                alpha, y, K, self.n, i1, a1 + s * (a2 - H), i2, H
            )
            if obj_l > obj_h + _STEP_EPS:
                a2new = L
            elif obj_h > obj_l + _STEP_EPS:
                a2new = H
            else:
                a2new = a2
        if abs(a2new - a2) < _STEP_EPS * (a2new + a2 + _STEP_EPS):
            return False
        a1new = a1 + s * (a2 - a2new)
        if a1new < 0.0:
            a1new = 0.0
        elif a1new > C:
            a1new = C
        d1 = a1new - a1
        d2 = a2new - a2
        b_old = self.b
        b1 = b_old - e1 - y1 * d1 * k11 - y2 * d2 * k12
        b2 = b_old - e2 - y1 * d1 * k12 - y2 * d2 * k22
        if 0.0 < a1new < C:
            b_new = b1
        elif 0.0 < a2new < C:
            b_new = b2
        else:
            b_new = (b1 + b2) / 2.0
        alpha[i1] = a1new
        alpha[i2] = a2new
        self.b = b_new
        db = b_new - b_old
        errors = self.errors
        row1 = K[i1]
        row2 = K[i2]
        for k in range(self.n):
            errors[k] += y1 * d1 * row1[k] + y2 * d2 * row2[k] + db
        if self.trace is not None:
            self.trace.append(_objective(alpha, y, K, self.n))
        return True

    def _examine(self, i2: int) -> int:
        alpha, errors, C, n = self.alpha, self.errors, self.C, self.n
        y2 = self.y[i2]
        a2 = alpha[i2]
        e2 = errors[i2]
        r2 = e2 * y2
        if not ((r2 < -self.tol and a2 < C) or (r2 > self.tol and a2 > 0.0)):
            return 0
        # Heuristic 1: the non-bound index with the largest |E1 - E2|,
        # first (smallest) index winning ties.
        best = -1
        best_gap = -1.0
        for i in range(n):
            if 0.0 < alpha[i] < C:
                gap = abs(errors[i] - e2)
                if gap > best_gap:
                    best_gap = gap
                    best = i
        if best >= 0 and self._take_step(best, i2):
            return 1
        # Heuristic 2: every non-bound index from a random starting point.
        start = self.rng.below(n)
        for d in range(n):
            i = (start + d) % n
            if 0.0 < alpha[i] < C and self._take_step(i, i2):
                return 1
        # Heuristic 3: every index from a random starting point.
        start = self.rng.below(n)
        for d in range(n):
            i = (start + d) % n
            if self._take_step(i, i2):
                return 1
        return 0

    def solve(self):
        passes = 0
        examine_all = True
        converged = False
        while passes < self.max_passes:
            passes += 1
            changed = 0
            if examine_all:
                # Full error refresh bounds the incremental-update drift.
                self._recompute_errors()
                for i in range(self.n):
                    changed += self._examine(i)
                if changed == 0:
                    converged = True
                    break
                examine_all = False
            else:
                for i in range(self.n):
                    if 0.0 < self.alpha[i] < self.C:
                        changed += self._examine(i)
                if changed == 0:
                    examine_all = True
        return (
            np.array(self.alpha, dtype=np.float64),
            float(self.b),
            passes,
            converged,
            self.trace,
        )


def smo_solve(K, y, C, tol, max_passes, seed, track_objective=False):
    """Solve the dual problem; see the package docstring for the contract."""
    solver = _Solver(K, y, C, tol, max_passes, seed, track_objective)
    return solver.solve()
