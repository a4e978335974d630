# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SMO core.

Operation-for-operation twin of ``smo_py``: same scalar arithmetic in the
same order, same PRNG, so both backends produce identical results. Any
change here must be mirrored in the pure-Python file. Compiled with FP
contraction disabled so the arithmetic stays IEEE-identical to CPython's.
"""

import numpy as np

from libc.math cimport fabs

cdef double _STEP_EPS = 1e-12

cdef unsigned long long _GOLD = <unsigned long long> 0x9E3779B97F4A7C15
cdef unsigned long long _MIX1 = <unsigned long long> 0xBF58476D1CE4E5B9
cdef unsigned long long _MIX2 = <unsigned long long> 0x94D049BB133111EB


cdef class _Rng:
    cdef unsigned long long state

    def __cinit__(self, unsigned long long seed):
        self.state = seed

    cdef unsigned long long _next(self):
        cdef unsigned long long z
        self.state = self.state + _GOLD
        z = self.state
        z = (z ^ (z >> 30)) * _MIX1
        z = (z ^ (z >> 27)) * _MIX2
        return z ^ (z >> 31)

    cdef long below(self, long n):
        return <long> (self._next() % (<unsigned long long> n))


cdef class _Solver:
    cdef double[:, ::1] K
    cdef double[::1] y
    cdef double[::1] alpha
    cdef double[::1] errors
    cdef object alpha_arr
    cdef double C, tol, b
    cdef long n, max_passes
    cdef _Rng rng
    cdef list trace
    cdef bint track

    def __init__(self, K, y, C, tol, max_passes, seed, track_objective):
        cdef long i
        self.n = y.shape[0]
        self.K = np.ascontiguousarray(K, dtype=np.float64)
        self.y = np.ascontiguousarray(y, dtype=np.float64)
        self.C = C
        self.tol = tol
        self.max_passes = max_passes
        self.rng = _Rng(<unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF))
        self.alpha_arr = np.zeros(self.n, dtype=np.float64)
        self.alpha = self.alpha_arr
        self.errors = np.empty(self.n, dtype=np.float64)
        for i in range(self.n):
            self.errors[i] = -self.y[i]
        self.b = 0.0
        self.track = bool(track_objective)
        self.trace = [] if self.track else None

    cdef double _objective(self):
        cdef double lin = 0.0
        cdef double quad = 0.0
        cdef long i, j
        for i in range(self.n):
            lin += self.alpha[i]
            for j in range(self.n):
                quad += self.alpha[i] * self.alpha[j] * self.y[i] * self.y[j] * self.K[i, j]
        return lin - 0.5 * quad

    cdef double _objective_with(self, long i1, double v1, long i2, double v2):
        cdef double lin = 0.0
        cdef double quad = 0.0
        cdef double ai, aj
        cdef long i, j
        for i in range(self.n):
            ai = v1 if i == i1 else (v2 if i == i2 else self.alpha[i])
            lin += ai
            for j in range(self.n):
                aj = v1 if j == i1 else (v2 if j == i2 else self.alpha[j])
                quad += ai * aj * self.y[i] * self.y[j] * self.K[i, j]
        return lin - 0.5 * quad

    cdef void _recompute_errors(self):
        cdef double f
        cdef long i, j
        for i in range(self.n):
            f = self.b
            for j in range(self.n):
                f += self.alpha[j] * self.y[j] * self.K[j, i]
            self.errors[i] = f - self.y[i]

    cdef bint _take_step(self, long i1, long i2):
        cdef double a1, a2, y1, y2, e1, e2, s, L, H, t
        cdef double k11, k12, k22, eta, a2new, a1new
        cdef double obj_l, obj_h, d1, d2, b_old, b1, b2, b_new, db
        cdef long k
        if i1 == i2:
            return False
        a1 = self.alpha[i1]
        a2 = self.alpha[i2]
        y1 = self.y[i1]
        y2 = self.y[i2]
        e1 = self.errors[i1]
        e2 = self.errors[i2]
        s = y1 * y2
        if s > 0.0:
            t = a1 + a2 - self.C
            L = t if t > 0.0 else 0.0
            t = a1 + a2
            H = t if t < self.C else self.C
        else:
            t = a2 - a1
            L = t if t > 0.0 else 0.0
            t = self.C + a2 - a1
            H = t if t < self.C else self.C
        if L == H:
            return False
        k11 = self.K[i1, i1]
        k12 = self.K[i1, i2]
        k22 = self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2new = a2 + y2 * (e1 - e2) / eta
            if a2new < L:
                a2new = L
            elif a2new > H:
                a2new = H
        else:
            obj_l = self._objective_with(i1, a1 + s * (a2 - L), i2, L)
            obj_h = self._objective_with(i1, a1 + s * (a2 - H), i2, H)
            if obj_l > obj_h + _STEP_EPS:
                a2new = L
            elif obj_h > obj_l + _STEP_EPS:
                a2new = H
            else:
                a2new = a2
        if fabs(a2new - a2) < _STEP_EPS * (a2new + a2 + _STEP_EPS):
            return False
        a1new = a1 + s * (a2 - a2new)
        if a1new < 0.0:
            a1new = 0.0
        elif a1new > self.C:
            a1new = self.C
        d1 = a1new - a1
        d2 = a2new - a2
        b_old = self.b
        b1 = b_old - e1 - y1 * d1 * k11 - y2 * d2 * k12
        b2 = b_old - e2 - y1 * d1 * k12 - y2 * d2 * k22
        if 0.0 < a1new < self.C:
            b_new = b1
        elif 0.0 < a2new < self.C:
            b_new = b2
        else:
            b_new = (b1 + b2) / 2.0
        self.alpha[i1] = a1new
        self.alpha[i2] = a2new
        self.b = b_new
        db = b_new - b_old
        for k in range(self.n):
            self.errors[k] = self.errors[k] + (
                y1 * d1 * self.K[i1, k] + y2 * d2 * self.K[i2, k] + db
            )
        if self.track:
            self.trace.append(self._objective())
        return True

    cdef int _examine(self, long i2):
        cdef double y2, a2, e2, r2, gap, best_gap
        cdef long best, i, d, start
        y2 = self.y[i2]
        a2 = self.alpha[i2]
        e2 = self.errors[i2]
        r2 = e2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0.0)):
            return 0
        best = -1
        best_gap = -1.0
        for i in range(self.n):
            if 0.0 < self.alpha[i] < self.C:
                gap = fabs(self.errors[i] - e2)
                if gap > best_gap:
                    best_gap = gap
                    best = i
        if best >= 0 and self._take_step(best, i2):
            return 1
        start = self.rng.below(self.n)
        for d in range(self.n):
            i = (start + d) % self.n
            if 0.0 < self.alpha[i] < self.C and self._take_step(i, i2):
                return 1
        start = self.rng.below(self.n)
        for d in range(self.n):
            i = (start + d) % self.n
            if self._take_step(i, i2):
                return 1
        return 0

    def solve(self):
        cdef long passes = 0
        cdef long i, changed
        cdef bint examine_all = True
        cdef bint converged = False
        while passes < self.max_passes:
            passes += 1
            changed = 0
            if examine_all:
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
            np.asarray(self.alpha_arr).copy(),
            float(self.b),
            int(passes),
            bool(converged),
            self.trace,
        )


def smo_solve(K, y, C, tol, max_passes, seed, track_objective=False):
    """Solve the dual problem; same contract as the pure backend."""
    solver = _Solver(K, y, C, tol, max_passes, seed, track_objective)
    return solver.solve()
