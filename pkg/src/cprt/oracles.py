"""Independent ground-truth oracles for cross-validating closed forms.

Two routes that share nothing with the root-finding pipeline:

* Kleene iteration of the expected-runtime transformer.  (L^n 0)(x0) is
  computed by dynamic programming over the window of states reachable in n
  steps; the sequence increases monotonically to the expected runtime, so
  every iterate is a certified lower bound.

* A seeded Monte-Carlo simulator.  Trial i consumes the uniform stream
  u(seed, step, i) produced by a counter-based hash, so results are bitwise
  reproducible, independent of trial execution order, and safe to
  parallelize.  Censored trials (step cap reached) are reported, never
  silently dropped.

A chi-squared two-sample test on termination-time histograms checks that a
program and its reduced walk terminate with identical distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import mpmath as mp
import numpy as np

from .errors import ResourceError
from .program import CpProgram, RandomWalkProgram
from .reduction import to_random_walk

__all__ = [
    "KleeneTable",
    "KleeneConvergence",
    "SimEstimate",
    "MatchReport",
    "kleene_iterate",
    "kleene_table",
    "kleene_converge",
    "simulate",
    "termination_time_test",
    "distribution_match",
]

DEFAULT_MAX_WINDOW = 1_000_000
# n * window cells below this bound stay in exact rational arithmetic.
EXACT_CELL_LIMIT = 20_000


@dataclass(frozen=True)
class KleeneTable:
    iterations: int
    values: dict[int, object]  # state -> lower bound (Fraction or mpf); 0 for x <= 0
    arithmetic: str  # "exact" | "float"


@dataclass(frozen=True)
class KleeneConvergence:
    value: object
    iterations: int
    last_increment: object
    converged: bool
    arithmetic: str


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    half_width_95: float
    trials: int
    censored: int
    seed: int
    step_cap: int


@dataclass(frozen=True)
class MatchReport:
    statistic: float
    dof: int
    p_value: float
    bins: int
    trials: int
    censored_a: int
    censored_b: int
    passed: bool


def _window_or_raise(hi: int, max_window: int) -> None:
    if hi > max_window:
        raise ResourceError(f"iteration window of {hi} states exceeds the limit {max_window}")


def _kleene_sweep(rw: RandomWalkProgram, x0: int, n: int, exact: bool,
                  full_window: bool = False, max_window: int = DEFAULT_MAX_WINDOW):
    """Core DP.  States x <= 0 contribute 0, as does the reset target d <= 0.

    With the window sized x0 + n*m, boundary truncation cannot propagate back
    to x0 within n iterations (influence travels downward at most m states
    per iteration), so the value at x0 is exactly (L^n 0)(x0).  Returns the
    final window values plus the history of iterates at x0.
    """
    zero = Fraction(0) if exact else mp.mpf(0)
    if x0 <= 0:
        return [zero], [zero] * n, 0
    hi = x0 + n * rw.m
    _window_or_raise(hi, max_window)
    if exact:
        one = Fraction(1)
        probs = [(j, p) for j, p in rw.probs.items() if p > 0]
    else:
        one = mp.mpf(1)
        probs = [(j, mp.mpf(p.numerator) / mp.mpf(p.denominator))
                 for j, p in rw.probs.items() if p > 0]
    values = [zero] * (hi + 1)  # index 0 unused (state x=0 is a guard violation)
    history = []
    for t in range(1, n + 1):
        top = hi if full_window else x0 + (n - t) * rw.m
        nxt = [zero] * (hi + 1)
        for x in range(1, top + 1):
            acc = one
            for j, p in probs:
                y = x + j
                if 1 <= y <= hi:
                    acc += p * values[y]
            nxt[x] = acc
        values = nxt
        history.append(values[x0])
    return values, history, hi


def _choose_exact(rw: RandomWalkProgram, x0: int, n: int, mode: str) -> bool:
    if mode == "exact":
        return True
    if mode == "float":
        return False
    return n * (x0 + n * rw.m + 1) <= EXACT_CELL_LIMIT


def kleene_iterate(rw: RandomWalkProgram, x0: int, n: int, *, precision: int = 50,
                   mode: str = "auto", max_window: int = DEFAULT_MAX_WINDOW):
    """(L^n 0)(x0): a certified lower bound on rt(x0), exact in rational mode."""
    if n < 1:
        raise ValueError("n must be >= 1")
    exact = _choose_exact(rw, x0, n, mode)
    with mp.workdps(precision):
        values, _, _ = _kleene_sweep(rw, x0, n, exact, max_window=max_window)
        return values[x0] if x0 > 0 else values[0]


def kleene_table(rw: RandomWalkProgram, x0: int, n: int, *, precision: int = 50,
                 mode: str = "auto", max_window: int = DEFAULT_MAX_WINDOW) -> KleeneTable:
    """Exact iterates for every window state (full window kept all n rounds)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    exact = _choose_exact(rw, x0, n, mode)
    with mp.workdps(precision):
        values, _, hi = _kleene_sweep(rw, x0, n, exact, full_window=True,
                                      max_window=max_window)
        if x0 <= 0:
            table = {x0: values[0]}
        else:
            table = {x: values[x] for x in range(1, hi + 1)}
        return KleeneTable(iterations=n, values=table,
                           arithmetic="exact" if exact else "float")


def _escape_rate(rw: RandomWalkProgram) -> float | None:
    """Bound r < 1 with P(walk ever climbs h states above its start) <= r^h.

    Two routes: the Lundberg root w > 1 of sum_j p_j w^j = 1 - p' (w^x is a
    supermartingale while the walk is alive, so r = 1/w works) exists when
    the step distribution itself drifts down; and with direct termination
    every step survives only with probability 1 - p', while climbing h needs
    at least h/m live steps, giving r = (1-p')^(1/m).  Returns the smaller
    available bound, or None when the walk cannot climb at all or no bound
    applies.
    """
    if rw.m == 0:
        return None
    candidates = []
    if rw.direct_prob > 0:
        candidates.append(float(1 - rw.direct_prob) ** (1.0 / rw.m))
    probs = [(j, float(p)) for j, p in rw.probs.items() if p > 0]
    target = 1.0 - float(rw.direct_prob)

    def g(w: float) -> float:
        return sum(p * w ** j for j, p in probs) - target

    # g(1) = 0 always; a second root w > 1 exists iff g decreases at 1,
    # i.e. the step distribution drifts down.  Step off w = 1 and bracket.
    lo = 1.0 + 1e-9
    if g(lo) < 0:
        hi = 2.0
        for _ in range(200):
            if g(hi) > 0:
                break
            lo, hi = hi, hi * 2
        else:
            hi = None
        if hi is not None:
            for _ in range(200):
                mid = (lo + hi) / 2
                if g(mid) > 0:
                    hi = mid
                else:
                    lo = mid
            candidates.append(1.0 / hi)
    return min(candidates) if candidates else None


def kleene_converge(rw: RandomWalkProgram, x0: int, *, increment_tol=1e-6,
                    value_tol=None, max_n: int = 100_000, precision: int = 30,
                    max_window: int = DEFAULT_MAX_WINDOW) -> KleeneConvergence:
    """Iterate until the per-step increment at x0 drops below increment_tol.

    The increment sequence of a PAST walk decays geometrically; when
    value_tol is given, iteration additionally continues until the remaining
    tail, bounded by increment * rho/(1 - rho) with rho estimated from the
    last increments, is below value_tol/2 -- the standard stopping rule for
    linearly converging value iteration.

    The state window is capped where the Lundberg bound puts the escape
    probability far below the tolerances, which keeps slowly-mixing walks
    (drift close to 0) affordable; the iterates remain certified lower
    bounds because truncation only removes positive contributions.
    """
    if x0 <= 0:
        return KleeneConvergence(value=mp.mpf(0), iterations=0, last_increment=mp.mpf(0),
                                 converged=True, arithmetic="float")
    goal = min(increment_tol, value_tol if value_tol else increment_tol)
    rate = _escape_rate(rw)
    hi = x0 + max_n * rw.m
    if rate is not None and 0 < rate < 1:
        height = int(math.ceil((math.log(goal * 1e-3) - math.log(max_n)) / math.log(rate)))
        hi = min(hi, x0 + max(height, rw.m + 1))
    _window_or_raise(hi, max_window)
    with mp.workdps(precision):
        inc_tol = mp.mpf(increment_tol)
        val_tol = mp.mpf(value_tol) if value_tol else None
        probs = [(j, mp.mpf(p.numerator) / mp.mpf(p.denominator))
                 for j, p in rw.probs.items() if p > 0]
        one = mp.mpf(1)
        zero = mp.mpf(0)
        values = [zero] * (hi + 1)
        prev = zero
        recent: list = []
        inc = one
        n = 0
        while n < max_n:
            n += 1
            nxt = [zero] * (hi + 1)
            for x in range(1, hi + 1):
                acc = one
                for j, p in probs:
                    y = x + j
                    if 1 <= y <= hi:
                        acc += p * values[y]
                nxt[x] = acc
            values = nxt
            inc = values[x0] - prev
            prev = values[x0]
            recent.append(inc)
            if len(recent) > 24:
                recent.pop(0)
            if inc < inc_tol:
                if val_tol is None:
                    return KleeneConvergence(value=values[x0], iterations=n,
                                             last_increment=inc, converged=True,
                                             arithmetic="float")
                if len(recent) == 24 and recent[0] > 0:
                    rho = (recent[-1] / recent[0]) ** (one / 23)
                    if rho < 1:
                        tail = inc * rho / (1 - rho)
                        if tail < val_tol / 2:
                            return KleeneConvergence(value=values[x0], iterations=n,
                                                     last_increment=inc, converged=True,
                                                     arithmetic="float")
                if inc == 0:
                    return KleeneConvergence(value=values[x0], iterations=n,
                                             last_increment=inc, converged=True,
                                             arithmetic="float")
        return KleeneConvergence(value=values[x0], iterations=n, last_increment=inc,
                                 converged=False, arithmetic="float")


# ---------------------------------------------------------------------------
# Monte-Carlo simulation
# ---------------------------------------------------------------------------

_M1 = 0x9E3779B97F4A7C15
_M2 = 0xBF58476D1CE4E5B9
_M3 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def _mix_scalar(z: int) -> int:
    z = (z + _M1) & _MASK
    z = ((z ^ (z >> 30)) * _M2) & _MASK
    z = ((z ^ (z >> 27)) * _M3) & _MASK
    return z ^ (z >> 31)


def _step_key(seed: int, step: int) -> int:
    return _mix_scalar(_mix_scalar(seed & _MASK) ^ ((step * _M1) & _MASK))


def _uniforms(seed: int, step: int, trial_ids: np.ndarray) -> np.ndarray:
    """u(seed, step, trial) in [0, 1): a pure function of its arguments, so
    any subset of trials can be stepped in any order with identical results."""
    key = np.uint64(_step_key(seed, step))
    z = trial_ids * np.uint64(_M3) + key
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M2)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M3)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def _tables(prog: CpProgram):
    """Guard vector, branch deltas, and the cumulative probability table.

    The table comes from the exact rationals, converted once to binary
    floats; a tie of the uniform draw with a bin edge picks the lower-index
    branch.  The reset, when present, occupies the last bin.
    """
    a = np.asarray(prog.guard_a, dtype=np.int64)
    deltas = [br.delta for br in prog.branches]
    cum_exact = []
    acc = Fraction(0)
    for br in prog.branches:
        acc += br.prob
        cum_exact.append(acc)
    reset_index = -1
    target = (0,) * prog.arity
    if prog.reset is not None:
        reset_index = len(cum_exact)
        cum_exact.append(acc + prog.reset.prob)
        target = prog.reset.target
        deltas = deltas + [(0,) * prog.arity]
    cum = np.asarray([float(c) for c in cum_exact], dtype=np.float64)
    cum[-1] = 1.0
    return a, np.asarray(deltas, dtype=np.int64), cum, reset_index, \
        np.asarray(target, dtype=np.int64)


def _simulate_times_vectorized(x0, a, b, deltas, cum, reset_index, target,
                               trials, step_cap, seed):
    state = np.tile(np.asarray(x0, dtype=np.int64), (trials, 1))
    times = np.zeros(trials, dtype=np.int64)
    ids = np.arange(trials, dtype=np.uint64)
    active = np.flatnonzero(state @ a > b)
    step = 0
    while active.size and step < step_cap:
        u = _uniforms(seed, step, ids[active])
        chosen = np.searchsorted(cum, u, side="left")
        times[active] += 1
        if reset_index >= 0:
            hit_reset = chosen == reset_index
            inc = active[~hit_reset]
            state[inc] += deltas[chosen[~hit_reset]]
            state[active[hit_reset]] = target
        else:
            state[active] += deltas[chosen]
        still = (state[active] @ a) > b
        active = active[still]
        step += 1
    censored = np.zeros(trials, dtype=bool)
    censored[active] = True
    return times, censored


def _make_kernel():
    """Per-trial jit kernel; consumes the identical u(seed, step, trial)
    stream as the vectorized path, so both produce the same trajectories."""
    from numba import njit

    u64 = np.uint64
    m1, m2, m3 = u64(_M1), u64(_M2), u64(_M3)

    @njit(cache=True)
    def kernel(x0, a, b, deltas, cum, reset_index, target, trials, step_cap, seed):
        r = x0.shape[0]
        times = np.zeros(trials, dtype=np.int64)
        censored = np.zeros(trials, dtype=np.bool_)
        state = np.zeros(r, dtype=np.int64)
        seed_mix = u64(seed)
        seed_mix = (seed_mix + m1)
        seed_mix = (seed_mix ^ (seed_mix >> u64(30))) * m2
        seed_mix = (seed_mix ^ (seed_mix >> u64(27))) * m3
        seed_mix = seed_mix ^ (seed_mix >> u64(31))
        for i in range(trials):
            for j in range(r):
                state[j] = x0[j]
            t = 0
            while True:
                s = np.int64(0)
                for j in range(r):
                    s += a[j] * state[j]
                if s <= b:
                    break
                if t >= step_cap:
                    censored[i] = True
                    break
                key = seed_mix ^ (u64(t) * m1)
                key = (key + m1)
                key = (key ^ (key >> u64(30))) * m2
                key = (key ^ (key >> u64(27))) * m3
                key = key ^ (key >> u64(31))
                z = u64(i) * m3 + key
                z = (z ^ (z >> u64(30))) * m2
                z = (z ^ (z >> u64(27))) * m3
                z = z ^ (z >> u64(31))
                u = np.float64(z >> u64(11)) * (2.0 ** -53)
                chosen = 0
                while chosen < cum.shape[0] - 1 and cum[chosen] < u:
                    chosen += 1
                if chosen == reset_index:
                    for j in range(r):
                        state[j] = target[j]
                else:
                    for j in range(r):
                        state[j] += deltas[chosen, j]
                t += 1
            times[i] = t
        return times, censored

    return kernel


_KERNEL = None


def _simulate_times(prog: CpProgram, x0: Sequence[int], trials: int, step_cap: int,
                    seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Termination times per trial and a mask of censored (still running) trials."""
    global _KERNEL
    a, deltas, cum, reset_index, target = _tables(prog)
    b = np.int64(prog.guard_b)
    start = np.asarray(x0, dtype=np.int64)
    if _KERNEL is None:
        try:
            _KERNEL = _make_kernel()
        except ImportError:
            _KERNEL = False
    if _KERNEL:
        return _KERNEL(start, a, b, deltas, cum, np.int64(reset_index), target,
                       trials, step_cap, np.uint64(seed & _MASK))
    return _simulate_times_vectorized(start, a, b, deltas, cum, reset_index, target,
                                      trials, step_cap, seed)


def _as_cp(prog: Union[CpProgram, RandomWalkProgram]) -> CpProgram:
    return prog.as_cp_program() if isinstance(prog, RandomWalkProgram) else prog


def simulate(prog: Union[CpProgram, RandomWalkProgram], x0, trials: int, step_cap: int = 1_000_000,
             seed: int = 0) -> SimEstimate:
    """Mean termination time with a 95% normal-approximation half-width.

    x0 is an integer for walks and a vector for multivariate programs.
    Censored trials are excluded from the estimate and reported.
    """
    if trials < 1 or step_cap < 1:
        raise ValueError("trials and step_cap must be >= 1")
    cp = _as_cp(prog)
    start = (int(x0),) if isinstance(x0, (int, np.integer)) else tuple(int(v) for v in x0)
    if len(start) != cp.arity:
        raise ValueError(f"initial state arity {len(start)} != program arity {cp.arity}")
    times, censored = _simulate_times(cp, start, trials, step_cap, seed)
    kept = times[~censored]
    if kept.size == 0:
        return SimEstimate(mean=math.nan, half_width_95=math.nan, trials=trials,
                           censored=int(censored.sum()), seed=seed, step_cap=step_cap)
    mean = float(kept.mean())
    if kept.size > 1:
        half = 1.96 * float(kept.std(ddof=1)) / math.sqrt(kept.size)
    else:
        half = 0.0
    return SimEstimate(mean=mean, half_width_95=half, trials=trials,
                       censored=int(censored.sum()), seed=seed, step_cap=step_cap)


def _chi2_sf(stat: float, dof: int) -> float:
    if dof <= 0:
        return 1.0
    return float(mp.gammainc(mp.mpf(dof) / 2, mp.mpf(stat) / 2, mp.inf, regularized=True))


def termination_time_test(prog_a, x0_a, prog_b, x0_b, trials: int = 100_000,
                          step_cap: int = 1_000_000, seed: int = 0,
                          alpha: float = 0.001) -> MatchReport:
    """Two-sample chi-squared homogeneity test on termination-time histograms.

    Adjacent raw bins merge until every pooled expected count is at least 5.
    Identical histograms give statistic 0 and p-value 1.
    """
    cp_a, cp_b = _as_cp(prog_a), _as_cp(prog_b)
    sa = (int(x0_a),) if isinstance(x0_a, (int, np.integer)) else tuple(int(v) for v in x0_a)
    sb = (int(x0_b),) if isinstance(x0_b, (int, np.integer)) else tuple(int(v) for v in x0_b)
    ta, ca = _simulate_times(cp_a, sa, trials, step_cap, seed)
    tb, cb = _simulate_times(cp_b, sb, trials, step_cap, _mix_scalar(seed ^ 0x5DEECE66D))
    ta, tb = ta[~ca], tb[~cb]
    if ta.size == 0 or tb.size == 0:
        return MatchReport(statistic=math.inf, dof=0, p_value=0.0, bins=0, trials=trials,
                           censored_a=int(ca.sum()), censored_b=int(cb.sum()), passed=False)
    hi = int(max(ta.max(initial=0), tb.max(initial=0)))
    counts_a = np.bincount(ta, minlength=hi + 1).astype(np.float64)
    counts_b = np.bincount(tb, minlength=hi + 1).astype(np.float64)
    na, nb = counts_a.sum(), counts_b.sum()
    total = na + nb

    merged: list[tuple[float, float]] = []
    acc_a = acc_b = 0.0
    for va, vb in zip(counts_a, counts_b):
        acc_a += va
        acc_b += vb
        pooled = acc_a + acc_b
        if min(na, nb) * pooled / total >= 5.0:
            merged.append((acc_a, acc_b))
            acc_a = acc_b = 0.0
    if acc_a or acc_b:
        if merged:
            la, lb = merged[-1]
            merged[-1] = (la + acc_a, lb + acc_b)
        else:
            merged.append((acc_a, acc_b))

    stat = 0.0
    for va, vb in merged:
        pooled = va + vb
        ea = na * pooled / total
        eb = nb * pooled / total
        stat += (va - ea) ** 2 / ea + (vb - eb) ** 2 / eb
    dof = len(merged) - 1
    p = _chi2_sf(stat, dof)
    return MatchReport(statistic=stat, dof=dof, p_value=p, bins=len(merged), trials=trials,
                       censored_a=int(ca.sum()), censored_b=int(cb.sum()), passed=p >= alpha)


def distribution_match(prog: CpProgram, x0: Sequence[int], trials: int = 100_000,
                       step_cap: int = 1_000_000, seed: int = 0,
                       alpha: float = 0.001) -> MatchReport:
    """Check that the program and its reduced walk terminate identically in
    distribution: simulate the program at x0 and the walk at rdw(x0) with
    independent seeds and compare histograms."""
    walk, rdw = to_random_walk(prog)
    return termination_time_test(prog, tuple(x0), walk, rdw.apply(tuple(x0)),
                                 trials=trials, step_cap=step_cap, seed=seed, alpha=alpha)
