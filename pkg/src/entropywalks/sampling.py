"""Seeded samplers for down-up walks and Glauber dynamics.

The inner loops are numba-jitted. Subset walks complete the dropped elements
by exact enumeration over all supersets (no rejection), which is feasible for
k - ell <= 3. Ising walks cache the local-field vector J x and update it in
O(n) per flip, or in O(1) for rank-1 interactions via the cached <u, x>.

Every sampler seeds its own generator on entry, so a (seed, start, steps)
triple reproduces a run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ArityOutOfRange,
    InvalidStart,
    MoveBudgetExceeded,
    StateSpaceTooLarge,
)
from .subsets import SubsetDensity, mask_of

MOVE_BUDGET_DEFAULT = 3
TABLE_GROUND_LIMIT = 20


@dataclass(frozen=True)
class Trajectory:
    """Recorded walk: visited states as bitmasks at steps 0, thin, 2*thin, ...

    For spin states, bit i set means x_i = +1.
    """

    seed: int
    states: list
    step_count: int
    thin: int

    def to_csv(self, path, energies=None) -> None:
        """Dump rows of (step, hex bitmask[, energy])."""
        with open(path, "w") as fh:
            header = "step,state_hex" + (",energy" if energies is not None else "")
            fh.write(header + "\n")
            for j, m in enumerate(self.states):
                row = f"{j * self.thin},{m:#x}"
                if energies is not None:
                    row += f",{energies[j]!r}"
                fh.write(row + "\n")


@lru_cache(maxsize=1)
def _jit():
    """Compile the numba kernels once, on first use."""
    import numba

    @numba.njit(cache=True)
    def advance_subset(cur, n, k, d, wtab, steps):
        """Run `steps` k<->(k-d) down-up moves from bitmask `cur`."""
        elems = np.empty(max(k, 1), dtype=np.int64)
        comp = np.empty(n, dtype=np.int64)
        one = np.int64(1)
        for _ in range(steps):
            if d == 0:
                continue
            e = 0
            for b in range(n):
                if (cur >> b) & 1:
                    elems[e] = b
                    e += 1
            # drop d elements uniformly (partial Fisher-Yates)
            tmask = cur
            for a in range(d):
                j = a + np.random.randint(0, k - a)
                elems[a], elems[j] = elems[j], elems[a]
                tmask &= ~(one << elems[a])
            c = 0
            for b in range(n):
                if not ((tmask >> b) & 1):
                    comp[c] = b
                    c += 1
            # pass 1: total mass of supersets of the retained set
            total = 0.0
            if d == 1:
                for i1 in range(c):
                    total += wtab[tmask | (one << comp[i1])]
            elif d == 2:
                for i1 in range(c):
                    m1 = tmask | (one << comp[i1])
                    for i2 in range(i1 + 1, c):
                        total += wtab[m1 | (one << comp[i2])]
            else:
                for i1 in range(c):
                    m1 = tmask | (one << comp[i1])
                    for i2 in range(i1 + 1, c):
                        m2 = m1 | (one << comp[i2])
                        for i3 in range(i2 + 1, c):
                            total += wtab[m2 | (one << comp[i3])]
            # pass 2: select the completion proportionally to its weight
            target = np.random.random() * total
            acc = 0.0
            nxt = cur
            done = False
            if d == 1:
                for i1 in range(c):
                    m = tmask | (one << comp[i1])
                    w = wtab[m]
                    if w > 0.0:
                        nxt = m
                        acc += w
                        if acc >= target:
                            done = True
                            break
            elif d == 2:
                for i1 in range(c):
                    if done:
                        break
                    m1 = tmask | (one << comp[i1])
                    for i2 in range(i1 + 1, c):
                        m = m1 | (one << comp[i2])
                        w = wtab[m]
                        if w > 0.0:
                            nxt = m
                            acc += w
                            if acc >= target:
                                done = True
                                break
            else:
                for i1 in range(c):
                    if done:
                        break
                    m1 = tmask | (one << comp[i1])
                    for i2 in range(i1 + 1, c):
                        if done:
                            break
                        m2 = m1 | (one << comp[i2])
                        for i3 in range(i2 + 1, c):
                            m = m2 | (one << comp[i3])
                            w = wtab[m]
                            if w > 0.0:
                                nxt = m
                                acc += w
                                if acc >= target:
                                    done = True
                                    break
            cur = nxt  # rounding may leave done False; nxt is the last atom
        return cur

    @numba.njit(cache=True)
    def subset_walk(start_mask, n, k, d, wtab, steps, seed, thin, rec):
        np.random.seed(seed)
        cur = start_mask
        rec[0] = cur
        r = 1
        done = 0
        while done < steps:
            block = min(thin, steps - done)
            cur = advance_subset(cur, n, k, d, wtab, block)
            done += block
            if block == thin:
                rec[r] = cur
                r += 1
        return cur

    @numba.njit(cache=True)
    def subset_walk_batch(masks, n, k, d, wtab, steps, seed):
        np.random.seed(seed)
        for c in range(masks.shape[0]):
            masks[c] = advance_subset(masks[c], n, k, d, wtab, steps)

    @numba.njit(cache=True)
    def spin_mask(x):
        m = np.int64(0)
        for i in range(x.shape[0]):
            if x[i] > 0:
                m |= np.int64(1) << np.int64(i)
        return m

    @numba.njit(cache=True)
    def advance_glauber_dense(x, field, J, h, steps):
        """Glauber moves with the cached local-field vector field = J x."""
        n = x.shape[0]
        for _ in range(steps):
            i = np.random.randint(0, n)
            f = field[i] - J[i, i] * x[i] + h[i]
            p_plus = 1.0 / (1.0 + np.exp(-2.0 * f))
            new = np.int8(1) if np.random.random() < p_plus else np.int8(-1)
            if new != x[i]:
                delta = np.float64(new - x[i])
                for l in range(n):
                    field[l] += J[l, i] * delta
                x[i] = new

    @numba.njit(cache=True)
    def glauber_dense(x, J, h, steps, seed, thin, rec):
        np.random.seed(seed)
        field = J @ x.astype(np.float64)
        rec[0] = spin_mask(x)
        r = 1
        done = 0
        while done < steps:
            block = min(thin, steps - done)
            advance_glauber_dense(x, field, J, h, block)
            done += block
            if block == thin:
                rec[r] = spin_mask(x)
                r += 1

    @numba.njit(cache=True)
    def glauber_dense_batch(X, J, h, steps, seed):
        np.random.seed(seed)
        for c in range(X.shape[0]):
            x = X[c]
            field = J @ x.astype(np.float64)
            advance_glauber_dense(x, field, J, h, steps)

    @numba.njit(cache=True)
    def glauber_rank1(x, u, h, steps, seed):
        """Rank-1 J = u u^T Glauber; O(1) per step via the cached s = <u, x>."""
        np.random.seed(seed)
        n = x.shape[0]
        s = 0.0
        for i in range(n):
            s += u[i] * x[i]
        for _ in range(steps):
            i = np.random.randint(0, n)
            f = u[i] * (s - u[i] * x[i]) + h[i]
            p_plus = 1.0 / (1.0 + np.exp(-2.0 * f))
            new = np.int8(1) if np.random.random() < p_plus else np.int8(-1)
            if new != x[i]:
                s += u[i] * np.float64(new - x[i])
                x[i] = new
        return s

    return {
        "subset_walk": subset_walk,
        "subset_walk_batch": subset_walk_batch,
        "glauber_dense": glauber_dense,
        "glauber_dense_batch": glauber_dense_batch,
        "glauber_rank1": glauber_rank1,
    }


def weight_table(mu: SubsetDensity) -> np.ndarray:
    """Dense weight lookup over bitmasks; requires n <= TABLE_GROUND_LIMIT."""
    if mu.n > TABLE_GROUND_LIMIT:
        raise StateSpaceTooLarge(f"weight table needs n <= {TABLE_GROUND_LIMIT}")
    wtab = np.zeros(1 << mu.n)
    wtab[mu.masks.astype(np.int64)] = mu.weights
    return wtab


def _check_spin_start(start, n: int) -> np.ndarray:
    x = np.asarray(start, dtype=np.int8).copy()
    if x.shape != (n,) or not np.all(np.abs(x) == 1):
        raise InvalidStart("start must be a +/-1 vector of length n")
    return x


def simulate_walk(target, ell=None, start=None, steps: int = 0, seed: int = 0,
                  thin: int = 1, move_budget: int = MOVE_BUDGET_DEFAULT) -> Trajectory:
    """Run a seeded down-up walk (SubsetDensity) or Glauber dynamics (IsingModel).

    Subset walks enumerate the superset completion exactly; k - ell above
    `move_budget` is rejected. Records a bitmask every `thin` steps.
    """
    from .ising import IsingModel

    seed = int(seed) % (1 << 32)
    thin = max(int(thin), 1)
    if isinstance(target, SubsetDensity):
        if ell is None:
            raise ArityOutOfRange("subset walk needs the lower level ell")
        if not (0 <= ell <= target.k):
            raise ArityOutOfRange(f"need 0 <= ell <= k={target.k}")
        d = target.k - ell
        if d > move_budget:
            raise MoveBudgetExceeded(
                f"k - ell = {d} exceeds the enumeration budget {move_budget}")
        start = tuple(sorted(int(i) for i in start))
        if target.index_of(start) < 0:
            raise InvalidStart(f"start {start} not in the support")
        wtab = weight_table(target)
        rec = np.empty(steps // thin + 1, dtype=np.int64)
        _jit()["subset_walk"](np.int64(mask_of(start)), target.n, target.k, d,
                              wtab, steps, seed, thin, rec)
        return Trajectory(seed=seed, states=[int(m) for m in rec],
                          step_count=steps, thin=thin)
    if isinstance(target, IsingModel):
        if target.n > 62:
            raise StateSpaceTooLarge("recorded trajectories need n <= 62; "
                                     "use glauber_throughput for large models")
        x = _check_spin_start(start, target.n)
        rec = np.empty(steps // thin + 1, dtype=np.int64)
        _jit()["glauber_dense"](x, target.interaction, target.field, steps,
                                seed, thin, rec)
        return Trajectory(seed=seed, states=[int(m) for m in rec],
                          step_count=steps, thin=thin)
    raise InvalidStart(f"cannot walk on {type(target).__name__}")


def glauber_throughput(model, steps: int, seed: int = 0, start=None):
    """Run `steps` Glauber updates without recording; returns (final_x, seconds).

    Rank-1 models take the O(1)-per-step cached path. The jit warmup runs
    before timing starts.
    """
    import time

    seed = int(seed) % (1 << 32)
    n = model.n
    x = np.ones(n, dtype=np.int8) if start is None else _check_spin_start(start, n)
    kern = _jit()
    if model.rank1 is not None:
        u, _ = model.rank1
        kern["glauber_rank1"](x.copy(), u, model.field, 1, seed)
        t0 = time.perf_counter()
        kern["glauber_rank1"](x, u, model.field, steps, seed)
        return x, time.perf_counter() - t0
    rec = np.empty(1, dtype=np.int64)
    kern["glauber_dense"](x.copy(), model.interaction, model.field, 1, seed, 2, rec)
    t0 = time.perf_counter()
    kern["glauber_dense"](x, model.interaction, model.field, steps, seed,
                          steps + 1, rec)
    return x, time.perf_counter() - t0


def subset_chain_sample(mu: SubsetDensity, ell: int, start, steps: int,
                        n_chains: int, seed: int = 0) -> np.ndarray:
    """Final bitmasks of n_chains independent walks started at `start`."""
    d = mu.k - ell
    if d > MOVE_BUDGET_DEFAULT:
        raise MoveBudgetExceeded(f"k - ell = {d} exceeds the enumeration budget")
    start = tuple(sorted(int(i) for i in start))
    if mu.index_of(start) < 0:
        raise InvalidStart(f"start {start} not in the support")
    wtab = weight_table(mu)
    masks = np.full(n_chains, mask_of(start), dtype=np.int64)
    _jit()["subset_walk_batch"](masks, mu.n, mu.k, d, wtab, steps,
                                int(seed) % (1 << 32))
    return masks


def glauber_chain_sample(model, start, steps: int, n_chains: int,
                         seed: int = 0) -> np.ndarray:
    """Final states of n_chains independent Glauber chains from `start`."""
    x0 = _check_spin_start(start, model.n)
    X = np.tile(x0, (n_chains, 1))
    _jit()["glauber_dense_batch"](X, model.interaction, model.field, steps,
                                  int(seed) % (1 << 32))
    return X


def occupancy(masks: np.ndarray, mu: SubsetDensity) -> np.ndarray:
    """Empirical distribution of bitmask samples over the support of mu."""
    counts = np.zeros(mu.size)
    lookup = {int(m): j for j, m in enumerate(mu.masks)}
    for m in masks:
        counts[lookup[int(m)]] += 1
    return counts / counts.sum()
