"""Minimum-weight column selection for interval rows.

Rows are inclusive index intervals [lo, hi] over columns 1..n (frames of a
ladder); a selection of columns covers a row when it contains at least one
column inside the row's interval. Because every row is an interval, the
row-column incidence matrix has consecutive ones, and the minimum-weight
cover is a shortest path over column indices: walking the selected columns
in increasing order (with virtual endpoints 0 and n+1), no step may jump
over a row's entire interval.

Two safe reductions shrink instances first. R1 drops any row whose interval
contains another row's interval (covering the smaller row covers the larger
one for free). R2 drops a column whose covered-row set is contained in that
of a no-more-expensive column. Ties are broken toward the lower index, so a
pair of mutually dominating rows or columns loses exactly one member.

brute_force enumerates all subsets and is kept deliberately independent of
the shortest-path solver; the two must agree and tests hold them to that.
"""

from __future__ import annotations

import json
import math
import warnings
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

_INF = float("inf")


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

def _normalize_rows(rows) -> tuple[tuple[int, int, int], ...]:
    out = []
    for row in rows:
        if len(row) == 2:
            lo, hi = row
            mult = 1
        else:
            lo, hi, mult = row
        out.append((int(lo), int(hi), int(mult)))
    return tuple(out)


@dataclass(frozen=True)
class WeightedInstance:
    """Covering instance: n columns with positive weights, interval rows.

    Rows are (lo, hi, multiplicity); plain (lo, hi) pairs are accepted and
    get multiplicity 1. Multiplicity never affects the optimum (covering a
    row once is covering it), it only preserves pixel accounting.
    """

    n: int
    rows: tuple[tuple[int, int, int], ...]
    weights: tuple[float, ...]

    def __init__(self, n: int, rows, weights) -> None:
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "rows", _normalize_rows(rows))
        object.__setattr__(self, "weights", tuple(float(w) for w in weights))
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if len(self.weights) != self.n:
            raise ValueError(f"need {self.n} weights, got {len(self.weights)}")
        if any(not (w > 0.0) or not math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be positive and finite")
        for lo, hi, mult in self.rows:
            if not (1 <= lo <= hi <= self.n):
                raise ValueError(f"row ({lo}, {hi}) out of range for n={self.n}")
            if mult < 1:
                raise ValueError("row multiplicity must be at least 1")

    @classmethod
    def from_coverage(cls, coverage, weights) -> "WeightedInstance":
        """Build from a classify.CoverageInstance and per-column weights."""
        return cls(n=coverage.n, rows=coverage.rows, weights=weights)


@dataclass(frozen=True)
class Selection:
    """Chosen columns (1-based, strictly increasing) and their total weight."""

    columns: tuple[int, ...]
    total_cost: float

    def __post_init__(self) -> None:
        cols = tuple(int(c) for c in self.columns)
        if any(b <= a for a, b in zip(cols, cols[1:])):
            raise ValueError("columns must be strictly increasing")
        if any(c < 1 for c in cols):
            raise ValueError("columns are 1-based")
        if not (self.total_cost >= 0.0) or not math.isfinite(self.total_cost):
            raise ValueError("total_cost must be a non-negative finite number")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "total_cost", float(self.total_cost))

    def to_json_dict(self) -> dict:
        return {"columns": list(self.columns), "total_cost": self.total_cost}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Selection":
        return cls(columns=tuple(doc["columns"]), total_cost=float(doc["total_cost"]))


def save_selection(path, sel: Selection) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sel.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_selection(path) -> Selection:
    with open(path, "r", encoding="utf-8") as fh:
        return Selection.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class ReductionTrace:
    """What reduce() removed and why, in original coordinates.

    removed_rows pairs each dropped row interval with the surviving witness
    interval contained in it; removed_columns pairs each dropped column with
    the witness column that dominated it (both 1-based original indices);
    kept_columns lists the survivors in ascending original order. Witnesses
    are valid at the moment of removal; a witness may itself be removed by a
    later step.
    """

    removed_rows: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    removed_columns: tuple[tuple[int, int], ...]
    kept_columns: tuple[int, ...]

    def map_selection(self, sel: Selection) -> Selection:
        """Translate a selection over the reduced instance back to original
        column indices. Costs are unchanged (weights carry over)."""
        cols = tuple(self.kept_columns[j - 1] for j in sel.columns)
        return Selection(columns=cols, total_cost=sel.total_cost)


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------

def _effective(rows_lo: np.ndarray, rows_hi: np.ndarray,
               cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Each row's interval restricted to surviving columns, as inclusive
    # indices into `cols`. R2 never strips a row's last column, so the
    # restriction is always non-empty.
    el = np.searchsorted(cols, rows_lo, side="left")
    eh = np.searchsorted(cols, rows_hi, side="right") - 1
    if np.any(el > eh):
        raise AssertionError("row lost all of its columns during reduction")
    return el, eh


def reduce_instance(inst: WeightedInstance) -> tuple[WeightedInstance, ReductionTrace]:
    """Apply row and column dominance until neither fires.

    Returns the reduced instance (columns renumbered 1..m in original order)
    and the trace needed to map selections back. Optimal cost is preserved:
    every optimal selection of the reduced instance maps to an optimal
    selection of the original.
    """
    rows_lo = np.array([r[0] for r in inst.rows], dtype=np.int64)
    rows_hi = np.array([r[1] for r in inst.rows], dtype=np.int64)
    rows_mult = np.array([r[2] for r in inst.rows], dtype=np.int64)
    cols = np.arange(1, inst.n + 1, dtype=np.int64)
    weights = np.array(inst.weights, dtype=np.float64)

    removed_rows: list[tuple[tuple[int, int], tuple[int, int]]] = []
    removed_cols: list[tuple[int, int]] = []

    changed = True
    while changed:
        changed = False

        # R1: drop rows whose effective interval contains another row's.
        if rows_lo.size > 1:
            el, eh = _effective(rows_lo, rows_hi, cols)
            contains = (el[None, :] >= el[:, None]) & (eh[None, :] <= eh[:, None])
            same = (el[None, :] == el[:, None]) & (eh[None, :] == eh[:, None])
            order = np.arange(el.size)
            # j removes k when j's interval sits inside k's; among equal
            # intervals only an earlier j may remove a later k.
            killer = contains & (~same | (order[None, :] < order[:, None]))
            np.fill_diagonal(killer, False)
            dead = killer.any(axis=1)
            if dead.any():
                changed = True
                witness = np.argmax(killer, axis=1)
                for k in np.flatnonzero(dead):
                    j = witness[k]
                    removed_rows.append((
                        (int(rows_lo[k]), int(rows_hi[k])),
                        (int(rows_lo[j]), int(rows_hi[j])),
                    ))
                keep = ~dead
                rows_lo, rows_hi, rows_mult = rows_lo[keep], rows_hi[keep], rows_mult[keep]

        # R2: drop columns whose row set is dominated at no weight advantage.
        if cols.size > 1 and rows_lo.size > 0:
            el, eh = _effective(rows_lo, rows_hi, cols)
            pos = np.arange(cols.size)
            covers = (el[:, None] <= pos[None, :]) & (pos[None, :] <= eh[:, None])
            # misses[a, b] = number of rows covered by column a but not b;
            # zero means a's row set is a subset of b's.
            misses = covers.T.astype(np.int64) @ (~covers).astype(np.int64)
            subset = misses == 0
            dead_col = np.zeros(cols.size, dtype=bool)
            for a in range(cols.size):
                for b in range(cols.size):
                    if a == b or dead_col[b]:
                        continue
                    if not subset[a, b] or weights[a] < weights[b]:
                        continue
                    if subset[b, a] and weights[a] == weights[b] and a < b:
                        continue  # fully symmetric pair: keep the lower index
                    removed_cols.append((int(cols[a]), int(cols[b])))
                    dead_col[a] = True
                    changed = True
                    break
            if dead_col.any():
                cols = cols[~dead_col]
                weights = weights[~dead_col]
        elif rows_lo.size == 0 and cols.size > 1:
            # No rows left: every column is redundant; keep the cheapest
            # (earliest on ties) so the reduced instance stays well formed.
            best = int(np.argmin(weights))
            for a in range(cols.size):
                if a != best:
                    removed_cols.append((int(cols[a]), int(cols[best])))
            cols = cols[best:best + 1]
            weights = weights[best:best + 1]

    el, eh = (_effective(rows_lo, rows_hi, cols) if rows_lo.size
              else (np.array([], dtype=np.int64), np.array([], dtype=np.int64)))
    reduced_rows = sorted(
        (int(l) + 1, int(h) + 1, int(m)) for l, h, m in zip(el, eh, rows_mult)
    )
    reduced = WeightedInstance(n=int(cols.size), rows=tuple(reduced_rows),
                               weights=tuple(float(w) for w in weights))
    trace = ReductionTrace(
        removed_rows=tuple(removed_rows),
        removed_columns=tuple(removed_cols),
        kept_columns=tuple(int(c) for c in cols),
    )
    return reduced, trace


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

def solve_weighted(inst: WeightedInstance) -> Selection:
    """Exact minimum-weight cover via shortest path over column indices.

    Ties break toward fewer columns, then the lexicographically smallest
    sorted column tuple. Costs are accumulated in ascending column order, so
    equal selections always carry bit-identical float costs. The instance is
    solved as given (no reduction); callers wanting reductions compose with
    reduce_instance explicitly.
    """
    n = inst.n
    w = inst.weights
    intervals = {(lo, hi) for lo, hi, _ in inst.rows}

    # blocker[i] = min over rows with lo > i of their hi; an arc i -> j (i < j)
    # exists iff no row lies strictly between, i.e. blocker[i] >= j.
    first_hi = np.full(n + 2, _INF)
    for lo, hi in intervals:
        if hi < first_hi[lo]:
            first_hi[lo] = hi
    blocker = np.full(n + 2, _INF)
    running = _INF
    for i in range(n + 1, -1, -1):
        blocker[i] = running
        if first_hi[i] < running:
            running = first_hi[i]

    # best[i]: (cost, count, columns) of the best path reaching column i,
    # compared lexicographically. Node 0 and n+1 are virtual endpoints.
    best: list[tuple[float, int, tuple[int, ...]] | None] = [None] * (n + 2)
    best[0] = (0.0, 0, ())
    for j in range(1, n + 2):
        wj = w[j - 1] if j <= n else 0.0
        cand: tuple[float, int, tuple[int, ...]] | None = None
        for i in range(j):
            prev = best[i]
            if prev is None or blocker[i] < j:
                continue
            if j <= n:
                step = (prev[0] + wj, prev[1] + 1, prev[2] + (j,))
            else:
                step = prev
            if cand is None or step < cand:
                cand = step
        best[j] = cand

    final = best[n + 1]
    assert final is not None  # arc (j-1, j) always exists, so n+1 is reachable
    return Selection(columns=final[2], total_cost=final[0])


def solve_unit(inst: WeightedInstance) -> Selection:
    """Unit-cost solve by reduction alone.

    Reduces to a fixed point and selects every surviving column that still
    covers a surviving row. The result is certified against the original
    instance; if the shortest-path solver finds anything cheaper the
    extraction was not tight and we fall back to it with a warning.
    """
    if any(w != 1.0 for w in inst.weights):
        raise ValueError("solve_unit requires unit weights")
    reduced, trace = reduce_instance(inst)
    useful = np.zeros(reduced.n, dtype=bool)
    for lo, hi, _ in reduced.rows:
        useful[lo - 1:hi] = True
    picked = Selection(
        columns=tuple(int(j) + 1 for j in np.flatnonzero(useful)),
        total_cost=float(useful.sum()),
    )
    sel = trace.map_selection(picked)
    if not verify_cover(inst, sel):
        raise RuntimeError("internal error: reduced extraction does not cover")
    reference = solve_weighted(inst)
    if reference.total_cost < sel.total_cost:
        warnings.warn(
            f"reduction extraction used {int(sel.total_cost)} columns where "
            f"{int(reference.total_cost)} suffice; falling back to search",
            stacklevel=2,
        )
        return reference
    return sel


def brute_force(inst: WeightedInstance) -> Selection:
    """Reference optimum by exhaustive subset enumeration (n <= 20 only).

    Shares the tie-break chain with solve_weighted: minimum cost, then
    fewest columns, then lexicographically smallest sorted tuple. Costs are
    added in ascending column order to match the solver bit for bit.
    """
    n = inst.n
    if n > 20:
        raise ValueError(f"brute force is capped at 20 columns, got {n}")
    masks = np.arange(1 << n, dtype=np.uint32)
    feasible = np.ones(masks.size, dtype=bool)
    for lo, hi in {(lo, hi) for lo, hi, _ in inst.rows}:
        span = np.uint32(((1 << hi) - (1 << (lo - 1))) & 0xFFFFFFFF)
        feasible &= (masks & span) != 0

    costs = np.zeros(masks.size, dtype=np.float64)
    for j in range(1, n + 1):
        chosen = (masks >> np.uint32(j - 1)) & np.uint32(1)
        costs[chosen.astype(bool)] += inst.weights[j - 1]

    best_cost = costs[feasible].min()
    cand = feasible & (costs == best_cost)
    counts = np.bitwise_count(masks)
    cand &= counts == counts[cand].min()
    columns = min(
        tuple(j + 1 for j in range(n) if (int(mask) >> j) & 1)
        for mask in np.flatnonzero(cand)
    )
    return Selection(columns=columns, total_cost=float(best_cost))


def verify_cover(inst: WeightedInstance, sel: Selection) -> bool:
    """True iff every row is stabbed and total_cost matches the column sum."""
    cols = sel.columns
    if any(c < 1 or c > inst.n for c in cols):
        return False
    for lo, hi, _ in inst.rows:
        k = bisect_left(cols, lo)
        if k == len(cols) or cols[k] > hi:
            return False
    expected = 0.0
    for c in cols:
        expected += inst.weights[c - 1]
    return math.isclose(sel.total_cost, expected, rel_tol=1e-9, abs_tol=1e-12)
