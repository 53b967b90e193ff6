"""Adaptive Gauss-Kronrod (7/15) quadrature over many finite intervals at once.

Each *row* is an independent integral. All panels of all rows that need
work in a round are evaluated in a single vectorized call, so the cost per
Matsubara term is a handful of numpy passes instead of a Python loop.

A row converges when the summed |K15 - G7| estimate drops below
``rel_tol`` times the row's L1 norm (or below ``abs_tol``). The final value of a row is the
correctly rounded (``math.fsum``) sum of its panels taken in order of the
panel left edges, so it depends only on that row's integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Kronrod abscissae on [-1, 1] (positive half, descending) and weights.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])  # ascending, 15 points
W_KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
W_GAUSS = np.zeros(15)
W_GAUSS[1:15:2] = np.concatenate([_WG[:-1], _WG[::-1]])


class QuadratureError(RuntimeError):
    """Raised when a row cannot reach its tolerance within the panel budget."""

    def __init__(self, message: str, rows: list[int]):
        super().__init__(message)
        self.rows = rows


@dataclass
class BatchResult:
    values: np.ndarray
    errors: np.ndarray
    l1: np.ndarray
    evaluations: int


def _rule_sums(f: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Column-by-column accumulation keeps every row's rounding independent of
    # how many rows share the call (a BLAS matvec does not guarantee that).
    k15 = np.zeros(f.shape[0])
    g7 = np.zeros(f.shape[0])
    l1 = np.zeros(f.shape[0])
    for j in range(15):
        col = f[:, j]
        k15 += W_KRONROD[j] * col
        l1 += W_KRONROD[j] * np.abs(col)
        if W_GAUSS[j]:
            g7 += W_GAUSS[j] * col
    return k15, g7, l1


def integrate_rows(
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a: np.ndarray,
    b: np.ndarray,
    rel_tol: float,
    initial_panels: int = 8,
    max_panels: int = 4000,
    abs_tol: float = 0.0,
) -> BatchResult:
    """Integrate ``func(rows, x)`` over [a[r], b[r]] for every row r.

    ``func`` receives an int array ``rows`` of shape (P,) and abscissae of
    shape (P, 15) and returns integrand values of shape (P, 15).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n_rows = a.size
    edges = np.linspace(0.0, 1.0, initial_panels + 1)
    lo = (a[:, None] + (b - a)[:, None] * edges[None, :-1]).ravel()
    hi = (a[:, None] + (b - a)[:, None] * edges[None, 1:]).ravel()
    row = np.repeat(np.arange(n_rows), initial_panels)

    # settled panels, kept for the final per-row sum
    done_row: list[np.ndarray] = []
    done_lo: list[np.ndarray] = []
    done_val: list[np.ndarray] = []
    done_err = np.zeros(n_rows)
    done_l1 = np.zeros(n_rows)
    evaluations = 0
    panel_count = np.full(n_rows, initial_panels)

    # panels still under consideration
    cur_row, cur_lo, cur_hi = row, lo, hi
    cur_val = np.empty(row.size)
    cur_err = np.empty(row.size)
    cur_l1 = np.empty(row.size)
    new_mask = np.ones(row.size, dtype=bool)
    failed: list[int] = []

    while cur_row.size:
        idx = np.flatnonzero(new_mask)
        if idx.size:
            half = 0.5 * (cur_hi[idx] - cur_lo[idx])
            mid = 0.5 * (cur_hi[idx] + cur_lo[idx])
            x = mid[:, None] + half[:, None] * NODES[None, :]
            f = func(cur_row[idx], x)
            evaluations += f.size
            k15, g7, l1 = _rule_sums(f)
            cur_val[idx] = half * k15
            cur_err[idx] = np.abs(half * k15 - half * g7)
            cur_l1[idx] = half * l1

        err_row = done_err + np.bincount(cur_row, cur_err, minlength=n_rows)
        l1_row = done_l1 + np.bincount(cur_row, cur_l1, minlength=n_rows)
        tol_row = np.maximum(rel_tol * l1_row, abs_tol)
        converged = err_row <= tol_row
        over_budget = (~converged) & (panel_count >= max_panels)
        if over_budget.any():
            failed.extend(np.flatnonzero(over_budget).tolist())
            converged = converged | over_budget

        # rows that converged hand all their panels over to the settled pool
        settle = converged[cur_row]
        if settle.any():
            done_row.append(cur_row[settle])
            done_lo.append(cur_lo[settle])
            done_val.append(cur_val[settle])
            done_err += np.bincount(cur_row[settle], cur_err[settle], minlength=n_rows)
            done_l1 += np.bincount(cur_row[settle], cur_l1[settle], minlength=n_rows)

        # in the others, split panels carrying more than their share of the error
        share = tol_row / panel_count
        split = (~settle) & (cur_err > share[cur_row])
        keep = (~settle) & (~split)

        s_row, s_lo, s_hi = cur_row[split], cur_lo[split], cur_hi[split]
        s_mid = 0.5 * (s_lo + s_hi)
        panel_count += np.bincount(s_row, minlength=n_rows)
        cur_row = np.concatenate([cur_row[keep], np.repeat(s_row, 2)])
        cur_lo = np.concatenate([cur_lo[keep], np.column_stack([s_lo, s_mid]).ravel()])
        cur_hi = np.concatenate([cur_hi[keep], np.column_stack([s_mid, s_hi]).ravel()])
        n_keep = int(keep.sum())
        new_mask = np.zeros(cur_row.size, dtype=bool)
        new_mask[n_keep:] = True
        cur_val = np.concatenate([cur_val[keep], np.empty(2 * s_row.size)])
        cur_err = np.concatenate([cur_err[keep], np.empty(2 * s_row.size)])
        cur_l1 = np.concatenate([cur_l1[keep], np.empty(2 * s_row.size)])

    rows_all = np.concatenate(done_row) if done_row else np.empty(0, dtype=int)
    lo_all = np.concatenate(done_lo) if done_lo else np.empty(0)
    val_all = np.concatenate(done_val) if done_val else np.empty(0)
    order = np.lexsort((lo_all, rows_all))
    rows_all, val_all = rows_all[order], val_all[order]
    bounds = np.searchsorted(rows_all, np.arange(n_rows + 1))
    values = np.array(
        [math.fsum(val_all[bounds[r]:bounds[r + 1]]) for r in range(n_rows)]
    )
    if failed:
        raise QuadratureError(f"quadrature did not converge for rows {sorted(set(failed))}", sorted(set(failed)))
    return BatchResult(values, done_err, done_l1, evaluations)
