"""Columnar run records shared by the bundle loop and the adaptive methods."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

CSV_COLUMNS = ("j", "serious", "t", "m", "phi_y", "tau", "inner_iters", "phi_x", "n_cuts", "residual", "lam")


@dataclass(slots=True)
class IterationRow:
    j: int
    serious: bool
    x: np.ndarray
    y: np.ndarray
    x_center: np.ndarray
    m: float
    t: float
    tau: float
    phi_x: float
    phi_y: float
    inner_iters: int = 0
    residual: float = 0.0
    n_cuts: int = 0
    lam: float = math.nan


class TraceBuilder:
    """Append-only row buffer; ``build`` turns it into numpy columns."""

    def __init__(self):
        self.X, self.y_idx, self.c_idx = [], [], []
        self.m, self.t, self.tau, self.phi_x = [], [], [], []
        self.inner, self.residual, self.n_cuts, self.lam = [], [], [], []

    def __len__(self):
        return len(self.X)

    def append(self, x, y_idx, c_idx, m, t, tau, phi_x, inner=0, residual=0.0, n_cuts=0, lam=math.nan):
        self.X.append(x)
        self.y_idx.append(y_idx)
        self.c_idx.append(c_idx)
        self.m.append(m)
        self.t.append(t)
        self.tau.append(tau)
        self.phi_x.append(phi_x)
        self.inner.append(inner)
        self.residual.append(residual)
        self.n_cuts.append(n_cuts)
        self.lam.append(lam)

    def build(self):
        return {
            "X": np.array(self.X, dtype=float), "y_idx": np.array(self.y_idx, dtype=np.int64),
            "c_idx": np.array(self.c_idx, dtype=np.int64), "m": np.array(self.m, dtype=float),
            "t": np.array(self.t, dtype=float), "tau": np.array(self.tau, dtype=float),
            "phi_x": np.array(self.phi_x, dtype=float), "inner": np.array(self.inner, dtype=np.int64),
            "residual": np.array(self.residual, dtype=float), "n_cuts": np.array(self.n_cuts, dtype=np.int64),
            "lam": np.array(self.lam, dtype=float),
        }


def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class RunRecord:
    """Trace of one run stored as columns.

    Row j holds x_j, the indices of y_j and of the prox-center used to
    compute x_j, and the scalars m_j, t_j, tau_j.  Row j is serious when
    t_j <= eps_bar / 2 (unless ``serious`` is given explicitly).
    """
    method: str
    cols: dict
    status: str = "running"
    message: str = ""
    eps_bar: float = math.nan
    lam: float = math.nan
    tau: float = math.nan
    phi_star: float | None = None
    counters: dict = field(default_factory=dict)
    model_checks: list = field(default_factory=list)
    serious: np.ndarray | None = None

    def __post_init__(self):
        if self.serious is None:
            self.serious = self.cols["t"] <= 0.5 * self.eps_bar
            if len(self.serious):
                self.serious[0] = True
        self._rows = None

    def __getattr__(self, name):
        cols = self.__dict__.get("cols")
        if cols is not None and name in cols:
            return cols[name]
        raise AttributeError(name)

    @property
    def n_rows(self):
        return len(self.cols["t"])

    @property
    def phi_y(self):
        return self.cols["phi_x"][self.cols["y_idx"]]

    def point(self, which, j):
        c = self.cols
        if which == "x":
            return c["X"][j]
        if which == "y":
            return c["X"][c["y_idx"][j]]
        return c["X"][c["c_idx"][j]]

    def row(self, j):
        c = self.cols
        return IterationRow(j, bool(self.serious[j]), c["X"][j], c["X"][c["y_idx"][j]], c["X"][c["c_idx"][j]],
                            float(c["m"][j]), float(c["t"][j]), float(c["tau"][j]), float(c["phi_x"][j]),
                            float(c["phi_x"][c["y_idx"][j]]), int(c["inner"][j]), float(c["residual"][j]),
                            int(c["n_cuts"][j]), float(c["lam"][j]))

    @property
    def rows(self):
        if self._rows is None:
            self._rows = [self.row(j) for j in range(self.n_rows)]
        return self._rows

    @property
    def ok(self):
        return self.status in ("converged", "max_iter")

    @property
    def iterations(self):
        return max(self.n_rows - 1, 0)

    @property
    def serious_indices(self):
        return np.flatnonzero(self.serious)

    def serious_view(self):
        return [self.row(j) for j in self.serious_indices]

    def block_starts(self):
        """For each row, the index of the last serious row at or before it."""
        idx = np.where(self.serious, np.arange(self.n_rows), 0)
        return np.maximum.accumulate(idx) if self.n_rows else idx

    def null_blocks(self):
        """Pairs (l0, [consecutive null indices after serious index l0])."""
        sidx = self.serious_indices
        ends = list(sidx[1:]) + [self.n_rows]
        return [(int(a), list(range(a + 1, b))) for a, b in zip(sidx, ends)]

    @property
    def best_phi(self):
        return float(self.phi_y.min())

    @property
    def phi_gap_final(self):
        if self.phi_star is None or self.n_rows == 0:
            return None
        return float(self.phi_y[-1]) - self.phi_star

    def totals(self):
        sidx = self.serious_indices
        lengths = np.diff(np.append(sidx, self.n_rows)) - 1
        return {
            "iterations_total": self.iterations,
            "serious": int(len(sidx)),
            "null": int(self.n_rows - len(sidx)),
            "null_max_block": int(lengths.max()) if len(lengths) else 0,
            **self.counters,
        }

    def to_csv(self, path=None):
        """RFC-4180 text with CRLF line endings; floats via repr."""
        c = self.cols
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(CSV_COLUMNS)
        phi_y = self.phi_y
        for j in range(self.n_rows):
            w.writerow([j, int(self.serious[j]), _fmt(c["t"][j]), _fmt(c["m"][j]), _fmt(phi_y[j]),
                        _fmt(c["tau"][j]), int(c["inner"][j]), _fmt(c["phi_x"][j]), int(c["n_cuts"][j]),
                        _fmt(c["residual"][j]), _fmt(c["lam"][j])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_jsonl(self, path=None):
        """One JSON object per row; points included when n <= 10; non-finite as null."""
        c = self.cols
        lines = []
        with_points = self.n_rows and c["X"].shape[1] <= 10
        phi_y = self.phi_y
        for j in range(self.n_rows):
            d = {"j": j, "serious": bool(self.serious[j]), "t": _json_float(c["t"][j]),
                 "m": _json_float(c["m"][j]), "phi_x": _json_float(c["phi_x"][j]),
                 "phi_y": _json_float(phi_y[j]), "tau": _json_float(c["tau"][j]),
                 "inner_iters": int(c["inner"][j]), "n_cuts": int(c["n_cuts"][j]),
                 "residual": _json_float(c["residual"][j]), "lam": _json_float(c["lam"][j])}
            if with_points:
                d["x"] = [float(v) for v in self.point("x", j)]
                d["y"] = [float(v) for v in self.point("y", j)]
                d["x_center"] = [float(v) for v in self.point("c", j)]
            lines.append(json.dumps(d))
        text = "\n".join(lines) + ("\n" if lines else "")
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text
