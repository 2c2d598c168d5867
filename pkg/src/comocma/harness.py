"""Run diagnostics: gap offsets, convergence records, rate fitting.

The quantity of interest for convergence plots is the hypervolume gap
``hv_max - hv``, where ``hv_max`` is the largest hypervolume attainable by
p incumbents.  For problems whose Pareto front is the segment image
f2 = (1 - sqrt(f1))^2 the offset is computed analytically by optimally
placing p points on the front (:func:`optimal_incumbent_hypervolume`);
otherwise the best value ever observed for the configuration is kept in a
small JSON store and max-merged across runs.  A tiny epsilon is added to
every offset at read time so logarithmic gaps stay finite even for the run
that produced the stored maximum.

Records are written as CSV with 17 significant digits, which round-trips
IEEE doubles exactly: two runs of the same configuration produce
byte-identical files.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["EPOCH_COLUMNS", "EIG_COLUMNS", "GapOffsets", "OffsetStore",
           "problem_key", "convergence_gap", "archive_gap",
           "nondominated_ratios", "RunRecord", "RunRecorder",
           "linear_fit_rate", "optimal_incumbent_hypervolume"]

EPOCH_COLUMNS = ("epoch", "evals_per_kernel", "hv", "hvarchive",
                 "convergence_gap", "archive_gap", "ratio_global",
                 "ratio_q25", "ratio_q50", "ratio_q75",
                 "sigma_min", "sigma_med", "sigma_max")
EIG_COLUMNS = ("epoch", "kernel_id", "eig_index", "sqrt_eig")

# keeps log-gaps finite when a run matches the stored maximum exactly
OFFSET_EPSILON = 1e-14


def problem_key(name: str, n: int, p: int, ref) -> str:
    return "%s_n%d_p%d_ref%gx%g" % (name, n, p, float(ref[0]), float(ref[1]))


@dataclass(frozen=True)
class GapOffsets:
    hv_max: float
    hvarchive_max: float
    source: str


def convergence_gap(hv: float, offsets: GapOffsets) -> float:
    return offsets.hv_max - hv


def archive_gap(hvarchive: float, offsets: GapOffsets) -> float:
    return offsets.hvarchive_max - hvarchive


class OffsetStore:
    """JSON-backed map from problem key to the best known offsets.

    Values only ever increase (max-merge), and a key that was ever seeded
    analytically keeps ``source == "analytic"``.  IO failures are reported
    as warnings; the store then behaves as empty or unsaved rather than
    aborting a finished run.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.data: dict = {}
        if self.path.exists():
            try:
                self.data = json.loads(self.path.read_text())
            except (OSError, ValueError) as exc:
                warnings.warn("could not read offset store %s: %s"
                              % (self.path, exc), RuntimeWarning,
                              stacklevel=2)
                self.data = {}

    def get(self, key: str) -> GapOffsets | None:
        entry = self.data.get(key)
        if entry is None:
            return None
        return GapOffsets(entry["hv_max"] + OFFSET_EPSILON,
                          entry["hvarchive_max"] + OFFSET_EPSILON,
                          entry.get("source", "empirical"))

    def update(self, key: str, hv_max: float, hvarchive_max: float,
               source: str = "empirical") -> GapOffsets:
        """Max-merge the given values into the store and return the result."""
        entry = self.data.get(key, {"hv_max": -math.inf,
                                    "hvarchive_max": -math.inf,
                                    "source": source})
        entry["hv_max"] = max(entry["hv_max"], float(hv_max))
        entry["hvarchive_max"] = max(entry["hvarchive_max"],
                                     float(hvarchive_max))
        if source == "analytic":
            entry["source"] = "analytic"
        self.data[key] = entry
        return self.get(key)

    def save(self) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self.data, indent=1,
                                            sort_keys=True) + "\n")
        except OSError as exc:
            warnings.warn("could not write offset store %s: %s"
                          % (self.path, exc), RuntimeWarning, stacklevel=2)


def _nondominated_mask(F: np.ndarray) -> np.ndarray:
    """True where no other row strictly dominates the row."""
    f1, f2 = F[:, 0], F[:, 1]
    weak = (f1[:, None] <= f1[None, :]) & (f2[:, None] <= f2[None, :])
    strict = (f1[:, None] < f1[None, :]) | (f2[:, None] < f2[None, :])
    return ~(weak & strict).any(axis=0)


def nondominated_ratios(moes) -> tuple[float, np.ndarray]:
    """Fraction of kernels' points that matter for the hypervolume.

    Returns the global ratio (incumbents that dominate the reference point
    and are nondominated within the incumbent set) and one ratio per
    kernel, where kernel i's batch is its incumbent plus its last
    offspring, judged within the union of the batch and the other
    incumbents.
    """
    r1, r2 = moes.ref
    inc = np.asarray(moes.incumbent_objs, dtype=float)
    inside = (inc[:, 0] < r1) & (inc[:, 1] < r2)
    ratio_global = float(np.mean(_nondominated_mask(inc) & inside))

    ratios = np.empty(moes.p)
    for i in range(moes.p):
        offspring = moes.last_offspring_objs[i]
        batch = inc[i:i + 1] if offspring is None \
            else np.vstack((inc[i:i + 1], offspring))
        others = np.delete(inc, i, axis=0)
        universe = np.vstack((batch, others)) if others.size else batch
        mask = _nondominated_mask(universe)[:len(batch)]
        ok = (batch[:, 0] < r1) & (batch[:, 1] < r2)
        ratios[i] = float(np.mean(mask & ok))
    return ratio_global, ratios


class RunRecord:
    """Per-epoch metric rows plus optional eigenvalue rows.

    Gap columns depend on offsets that may only be known after the run
    (empirical maxima), so rows are collected with the gaps unset and
    :meth:`finalize` fills them in.
    """

    def __init__(self):
        self.rows: list[list] = []
        self.eig_rows: list[tuple] = []
        self._finalized = False

    def append(self, epoch, evals_per_kernel, hv, hvarchive, ratio_global,
               ratio_q25, ratio_q50, ratio_q75,
               sigma_min, sigma_med, sigma_max) -> None:
        self.rows.append([float(epoch), float(evals_per_kernel),
                          float(hv), float(hvarchive), math.nan, math.nan,
                          float(ratio_global), float(ratio_q25),
                          float(ratio_q50), float(ratio_q75),
                          float(sigma_min), float(sigma_med),
                          float(sigma_max)])
        self._finalized = False

    def append_eig(self, epoch: int, kernel_id: int,
                   sqrt_eigenvalues) -> None:
        for idx, value in enumerate(sqrt_eigenvalues):
            self.eig_rows.append((int(epoch), int(kernel_id), idx,
                                  float(value)))

    def finalize(self, offsets: GapOffsets) -> None:
        gap_i = EPOCH_COLUMNS.index("convergence_gap")
        agap_i = EPOCH_COLUMNS.index("archive_gap")
        hv_i = EPOCH_COLUMNS.index("hv")
        ahv_i = EPOCH_COLUMNS.index("hvarchive")
        for row in self.rows:
            row[gap_i] = convergence_gap(row[hv_i], offsets)
            row[agap_i] = archive_gap(row[ahv_i], offsets)
        self._finalized = True

    def column(self, name: str) -> np.ndarray:
        if name in ("convergence_gap", "archive_gap") and not self._finalized:
            raise RuntimeError("gap columns require finalize() first")
        i = EPOCH_COLUMNS.index(name)
        return np.array([row[i] for row in self.rows])

    def write_csv(self, path) -> None:
        if not self._finalized:
            raise RuntimeError("finalize() before writing")
        lines = [",".join(EPOCH_COLUMNS)]
        lines += [",".join("%.17g" % v for v in row) for row in self.rows]
        Path(path).write_text("\n".join(lines) + "\n")

    def write_eig_csv(self, path) -> None:
        lines = [",".join(EIG_COLUMNS)]
        lines += ["%d,%d,%d,%.17g" % row for row in self.eig_rows]
        Path(path).write_text("\n".join(lines) + "\n")


class RunRecorder:
    """Collects one :class:`RunRecord` row per epoch of a running optimizer.

    With ``log_eigenvalues`` the square roots of the covariance
    eigenvalues of up to ``eig_sample_size`` kernels, drawn from the
    optimizer's diagnostics stream, are recorded each epoch.
    """

    def __init__(self, log_eigenvalues: bool = False,
                 eig_sample_size: int = 3):
        self.record = RunRecord()
        self.log_eigenvalues = log_eigenvalues
        self.eig_sample_size = int(eig_sample_size)

    def on_epoch(self, moes) -> None:
        ratio_global, ratios = nondominated_ratios(moes)
        q25, q50, q75 = np.percentile(ratios, [25, 50, 75])
        sigmas = np.array([k.sigma for k in moes.kernels])
        self.record.append(moes.epoch, moes.evals_per_kernel,
                           moes.hypervolume(), moes.archive.hypervolume(),
                           ratio_global, q25, q50, q75,
                           sigmas.min(), np.median(sigmas), sigmas.max())
        if self.log_eigenvalues:
            size = min(self.eig_sample_size, moes.p)
            ids = sorted(moes.diagnostics_rng.choice(moes.p, size=size,
                                                     replace=False))
            for kid in ids:
                self.record.append_eig(moes.epoch, int(kid),
                                       moes.kernels[kid].sqrt_eigenvalues())


def linear_fit_rate(record: RunRecord, start: float, stop: float,
                    column: str = "convergence_gap") -> tuple[float, float]:
    """Least-squares slope of log10(column) against evals per kernel.

    Returns (decadic slope per evaluation per kernel, R^2) over the rows
    with ``start <= evals_per_kernel <= stop``.
    """
    x = record.column("evals_per_kernel")
    y = record.column(column)
    mask = (x >= start) & (x <= stop)
    if mask.sum() < 2:
        raise ValueError("need at least two rows in the fit window")
    if (y[mask] <= 0).any():
        raise ValueError("log fit requires positive values")
    xs, ys = x[mask], np.log10(y[mask])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r_sq = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), r_sq


def optimal_incumbent_hypervolume(p: int, ref=(1.1, 1.1)) -> float:
    """Largest hypervolume p points on the front f2 = (1 - sqrt(f1))^2 cover.

    The front is parameterized as (t^2, (1 - t)^2) for t in [0, 1] and the
    placement is optimized with L-BFGS-B and the exact gradient, from a few
    deterministic starts.  This bounds the hypervolume of any p feasible
    incumbents, since every feasible point is weakly dominated by its
    projection onto the front.
    """
    from scipy.optimize import minimize

    if p < 1:
        raise ValueError("need at least one point")
    r1, r2 = float(ref[0]), float(ref[1])
    if r1 < 1 or r2 < 1:
        raise ValueError("reference point must weakly dominate (1, 1)")

    def negative_hv(t):
        order = np.argsort(t, kind="stable")
        ts = t[order]
        x = ts * ts
        y = (1 - ts) * (1 - ts)
        x_next = np.append(x[1:], r1)
        hv = float((x_next - x) @ (r2 - y))
        gx = np.empty(p)
        gx[0] = -(r2 - y[0])
        gx[1:] = y[1:] - y[:-1]
        gy = x - x_next
        gt = gx * 2 * ts - gy * 2 * (1 - ts)
        grad = np.empty(p)
        grad[order] = gt
        return -hv, -grad

    starts = [np.linspace(1, p, p) / (p + 1),
              np.sqrt(np.linspace(1, p, p) / (p + 1)),
              np.linspace(0.01, 0.99, p)]
    best = -math.inf
    for t0 in starts:
        res = minimize(negative_hv, t0, jac=True, method="L-BFGS-B",
                       bounds=[(0.0, 1.0)] * p,
                       options={"maxiter": 2000, "ftol": 1e-17,
                                "gtol": 1e-12})
        best = max(best, -float(res.fun))
    return best
