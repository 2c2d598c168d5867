"""Command-line experiment runner.

``comocma run`` binds a benchmark problem, the optimizer, and the run
recorder into a reproducible experiment: it writes ``record.csv``,
``eigenvalues.csv`` (when eigenvalue logging is on), ``incumbents.txt``
(one line per incumbent: x then f(x)), ``archive.csv``, and
``metadata.json`` echoing every resolved setting.  Identical
configurations produce byte-identical artifacts; ``comocma replay``
re-runs a finished experiment from its metadata and verifies that.

The output directory defaults to ``runs/<problem key>_seed<seed>`` under
$COMOCMA_OUTPUT_DIR (or the working directory).  Gap offsets are kept in
the JSON store at $COMOCMA_OFFSETS or ``~/.cache/comocma/offsets.json``;
a replayed run reuses the offsets recorded in the metadata instead, since
the store may have grown since the original run.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .harness import (GapOffsets, OffsetStore, RunRecorder,
                      optimal_incumbent_hypervolume, problem_key)
from .problems import (DEFAULT_ROTATION_SEEDS, make_problem, problem_name,
                       true_front_value)
from .sofomore import Sofomore

__all__ = ["RunConfig", "execute_run", "replay_check", "main"]

OUTPUT_DIR_ENV = "COMOCMA_OUTPUT_DIR"
OFFSETS_ENV = "COMOCMA_OFFSETS"
DEFAULT_OFFSETS_PATH = "~/.cache/comocma/offsets.json"

_REQUIRED = ("problem", "diag", "n", "p", "sigma0", "lower", "upper",
             "budget", "seed")


@dataclass
class RunConfig:
    """Resolved settings of one experiment; round-trips through JSON."""

    problem: str
    diag: str
    n: int
    p: int
    sigma0: float
    lower: list
    upper: list
    budget: float
    seed: int
    k: int | None = None
    ref: list = dataclasses.field(default_factory=lambda: [1.1, 1.1])
    mode: str = "sequential"
    workers: int | None = None
    lam: int | None = None
    rotation_seeds: list = dataclasses.field(
        default_factory=lambda: list(DEFAULT_ROTATION_SEEDS))
    eig_log: bool = False
    out: str | None = None

    def __post_init__(self):
        self.lower = _as_float_list(self.lower)
        self.upper = _as_float_list(self.upper)
        self.ref = _as_float_list(self.ref)
        if len(self.ref) != 2:
            raise ValueError("ref must have exactly two components")
        for name in ("n", "p", "seed"):
            setattr(self, name, int(getattr(self, name)))
        self.sigma0 = float(self.sigma0)
        self.budget = float(self.budget)
        if self.k is not None:
            self.k = int(self.k)
        if self.lam is not None:
            self.lam = int(self.lam)
        if self.workers is not None:
            self.workers = int(self.workers)
        self.rotation_seeds = [int(s) for s in self.rotation_seeds]
        if len(self.rotation_seeds) != 2:
            raise ValueError("rotation_seeds must have two entries")
        self.eig_log = bool(self.eig_log)
        for bound in (self.lower, self.upper):
            if len(bound) not in (1, self.n):
                raise ValueError("bounds must be scalars or length-n")
        if self.budget <= 0:
            raise ValueError("budget must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ValueError("unknown config fields: %s"
                             % ", ".join(sorted(unknown)))
        missing = [name for name in _REQUIRED if data.get(name) is None]
        if missing:
            raise ValueError("missing config fields: %s" % ", ".join(missing))
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def as_bound(self, which: str) -> np.ndarray:
        values = getattr(self, which)
        return np.array(values if len(values) == self.n
                        else values * self.n)


def _as_float_list(value) -> list:
    if np.isscalar(value):
        return [float(value)]
    return [float(v) for v in value]


def _offsets_store_path(explicit=None) -> Path:
    if explicit:
        return Path(explicit)
    env = os.environ.get(OFFSETS_ENV)
    if env:
        return Path(env)
    return Path(DEFAULT_OFFSETS_PATH).expanduser()


def _resolve_offsets(config: RunConfig, problem, record,
                     store_path) -> GapOffsets:
    """Max-merge this run into the offset store and read the result back.

    Problems with a known front are seeded analytically: the incumbent
    offset from the optimal placement of p points on the front, the
    archive offset from the full-front hypervolume.
    """
    key = problem_key(problem.name, config.n, config.p, config.ref)
    store = OffsetStore(store_path)
    if problem.true_front_hypervolume is not None:
        store.update(key, optimal_incumbent_hypervolume(config.p, config.ref),
                     true_front_value(problem, config.ref), source="analytic")
    store.update(key, float(record.column("hv").max()),
                 float(record.column("hvarchive")[-1]), source="empirical")
    offsets = store.get(key)
    store.save()
    return offsets


def execute_run(config: RunConfig, out_dir, offsets: GapOffsets | None = None,
                offsets_path=None) -> dict:
    """Run one experiment and write all artifacts into ``out_dir``.

    ``offsets`` pins the gap offsets (used by replay); otherwise they are
    resolved through the offset store at ``offsets_path``.
    """
    out_dir = Path(out_dir)
    problem = make_problem(config.problem, config.diag, config.n, config.k,
                           tuple(config.rotation_seeds))
    moes = Sofomore(problem, config.p, config.sigma0,
                    config.as_bound("lower"), config.as_bound("upper"),
                    config.seed, lam=config.lam, mode=config.mode,
                    workers=config.workers, ref=tuple(config.ref))
    recorder = RunRecorder(log_eigenvalues=config.eig_log)
    moes.run(config.budget, recorder)
    record = recorder.record

    key = problem_key(problem.name, config.n, config.p, config.ref)
    if offsets is None:
        offsets = _resolve_offsets(config, problem, record,
                                   _offsets_store_path(offsets_path))
    record.finalize(offsets)

    out_dir.mkdir(parents=True, exist_ok=True)
    record.write_csv(out_dir / "record.csv")
    if config.eig_log:
        record.write_eig_csv(out_dir / "eigenvalues.csv")
    np.savetxt(out_dir / "incumbents.txt",
               np.column_stack((np.vstack(moes.incumbents),
                                np.asarray(moes.incumbent_objs))),
               fmt="%.17g")
    archive_lines = ["f1,f2"] + ["%.17g,%.17g" % (f1, f2)
                                 for f1, f2 in moes.archive.points()]
    (out_dir / "archive.csv").write_text("\n".join(archive_lines) + "\n")

    meta = {
        "version": __version__,
        "backend": BACKEND,
        "config": config.to_dict(),
        "lam": moes.lam,
        "rng": {
            "entropy": moes.seed_sequence.entropy,
            "spawn_children": 3 + config.p,
            "layout": {"init": 0, "scheduler": 1, "diagnostics": 2,
                       "kernels": list(range(3, 3 + config.p))},
        },
        "offsets": {
            "key": key,
            "hv_max": offsets.hv_max,
            "hvarchive_max": offsets.hvarchive_max,
            "source": offsets.source,
        },
        "problem": dict(problem.descriptor, name=problem.name),
        "results": {
            "eval_count": moes.eval_count,
            "evals_per_kernel": moes.evals_per_kernel,
            "epochs": moes.epoch,
            "steps": moes.steps,
            "hv": float(record.column("hv")[-1]),
            "hvarchive": float(record.column("hvarchive")[-1]),
            "convergence_gap": float(record.column("convergence_gap")[-1]),
            "archive_gap": float(record.column("archive_gap")[-1]),
            "ratio_global": float(record.column("ratio_global")[-1]),
        },
    }
    (out_dir / "metadata.json").write_text(
        json.dumps(meta, sort_keys=True, indent=1) + "\n")
    return meta


def replay_check(path) -> bool:
    """Re-run a finished experiment and compare the records bitwise."""
    path = Path(path)
    run_dir = path.parent if path.is_file() else path
    record_path = run_dir / "record.csv"
    meta_path = run_dir / "metadata.json"
    if not record_path.exists() or not meta_path.exists():
        raise FileNotFoundError("replay needs %s and %s"
                                % (record_path, meta_path))
    meta = json.loads(meta_path.read_text())
    if meta.get("backend") != BACKEND:
        warnings.warn("record was produced with backend %r, current is %r"
                      % (meta.get("backend"), BACKEND), RuntimeWarning,
                      stacklevel=2)
    config = RunConfig.from_dict(meta["config"])
    offsets = GapOffsets(meta["offsets"]["hv_max"],
                         meta["offsets"]["hvarchive_max"],
                         meta["offsets"]["source"])
    with tempfile.TemporaryDirectory() as tmp:
        execute_run(config, tmp, offsets=offsets)
        same = (Path(tmp) / "record.csv").read_bytes() \
            == record_path.read_bytes()
        eig_path = run_dir / "eigenvalues.csv"
        if same and eig_path.exists():
            same = (Path(tmp) / "eigenvalues.csv").read_bytes() \
                == eig_path.read_bytes()
    return same


def _default_out_dir(config: RunConfig) -> Path:
    base = Path(os.environ.get(OUTPUT_DIR_ENV) or "runs")
    key = problem_key(problem_name(config.problem, config.diag, config.k),
                      config.n, config.p, config.ref)
    return base / ("%s_seed%d" % (key, config.seed))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comocma",
        description="Bi-objective optimization runs with COMO-CMA-ES.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", type=Path,
                     help="JSON file with config fields; flags override")
    run.add_argument("--problem", choices=("sep", "one", "two"))
    run.add_argument("--k", type=int, help="objective-2 coordinate for sep")
    run.add_argument("--diag", choices=("sphere", "elli", "cigtab"))
    run.add_argument("--n", type=int, help="search-space dimension")
    run.add_argument("--p", type=int, help="number of kernels")
    run.add_argument("--sigma0", type=float, help="initial step size")
    run.add_argument("--lower", type=float, nargs="+",
                     help="init-box lower bound (scalar or per coordinate)")
    run.add_argument("--upper", type=float, nargs="+",
                     help="init-box upper bound")
    run.add_argument("--ref", type=float, nargs=2,
                     help="hypervolume reference point (default 1.1 1.1)")
    run.add_argument("--budget", type=float,
                     help="total objective evaluations")
    run.add_argument("--seed", type=int)
    run.add_argument("--mode", choices=("sequential", "postponed"))
    run.add_argument("--workers", type=int,
                     help="thread count for postponed epochs")
    run.add_argument("--lam", type=int, help="offspring per kernel step")
    run.add_argument("--rotation-seeds", type=int, nargs=2,
                     dest="rotation_seeds")
    run.add_argument("--eig-log", action="store_true", default=None,
                     dest="eig_log", help="log covariance eigenvalues")
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--offsets", type=Path, help="offset store path")

    replay = sub.add_parser("replay",
                            help="re-run an experiment and compare records")
    replay.add_argument("run_dir", type=Path,
                        help="run directory or its record.csv")
    return parser


def _config_from_args(args) -> RunConfig:
    data = {}
    if args.config is not None:
        data.update(json.loads(Path(args.config).read_text()))
    for field in dataclasses.fields(RunConfig):
        if field.name == "out":
            continue
        value = getattr(args, field.name, None)
        if value is not None:
            data[field.name] = value
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _config_from_args(args)
            out_dir = Path(args.out) if args.out is not None \
                else _default_out_dir(config)
            config.out = str(out_dir)
            meta = execute_run(config, out_dir, offsets_path=args.offsets)
            print("run complete: eval_count=%d hv=%.12g -> %s"
                  % (meta["results"]["eval_count"], meta["results"]["hv"],
                     out_dir))
            return 0
        ok = replay_check(args.run_dir)
        print("replay %s" % ("matches" if ok else "DIFFERS"))
        return 0 if ok else 1
    except (ValueError, KeyError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
