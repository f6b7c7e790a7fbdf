"""Command-line front end: ``mixpce {basis,fit,validate,sweep,moments}``.

Every command assembles a :class:`RunConfig` from flags, lets ``--config
file.json`` override any field, validates it, loads inputs, and only then
creates the output directory. Exit status: 0 success (including a
file-exchange pause), 2 configuration error, 3 numerical failure, 4 oracle or
file-exchange error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, oracles
from .basis import EpsPolicy, basis_from_dict, build_grouped_basis
from .errors import AwaitingResponses, MixPCEError, OracleError, ValidationError
from .gmm import ParameterGroups, load_distribution, rng_from_seed
from .moments import moment_table
from .sampler import STRATEGIES, AdaptiveConfig, run_adaptive, write_history
from .sparse import RegressionProblem, cosamp, rip_diagnostic, coefficient_error_bound
from .surrogate import SparseSurrogate, validate

log = logging.getLogger("mixpce")

OUTPUT_ENV = "MIXPCE_OUTPUT_DIR"
DEFAULT_EPSILONS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)
DEFAULT_SPARSITIES = (6, 8, 10, 12, 16, 20)


def fmt(x) -> str:
    """Round-trip float formatting (17 significant digits)."""
    return f"{float(x):.17g}"


@contextmanager
def phase(name, **fields):
    t0 = time.perf_counter()
    yield
    extra = "".join(f" {k}={v}" for k, v in fields.items())
    log.info("phase=%s%s elapsed_ms=%.1f", name, extra, 1e3 * (time.perf_counter() - t0))


@dataclass
class RunConfig:
    """All command settings. Field names double as ``--config`` JSON keys."""

    command: str = ""
    output_dir: str | None = None
    distribution: str | None = None
    basis: str | None = None
    model: str | None = None
    samples: str | None = None
    exchange: str | None = None
    oracle: str | None = None
    order: int = 3
    sparsity: int | None = None
    epsilon: float = 1e-6
    epsilon_mode: str = "relative"
    strategy: str = "d"
    pool_size: int = 1000
    initial: int = 20
    budget: int = 120
    threshold: float = 1e-8
    stabilization: float = 1e-8
    refresh: int = 10
    k_clusters: int | None = None
    residual: str = "signed"
    random_trials: int = 1
    test_size: int = 9000
    kde_samples: int = 100_000
    n_samples: int = 200
    noise: float = 1e-6
    epsilons: list = field(default_factory=lambda: list(DEFAULT_EPSILONS))
    sparsities: list = field(default_factory=lambda: list(DEFAULT_SPARSITIES))
    ls_iters: int | None = None
    rip_trials: int = 20
    seed: int = 0
    threads: int = 1

    def validate(self):
        c = self.command
        if self.order < 1:
            raise ValidationError("order must be >= 1")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")
        if self.threads < 0:
            raise ValidationError("threads must be >= 0 (0 = all cores)")
        if self.epsilon_mode not in ("relative", "absolute"):
            raise ValidationError("epsilon_mode must be 'relative' or 'absolute'")
        if self.oracle is not None and self.oracle not in oracles.REGISTRY:
            raise ValidationError(f"unknown oracle {self.oracle!r}; "
                                  f"choose from {sorted(oracles.REGISTRY)}")
        if c in ("basis", "moments") and not (self.distribution or self.oracle):
            raise ValidationError(f"{c} needs --distribution or --oracle")
        if c == "fit":
            if self.strategy not in STRATEGIES + ("all",):
                raise ValidationError(f"strategy must be one of {STRATEGIES + ('all',)}")
            if (self.oracle is None) == (self.exchange is None):
                raise ValidationError("fit needs exactly one of --oracle or --exchange")
            if self.exchange and not (self.basis or self.distribution):
                raise ValidationError("file-exchange fit needs --basis or --distribution")
            if self.exchange and self.strategy == "all":
                raise ValidationError("strategy 'all' is not available in file-exchange mode")
            if self.random_trials < 1:
                raise ValidationError("random_trials must be >= 1")
            self.adaptive_config("d").validate()
        if c == "validate":
            if not self.model:
                raise ValidationError("validate needs --model")
            if (self.oracle is None) == (self.samples is None):
                raise ValidationError("validate needs exactly one of --oracle or --samples")
            if self.oracle and self.test_size < 1:
                raise ValidationError("test_size must be >= 1")
            if self.kde_samples and self.kde_samples < 1000:
                raise ValidationError("kde_samples must be 0 (off) or >= 1000")
        if c == "sweep":
            if (self.oracle or "synthetic8d") != "synthetic8d":
                raise ValidationError("sweep needs a planted-truth oracle (synthetic8d)")
            if self.n_samples < 2 or self.noise < 0:
                raise ValidationError("sweep needs n_samples >= 2 and noise >= 0")
            if not self.epsilons or any(e <= 0 for e in self.epsilons):
                raise ValidationError("epsilons must be positive")
            if not self.sparsities or any(not 1 <= s <= self.n_samples for s in self.sparsities):
                raise ValidationError("sparsities must lie in 1..n_samples")
            if self.rip_trials < 1:
                raise ValidationError("rip_trials must be >= 1")
        return self

    def adaptive_config(self, strategy, seed=None) -> AdaptiveConfig:
        return AdaptiveConfig(
            strategy=strategy, pool_size=self.pool_size, initial=self.initial,
            budget=self.budget, sparsity=self.sparsity, epsilon=self.epsilon,
            epsilon_mode=self.epsilon_mode, threshold=self.threshold,
            stabilization=self.stabilization,
            refresh=self.refresh, k_clusters=self.k_clusters, residual=self.residual,
            seed=self.seed if seed is None else seed,
        )

    def resolved_output(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ENV, "."))

    @property
    def n_threads(self):
        return self.threads or os.cpu_count() or 1


def apply_overrides(cfg: RunConfig, path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    names = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValidationError(f"unknown config keys: {unknown}")
    return dataclasses.replace(cfg, **data)


# ----------------------------------------------------------------- file I/O

def write_samples(path, points, y=None):
    d = points.shape[1]
    header = [f"xi_{i + 1}" for i in range(d)] + ([] if y is None else ["y"])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for k, row in enumerate(points):
            vals = [fmt(v) for v in row] + ([] if y is None else [fmt(y[k])])
            fh.write(",".join(vals) + "\n")


def read_samples(path, d=None):
    """Read an ``xi_1..xi_d[, y]`` CSV. Returns ``(points, y or None)``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read sample table {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    xi_cols = [i for i, h in enumerate(header) if h.startswith("xi_")]
    if d is not None and len(xi_cols) != d:
        raise ValidationError(f"{path} has {len(xi_cols)} xi columns, expected {d}")
    y_col = header.index("y") if "y" in header else None
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    data = data.reshape(-1, len(header))
    return data[:, xi_cols], (None if y_col is None else data[:, y_col])


class ExchangeOracle:
    """File-exchange simulator.

    Known responses are read from ``responses.csv`` (``xi_1..xi_d, y``) and
    matched on exact coordinates, which the 17-digit format round-trips.
    The first request with unknown points overwrites ``pending_points.csv``
    with those points and raises :class:`AwaitingResponses`; re-running the
    same command replays every earlier decision and continues.
    """

    def __init__(self, directory, d):
        self.directory = Path(directory)
        self.d = d
        self.known = {}
        resp = self.directory / "responses.csv"
        if resp.exists():
            pts, y = read_samples(resp, d)
            if y is None:
                raise OracleError(f"{resp} has no 'y' column")
            for p, v in zip(pts, y):
                self.known[p.tobytes()] = float(v)

    def evaluate_many(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        missing, seen = [], set()
        for p in points:
            key = p.tobytes()
            if key not in self.known and key not in seen:
                seen.add(key)
                missing.append(p)
        if missing:
            self.directory.mkdir(parents=True, exist_ok=True)
            path = self.directory / "pending_points.csv"
            write_samples(path, np.array(missing))
            raise AwaitingResponses(path, len(missing))
        pending = self.directory / "pending_points.csv"
        if pending.exists():
            pending.unlink()
        return np.array([self.known[p.tobytes()] for p in points])

    def __call__(self, point):
        return float(self.evaluate_many(point)[0])


# ------------------------------------------------------------------ helpers

def _load_problem(cfg: RunConfig):
    """Resolve ``(distribution, basis, oracle_problem)`` from the config."""
    problem = oracles.get(cfg.oracle, cfg.seed) if cfg.oracle else None
    dist = problem.distribution if problem else None
    basis = problem.basis if problem else None
    if cfg.distribution:
        dist = load_distribution(cfg.distribution)
    if cfg.basis:
        try:
            data = json.loads(Path(cfg.basis).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read basis {cfg.basis}: {exc}") from exc
        basis = basis_from_dict(data)
        if dist is None and data.get("distribution"):
            dist = ParameterGroups.from_dict(data["distribution"])
    if dist is None:
        raise ValidationError("no input distribution: pass --distribution, --basis or --oracle")
    if basis is None:
        p = problem.p if problem and not cfg.distribution else cfg.order
        with phase("basis", d=dist.dimension, p=p):
            basis = build_grouped_basis(dist, p, threads=cfg.n_threads)
    if basis.d != dist.dimension:
        raise ValidationError(f"basis dimension {basis.d} != distribution dimension "
                              f"{dist.dimension}")
    return dist, basis, problem


def _prepare_output(cfg) -> Path:
    out = cfg.resolved_output()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _testing_error(model, problem, size, seed):
    pts = model.distribution.sample(size, [seed, 99])
    y = problem.evaluate_many(pts)
    return float(np.linalg.norm(model.predict(pts) - y) / np.linalg.norm(y))


# ----------------------------------------------------------------- commands

def cmd_basis(cfg: RunConfig):
    dist = load_distribution(cfg.distribution) if cfg.distribution else \
        oracles.get(cfg.oracle, cfg.seed).distribution
    t0 = time.perf_counter()
    with phase("basis", d=dist.dimension, p=cfg.order):
        basis = build_grouped_basis(dist, cfg.order, EpsPolicy(), threads=cfg.n_threads)
    elapsed = time.perf_counter() - t0
    out = _prepare_output(cfg)
    export = basis.to_dict()
    export["distribution"] = dist.to_dict()
    _write_json(out / "basis.json", export)
    if dist.is_single_mixture:
        with phase("moments", order=2 * cfg.order):
            table = moment_table(dist.mixture, cfg.order, threads=cfg.n_threads)
        table.to_csv(out / "moments.csv")
    report = {
        "d": basis.d, "p": basis.p, "n": basis.n,
        "epsilon": float(getattr(basis, "epsilon", 0.0)),
        "condition": float(getattr(basis, "condition", float("nan"))),
        "seconds": elapsed,
    }
    _write_json(out / "conditioning.json", report)
    print(f"n = {basis.n} basis functions (d={basis.d}, p={basis.p}); "
          f"regularization {report['epsilon']:.3g}; wrote {out / 'basis.json'}")
    return 0


def cmd_moments(cfg: RunConfig):
    dist = load_distribution(cfg.distribution) if cfg.distribution else \
        oracles.get(cfg.oracle, cfg.seed).distribution
    if not dist.is_single_mixture:
        raise ValidationError("moment dump needs a single mixture block")
    with phase("moments", order=2 * cfg.order):
        table = moment_table(dist.mixture, cfg.order, threads=cfg.n_threads)
    out = _prepare_output(cfg)
    table.to_csv(out / "moments.csv")
    print(f"{table.index_set.n} moments up to order {table.order} -> {out / 'moments.csv'}")
    return 0


def cmd_fit(cfg: RunConfig):
    dist, basis, problem = _load_problem(cfg)
    if cfg.exchange:
        oracle = ExchangeOracle(cfg.exchange, dist.dimension)
    else:
        oracle = problem
    strategies = list(STRATEGIES) if cfg.strategy == "all" else [cfg.strategy]
    out = _prepare_output(cfg)
    rows = []
    for strategy in strategies:
        trials = cfg.random_trials if (strategy == "random" and cfg.strategy == "all") else 1
        for trial in range(trials):
            seed = cfg.seed + trial
            with phase("fit", strategy=strategy, trial=trial):
                try:
                    res = run_adaptive(cfg.adaptive_config(strategy, seed), oracle, basis, dist)
                except MixPCEError as exc:
                    hist = getattr(exc, "history", None)
                    if hist and not isinstance(exc, AwaitingResponses):
                        write_history(hist, out / "history_partial.csv")
                    raise
            suffix = "" if len(strategies) == 1 else f"_{strategy}"
            if trials > 1:
                suffix += f"_{trial}"
            write_history(res.history, out / f"history{suffix}.csv")
            res.model.save(out / f"model{suffix}.json")
            test = (_testing_error(res.model, problem, cfg.test_size, cfg.seed)
                    if problem is not None else None)
            rows.append((strategy, trial, res.state.m, res.history[-1].training_error, test,
                         res.stop_reason))
            print(f"{strategy}: m={res.state.m} training_error={res.history[-1].training_error:.3e}"
                  + ("" if test is None else f" testing_error={test:.3e}")
                  + f" ({res.stop_reason})")
    if len(strategies) > 1:
        with open(out / "comparison.csv", "w", newline="") as fh:
            fh.write("strategy,trial,m_used,training_error,testing_error,stop_reason\n")
            for s, t, m, tr, te, why in rows:
                fh.write(f"{s},{t},{m},{fmt(tr)},{'' if te is None else fmt(te)},{why}\n")
    return 0


def cmd_validate(cfg: RunConfig):
    model = SparseSurrogate.load(cfg.model)
    if cfg.samples:
        pts, y = read_samples(cfg.samples, model.basis.d)
        if y is None:
            raise ValidationError(f"{cfg.samples} has no 'y' column")
    else:
        problem = oracles.get(cfg.oracle, cfg.seed)
        if model.distribution is None:
            model.distribution = problem.distribution
        pts = model.distribution.sample(cfg.test_size, [cfg.seed, 99])
        y = problem.evaluate_many(pts)
    if cfg.kde_samples and model.distribution is None:
        raise ValidationError("model has no distribution; pass --kde-samples 0")
    with phase("validate", points=len(y)):
        report = validate(model, pts, y, model.metadata.get("training_error"),
                          cfg.kde_samples, seed=cfg.seed)
    out = _prepare_output(cfg)
    summary = report.summary()
    summary["n_test"] = int(len(y))
    _write_json(out / "report.json", summary)
    if report.grid is not None:
        with open(out / "density.csv", "w", newline="") as fh:
            fh.write("y,density\n")
            for g, f in zip(report.grid, report.density):
                fh.write(f"{fmt(g)},{fmt(f)}\n")
    print(f"testing error {report.testing_error:.3e}; mean {report.mean:.6g}; "
          f"std {report.std:.6g}")
    return 0


def sweep_rows(cfg: RunConfig):
    """Coefficient and testing error over the ``epsilons x sparsities`` grid.

    ``m = n_samples`` random inputs from the synthetic mixture, responses
    ``Phi c + e`` with ``||e|| = noise`` exactly, and CoSaMP stopped at
    ``||Phi c - y|| <= epsilon`` (relative to ``||y||`` by default).
    """
    problem = oracles.synthetic8d(cfg.seed, noise=False)
    basis, c = problem.basis, problem.truth
    pts = problem.distribution.sample(cfg.n_samples, [cfg.seed, 5])
    Phi = basis.evaluate(pts)
    e = rng_from_seed([cfg.seed, 6]).standard_normal(cfg.n_samples)
    e *= cfg.noise / np.linalg.norm(e) if cfg.noise > 0 else 0.0
    y = Phi @ c + e
    test_pts = problem.distribution.sample(cfg.test_size, [cfg.seed, 7])
    Phi_test = basis.evaluate(test_pts)
    y_test = Phi_test @ c
    ny = float(np.linalg.norm(y))
    rows = []
    for s in cfg.sparsities:
        rip = rip_diagnostic(Phi, min(2 * s, basis.n), cfg.rip_trials, seed=[cfg.seed, s])
        for eps in cfg.epsilons:
            eps_abs = eps * ny if cfg.epsilon_mode == "relative" else eps
            sol = cosamp(RegressionProblem(Phi, y, s, eps_abs), max_iter=200,
                         ls_iters=cfg.ls_iters)
            coef_err = float(np.linalg.norm(sol.c - c))
            test_err = float(np.linalg.norm(Phi_test @ sol.c - y_test) / np.linalg.norm(y_test))
            bound = None
            if rip.kappa < 1:
                bound = coefficient_error_bound(c, s, rip.kappa, cfg.n_samples, cfg.noise,
                                       sol.residual_norm).bound
            rows.append({
                "epsilon": eps, "s": s, "coef_error": coef_err, "test_error": test_err,
                "residual_norm": sol.residual_norm, "iterations": sol.iterations,
                "kappa_2s_est": rip.kappa, "bound": bound,
            })
    return rows, problem


SWEEP_FIELDS = ("epsilon", "s", "coef_error", "test_error", "residual_norm", "iterations",
                "kappa_2s_est", "bound")


def cmd_sweep(cfg: RunConfig):
    with phase("sweep", cells=len(cfg.epsilons) * len(cfg.sparsities)):
        rows, _ = sweep_rows(cfg)
    out = _prepare_output(cfg)
    with open(out / "sweep.csv", "w", newline="") as fh:
        fh.write(",".join(SWEEP_FIELDS) + "\n")
        for r in rows:
            fh.write(",".join("" if r[k] is None else (str(r[k]) if isinstance(r[k], int)
                                                       else fmt(r[k])) for k in SWEEP_FIELDS))
            fh.write("\n")
    print(f"{len(rows)} sweep cells -> {out / 'sweep.csv'}")
    return 0


COMMANDS = {
    "basis": cmd_basis,
    "fit": cmd_fit,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "moments": cmd_moments,
}


# ------------------------------------------------------------------- parser

def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _sparsity(text):
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("sparsity must be an integer or 'auto'")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys override any flag")
    common.add_argument("--output-dir", dest="output_dir",
                        help=f"output directory (default: ${OUTPUT_ENV} or .)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads, 0 = all cores")
    common.add_argument("-v", "--verbose", action="store_true", help="log phase timings")

    parser = argparse.ArgumentParser(
        prog="mixpce",
        description="Sparse orthonormal polynomial surrogates for Gaussian-mixture inputs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def source(p):
        p.add_argument("--distribution", help="mixture specification JSON")
        p.add_argument("--oracle", choices=sorted(oracles.REGISTRY),
                       help="built-in synthetic simulator")

    p = sub.add_parser("basis", parents=[common], help="build and export the orthonormal basis")
    source(p)
    p.add_argument("--order", type=int, help="total polynomial order p")

    p = sub.add_parser("moments", parents=[common], help="dump the moment table (debug)")
    source(p)
    p.add_argument("--order", type=int, help="basis order p; moments up to 2p")

    p = sub.add_parser("fit", parents=[common], help="adaptive sparse fit")
    source(p)
    p.add_argument("--basis", help="basis JSON from `mixpce basis`")
    p.add_argument("--order", type=int)
    p.add_argument("--exchange", metavar="DIR",
                   help="file-exchange directory (pending_points.csv / responses.csv)")
    p.add_argument("--strategy", choices=STRATEGIES + ("all",))
    p.add_argument("--pool-size", dest="pool_size", type=int)
    p.add_argument("--initial", type=int, help="RRQR initial sample count")
    p.add_argument("--budget", type=int, help="maximum number of simulations")
    p.add_argument("--sparsity", type=_sparsity, help="integer or 'auto' (floor(m/3))")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--epsilon-mode", dest="epsilon_mode", choices=("relative", "absolute"))
    p.add_argument("--threshold", type=float, help="training-error stop")
    p.add_argument("--stabilization", type=float,
                   help="stop when the relative coefficient change is below this (0 = off)")
    p.add_argument("--refresh", type=int, help="full sparse re-solve every R iterations")
    p.add_argument("--k-clusters", dest="k_clusters", type=int)
    p.add_argument("--residual", choices=("signed", "absolute"))
    p.add_argument("--random-trials", dest="random_trials", type=int,
                   help="random-baseline repetitions when --strategy all")
    p.add_argument("--test-size", dest="test_size", type=int)

    p = sub.add_parser("validate", parents=[common], help="held-out error, statistics, density")
    p.add_argument("--model")
    p.add_argument("--oracle", choices=sorted(oracles.REGISTRY))
    p.add_argument("--samples", help="CSV with xi_1..xi_d,y")
    p.add_argument("--test-size", dest="test_size", type=int)
    p.add_argument("--kde-samples", dest="kde_samples", type=int, help="0 disables the density")

    p = sub.add_parser("sweep", parents=[common], help="coefficient error over epsilon x s")
    p.add_argument("--oracle", choices=["synthetic8d"])
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--noise", type=float, help="exact noise norm ||e||")
    p.add_argument("--epsilons", type=_float_list)
    p.add_argument("--sparsities", type=_int_list)
    p.add_argument("--epsilon-mode", dest="epsilon_mode", choices=("relative", "absolute"))
    p.add_argument("--ls-iters", dest="ls_iters", type=int,
                   help="inexact CoSaMP: CG steps per inner least-squares solve")
    p.add_argument("--rip-trials", dest="rip_trials", type=int)
    p.add_argument("--test-size", dest="test_size", type=int)
    return parser


def config_from_args(args) -> RunConfig:
    names = {f.name for f in dataclasses.fields(RunConfig)}
    given = {k: v for k, v in vars(args).items() if k in names and v is not None}
    cfg = RunConfig(**given)
    if args.config:
        cfg = apply_overrides(cfg, args.config)
    return cfg.validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except AwaitingResponses as exc:
        print(f"paused: {exc}")
        return 0
    except MixPCEError as exc:
        print(f"mixpce {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
