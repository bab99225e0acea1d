"""Experiment engine: synthetic manifolds, rate-distortion sweeps, width
diagnostics and CSV emission.

A sweep (:func:`run_experiment`) is a pure function of its
:class:`ExperimentConfig`: all randomness is derived from the master
seed by a fixed counter scheme (64-bit words of
``numpy.random.SeedSequence(master_seed)``: word 0 seeds the training
sample, word 1 the test sample, word ``2 + i`` the ensemble of task
``i`` in the sorted task list).  Each task = one (scheme, level,
oversampling) triple, one shared ensemble draw for all test points.

Oversampling values requested for a sigma_delta(r) scheme are snapped
up to the nearest admissible value (``lam = 1`` mod r) required by the
condenser profile; the CSV records the value actually used.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ensembles
from .condense import build_condenser, msq_condenser
from .gmra import Gmra, build_gmra
from .quantizers import (SCHEME_BETA, SCHEME_MSQ, SCHEME_SIGMA_DELTA,
                         QuantizerSpec, beta_spec, msq_spec, quantize_bits,
                         sigma_delta_spec)
from .recover import reconstruct

log = logging.getLogger(__name__)

MANIFOLDS = ("sphere", "circle", "flat_disk")

CSV_COLUMNS = ["scheme", "r_or_beta", "j", "p", "lambda", "m", "ensemble",
               "seed", "mean_rel_err", "median_rel_err", "max_rel_err", "wall_ms"]


def sample_manifold(manifold: str, n: int, N: int, seed: int, mu: float = 0.05,
                    *, d: int | None = None, frame_seed: int | None = None) -> np.ndarray:
    """Uniform samples of a synthetic manifold, scaled into radius 1-mu.

    ``sphere`` is the round d-sphere (normalized Gaussians in R^{d+1})
    embedded by a seed-fixed random orthonormal map; ``circle`` is the
    1-sphere; ``flat_disk`` the uniform unit 2-disk (zero curvature
    control case).

    The embedding frame is drawn from a stream keyed by ``frame_seed``
    (default: ``seed``) and the samples from a separate stream keyed by
    ``seed``, so calls sharing a ``frame_seed`` produce fresh samples of
    the same embedded manifold.
    """
    if manifold not in MANIFOLDS:
        raise ValueError(f"unknown manifold {manifold!r}")
    if not 0.0 <= mu < 1.0:
        raise ValueError("mu must lie in [0, 1)")
    if manifold == "circle":
        d = 1
    elif manifold == "flat_disk":
        d = 2
    elif d is None:
        raise ValueError("sphere requires the intrinsic dimension d")
    if d + 1 > N and manifold != "flat_disk":
        raise ValueError(f"need d + 1 <= N to embed a {d}-sphere, got d={d}, N={N}")
    if manifold == "flat_disk" and d >= N:
        raise ValueError("flat_disk needs N >= 3")
    fs = seed if frame_seed is None else frame_seed
    frame_rng = np.random.default_rng(np.random.SeedSequence((fs, 1)))
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    k = d + 1 if manifold != "flat_disk" else d
    frame, _ = np.linalg.qr(frame_rng.standard_normal((N, k)))
    if manifold == "flat_disk":
        radii = np.sqrt(rng.uniform(size=n))
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        local = np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=1)
    else:
        g = rng.standard_normal((n, k))
        local = g / np.linalg.norm(g, axis=1, keepdims=True)
    return (1.0 - mu) * (local @ frame.T)


@dataclass
class ExperimentConfig:
    ambient_dim: int
    manifold: str
    intrinsic_dim: int
    n_train: int
    n_test: int
    j_max: int
    levels: list[int]
    schemes: list[QuantizerSpec]
    p: int
    lambdas: list[int]
    ensemble: str = ensembles.GAUSSIAN
    seed: int = 0
    mu: float = 0.05
    out: str | None = None


@dataclass
class ResultRow:
    scheme: str
    r_or_beta: float | None
    j: int
    p: int
    lam: int
    m: int
    ensemble: str
    seed: int
    rel_errors: np.ndarray = field(repr=False)
    mean_rel_err: float = 0.0
    median_rel_err: float = 0.0
    max_rel_err: float = 0.0
    wall_ms: int = 0

    def sort_key(self) -> tuple:
        return (self.scheme, -1.0 if self.r_or_beta is None else float(self.r_or_beta),
                self.j, self.p, self.lam)


def parse_scheme(token: str) -> QuantizerSpec:
    token = token.strip().lower()
    if token == "msq":
        return msq_spec()
    if token.startswith("sd"):
        return sigma_delta_spec(int(token[2:]))
    if token.startswith("beta"):
        return QuantizerSpec(SCHEME_BETA, beta=float(token[4:]), p=None)
    raise ValueError(f"cannot parse scheme token {token!r} (expected msq, sd<r> or beta<value>)")


_LIST_KEYS = {"levels", "lambdas", "schemes"}
_INT_KEYS = {"ambient_dim", "intrinsic_dim", "n_train", "n_test", "j_max", "p", "seed"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` config format (lists comma-separated,
    ``#`` starts a comment).  Keys mirror ExperimentConfig fields."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _LIST_KEYS:
            items = [tok.strip() for tok in val.split(",") if tok.strip()]
            if key == "schemes":
                values[key] = [parse_scheme(tok) for tok in items]
            else:
                values[key] = [int(tok) for tok in items]
        elif key in _INT_KEYS:
            values[key] = int(val)
        elif key == "mu":
            values[key] = float(val)
        elif key in ("manifold", "ensemble", "out"):
            values[key] = val
        else:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
    missing = {"ambient_dim", "manifold", "intrinsic_dim", "n_train", "n_test",
               "j_max", "levels", "schemes", "p", "lambdas", "seed"} - set(values)
    if missing:
        raise ValueError(f"config is missing keys: {', '.join(sorted(missing))}")
    return ExperimentConfig(**values)


def snap_lambda(spec: QuantizerSpec, lam: int) -> int:
    """Smallest admissible oversampling >= lam for the scheme's condenser."""
    if spec.scheme == SCHEME_SIGMA_DELTA:
        rem = (lam - 1) % spec.r
        if rem:
            return lam + spec.r - rem
    return lam


def derived_seeds(master_seed: int, count: int) -> list[int]:
    """The documented counter scheme: 64-bit words of SeedSequence(master)."""
    words = np.random.SeedSequence(master_seed).generate_state(2 * count, dtype=np.uint64)
    return [int(words[2 * i]) for i in range(count)]


def training_points_for(cfg: ExperimentConfig) -> np.ndarray:
    seed = derived_seeds(cfg.seed, 1)[0]
    return sample_manifold(cfg.manifold, cfg.n_train, cfg.ambient_dim, seed,
                           cfg.mu, d=cfg.intrinsic_dim, frame_seed=cfg.seed)


def test_points_for(cfg: ExperimentConfig) -> np.ndarray:
    seed = derived_seeds(cfg.seed, 2)[1]
    return sample_manifold(cfg.manifold, cfg.n_test, cfg.ambient_dim, seed,
                           cfg.mu, d=cfg.intrinsic_dim, frame_seed=cfg.seed)


def build_gmra_for(cfg: ExperimentConfig) -> Gmra:
    return build_gmra(training_points_for(cfg), cfg.intrinsic_dim, cfg.j_max, cfg.seed)


def _task_list(cfg: ExperimentConfig) -> list[tuple[QuantizerSpec, int, int]]:
    tasks = []
    seen = set()
    for spec in sorted(cfg.schemes, key=lambda s: s.label):
        for j in sorted(cfg.levels):
            for lam in sorted(cfg.lambdas):
                snapped = snap_lambda(spec, lam)
                if snapped != lam:
                    log.warning("scheme %s: oversampling %d snapped to %d", spec.label, lam, snapped)
                key = (spec, j, snapped)
                if key not in seen:
                    seen.add(key)
                    tasks.append(key)
    return tasks


def _run_task(cfg: ExperimentConfig, gmra: Gmra, X_test: np.ndarray,
              spec: QuantizerSpec, j: int, lam: int, ens_seed: int) -> ResultRow:
    m = cfg.p * lam
    if spec.scheme == SCHEME_BETA:
        spec = beta_spec(spec.beta, cfg.p)
    ens = ensembles.sample_ensemble(cfg.ensemble, m, cfg.ambient_dim, ens_seed)
    if spec.scheme == SCHEME_MSQ:
        cond = msq_condenser(m)
    else:
        cond = build_condenser(spec, m, cfg.p)
    start = time.perf_counter()
    Y = ensembles.apply(ens, X_test)
    Q, _ = quantize_bits(spec, Y)
    errs = np.empty(X_test.shape[0])
    for i in range(X_test.shape[0]):
        res = reconstruct(gmra, j, ens, spec, cond, Q[i])
        errs[i] = np.linalg.norm(res.x_sharp - X_test[i]) / np.linalg.norm(X_test[i])
    wall_ms = int(round((time.perf_counter() - start) * 1000.0))
    r_or_beta = spec.r if spec.scheme == SCHEME_SIGMA_DELTA else (
        spec.beta if spec.scheme == SCHEME_BETA else None)
    return ResultRow(scheme=spec.scheme, r_or_beta=r_or_beta, j=j, p=cfg.p, lam=lam,
                     m=m, ensemble=cfg.ensemble, seed=ens_seed, rel_errors=errs,
                     mean_rel_err=float(errs.mean()), median_rel_err=float(np.median(errs)),
                     max_rel_err=float(errs.max()), wall_ms=wall_ms)


def run_experiment(cfg: ExperimentConfig, gmra: Gmra | None = None,
                   threads: int = 1) -> list[ResultRow]:
    """Run the full sweep; returns one row per (scheme, level, oversampling).

    The GMRA is built once from the config's training sample unless a
    pre-built one (from the same config) is passed in.  A failing sweep
    point is logged and skipped; the others continue.
    """
    for j in cfg.levels:
        if j > cfg.j_max:
            raise ValueError(f"level {j} exceeds j_max={cfg.j_max}")
    if gmra is None:
        gmra = build_gmra_for(cfg)
    X_test = test_points_for(cfg)
    tasks = _task_list(cfg)
    seeds = derived_seeds(cfg.seed, 2 + len(tasks))[2:]

    def run_one(item):
        (spec, j, lam), ens_seed = item
        try:
            return _run_task(cfg, gmra, X_test, spec, j, lam, ens_seed)
        except Exception:
            log.exception("sweep point failed: scheme=%s j=%d lambda=%d", spec.label, j, lam)
            return None

    items = list(zip(tasks, seeds))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, items))
    else:
        results = [run_one(item) for item in items]
    rows = [r for r in results if r is not None]
    rows.sort(key=ResultRow.sort_key)
    if cfg.out:
        emit_csv(rows, cfg.out)
    return rows


@dataclass
class WidthEstimate:
    estimate: float
    stderr: float
    radius: float
    n_draws: int


def estimate_gaussian_width(points: np.ndarray, n_draws: int, seed: int) -> WidthEstimate:
    """Monte Carlo mean of ``sup_x <g, x>`` over the point set, with the
    standard error of the mean, plus the set's max norm."""
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if X.shape[0] < 1:
        raise ValueError("point set is empty")
    if n_draws < 2:
        raise ValueError("need at least 2 draws for a standard error")
    rng = np.random.default_rng(seed)
    N = X.shape[1]
    sups = np.empty(n_draws)
    block = max(1, 8_000_000 // max(X.shape[0], 1))
    for s in range(0, n_draws, block):
        G = rng.standard_normal((min(block, n_draws - s), N))
        sups[s:s + G.shape[0]] = (G @ X.T).max(axis=1)
    return WidthEstimate(estimate=float(sups.mean()),
                         stderr=float(sups.std(ddof=1) / np.sqrt(n_draws)),
                         radius=float(np.linalg.norm(X, axis=1).max()),
                         n_draws=n_draws)


def emit_csv(rows: list[ResultRow], path: str) -> None:
    """Write rows (sorted config-lexicographically) with a fixed header."""
    ordered = sorted(rows, key=ResultRow.sort_key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in ordered:
            writer.writerow([
                r.scheme,
                "" if r.r_or_beta is None else f"{r.r_or_beta:g}",
                r.j, r.p, r.lam, r.m, r.ensemble, r.seed,
                f"{r.mean_rel_err:.12g}", f"{r.median_rel_err:.12g}",
                f"{r.max_rel_err:.12g}", r.wall_ms,
            ])
