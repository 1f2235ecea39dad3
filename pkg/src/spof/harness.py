"""Data ingestion, synthetic corpus generation, and experiment sweeps.

Corpora are sequences of m-user batches with entries normalized to
[0, 1] by the per-column maximum.  Experiments train one mechanism per
(epsilon, trial) pair on a shared corpus, aggregate accuracy per
epsilon, and emit plain CSV.  The (corpus seed, train seed) pair fully
determines every output byte; Monte Carlo trials use derived seeds and
are independent of execution order.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .dp_mech import Dataset
from .rng import substream
from .trainers import TrainConfig, TrainResult, corpus_accuracy, train_dpsgd, train_spof

__all__ = [
    "Corpus",
    "ExperimentSpec",
    "ResultRow",
    "MECHANISMS",
    "ingest_csv",
    "synth_corpus",
    "single_user_view",
    "run_experiment",
    "sweep_c",
    "write_results_csv",
]

MECHANISMS = ("spof", "dpsgd", "fm", "nonprivate")


@dataclass(frozen=True)
class Corpus:
    """Normalized training corpus: a list of m x n batches."""

    batches: tuple = field(repr=False)
    column_max: np.ndarray = field(repr=False)

    @property
    def num_batches(self) -> int:
        return len(self.batches)

    @property
    def num_users(self) -> int:
        return self.batches[0].num_users

    @property
    def num_features(self) -> int:
        return self.batches[0].num_features


def _to_batches(matrix: np.ndarray, m: int) -> tuple:
    rows = matrix.shape[0]
    usable = (rows // m) * m
    if usable < rows:
        warnings.warn(
            f"dropping {rows - usable} trailing rows that do not fill an m={m} batch"
        )
    return tuple(
        Dataset(matrix[start:start + m]) for start in range(0, usable, m)
    )


def _normalize_columns(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    col_max = matrix.max(axis=0)
    zero = col_max == 0.0
    if zero.any():
        warnings.warn(
            f"columns {np.flatnonzero(zero).tolist()} are all zero; left unscaled"
        )
    divisor = np.where(zero, 1.0, col_max)
    return matrix / divisor, col_max


def ingest_csv(path, n_expected: int, normalize: bool = True, m: int = 2) -> Corpus:
    """Load a rectangular non-negative numeric CSV and batch it.

    Rows are grouped into m-user batches in file order.  Column-max
    normalization maps each column into [0, 1]; all-zero columns stay
    zero with a warning.
    """
    values = []
    with open(path, newline="") as fh:
        for r, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            if len(row) != n_expected:
                raise ValueError(
                    f"row {r}: expected {n_expected} columns, got {len(row)}"
                )
            parsed = []
            for c, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(f"row {r}, column {c}: non-numeric cell {cell!r}")
            values.append(parsed)
    matrix = np.asarray(values, dtype=float)
    if matrix.size == 0:
        raise ValueError("CSV contains no data rows")
    if matrix.min() < 0.0:
        bad = np.argwhere(matrix < 0.0)[0]
        raise ValueError(f"negative value at row {bad[0]}, column {bad[1]}")
    if normalize:
        matrix, col_max = _normalize_columns(matrix)
    else:
        col_max = np.ones(n_expected)
        if matrix.max() > 1.0:
            raise ValueError("unnormalized data must already lie in [0, 1]")
    return Corpus(batches=_to_batches(matrix, m), column_max=col_max)


def synth_corpus(n: int, m: int, batches: int, seed: int,
                 profile: str = "fitbit-like") -> Corpus:
    """Generate a positive-valued corpus with correlated columns.

    Rows share a low-dimensional latent activity level, mimicking how
    wearable metrics (steps, distance, calories, ...) co-vary; half the
    columns are uniform-type around the latent mix, half truncated
    Gaussian, and per-column scales are heterogeneous.  Columns are then
    normalized by their maxima, so every column max is exactly 1.
    """
    if profile != "fitbit-like":
        raise ValueError(f"unknown corpus profile {profile!r}")
    rng = substream(seed, 0xC0)
    rows = batches * m
    latents = rng.uniform(0.0, 1.0, (rows, 3))
    mix = rng.uniform(0.1, 1.0, (3, n))
    base = latents @ mix / mix.sum(axis=0)
    scales = rng.uniform(0.5, 50.0, n)
    uniform_type = rng.random(n) < 0.5
    uniform_cols = 0.45 + 0.55 * np.clip(
        base + rng.uniform(-0.08, 0.08, (rows, n)), 0.0, 1.0
    )
    gauss_cols = np.clip(rng.normal(0.72 + 0.2 * (base - 0.5), 0.1), 0.0, 1.0)
    matrix = np.where(uniform_type, uniform_cols, gauss_cols) * scales
    matrix, col_max = _normalize_columns(matrix)
    return Corpus(batches=_to_batches(matrix, m), column_max=col_max)


def single_user_view(corpus: Corpus) -> Corpus:
    """Reshape an m-user corpus into a stream of single-user batches."""
    matrix = np.vstack([b.rows for b in corpus.batches])
    return Corpus(batches=_to_batches(matrix, 1), column_max=corpus.column_max)


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: mechanisms x epsilons x Monte Carlo trials."""

    mechanisms: tuple = ("spof",)
    epsilons: tuple = (0.5, 1.0, 2.0, 4.0, 8.0)
    env_sigma: float = 0.0
    mc_trials: int = 10
    train_config: TrainConfig = TrainConfig()
    output_path: str | None = None

    def __post_init__(self):
        mechs = (self.mechanisms,) if isinstance(self.mechanisms, str) else tuple(self.mechanisms)
        object.__setattr__(self, "mechanisms", mechs)
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        for mech in self.mechanisms:
            if mech not in MECHANISMS:
                raise ValueError(f"unknown mechanism {mech!r}; choose from {MECHANISMS}")
        if self.mc_trials < 1:
            raise ValueError("mc_trials must be at least 1")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("all epsilons must be positive")


@dataclass(frozen=True)
class ResultRow:
    mechanism: str
    epsilon: float
    sigma: float
    mean_accuracy: float
    sd_accuracy: float
    noise_draws: int
    diverged_trials: int


def _trial_seed(base_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence((base_seed, trial)).generate_state(1)[0])


def _run_one(mechanism: str, corpus: Corpus, config: TrainConfig) -> TrainResult:
    if mechanism == "spof":
        return train_spof(corpus.batches, config)
    if mechanism == "dpsgd":
        return train_dpsgd(corpus.batches, config)
    if mechanism == "fm":
        # Single-user coefficient perturbation without stabilization.
        return train_spof(single_user_view(corpus).batches,
                          replace(config, c_scalar=0.0))
    if mechanism == "nonprivate":
        return train_spof(corpus.batches, replace(config, epsilon=math.inf))
    raise ValueError(f"unknown mechanism {mechanism!r}")


def _final_accuracy(mechanism: str, corpus: Corpus, result: TrainResult) -> float:
    eval_corpus = single_user_view(corpus) if mechanism == "fm" else corpus
    return corpus_accuracy(result.params, eval_corpus.batches)


def run_experiment(spec: ExperimentSpec, corpus: Corpus) -> list[ResultRow]:
    """Train every mechanism at every epsilon for mc_trials trials.

    Divergent runs are kept as flagged trials (their last pre-divergence
    accuracy still enters the aggregate).  The nonprivate baseline
    ignores epsilon; it is trained once per trial and reported on every
    epsilon row so the output always has |mechanisms| x |epsilons| rows.
    """
    rows: list[ResultRow] = []
    sigma = spec.env_sigma
    for mechanism in spec.mechanisms:
        nonprivate_cache: dict[int, tuple[float, TrainResult]] = {}
        for epsilon in spec.epsilons:
            accs, draws, diverged = [], 0, 0
            for trial in range(spec.mc_trials):
                seed = _trial_seed(spec.train_config.seed, trial)
                config = replace(spec.train_config, epsilon=epsilon,
                                 env_sigma=sigma, seed=seed)
                if mechanism == "nonprivate":
                    if trial not in nonprivate_cache:
                        res = _run_one(mechanism, corpus, config)
                        nonprivate_cache[trial] = (
                            _final_accuracy(mechanism, corpus, res), res,
                        )
                    acc, result = nonprivate_cache[trial]
                else:
                    result = _run_one(mechanism, corpus, config)
                    acc = _final_accuracy(mechanism, corpus, result)
                accs.append(acc)
                draws += result.counters.noise_draws
                diverged += int(result.diverged)
            rows.append(ResultRow(
                mechanism=mechanism,
                epsilon=epsilon,
                sigma=sigma,
                mean_accuracy=float(np.mean(accs)),
                sd_accuracy=float(np.std(accs)),
                noise_draws=draws,
                diverged_trials=diverged,
            ))
    if spec.output_path:
        write_results_csv(spec.output_path, rows)
    return rows


def write_results_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "mechanism", "epsilon", "sigma", "mean_accuracy", "sd_accuracy",
            "noise_draws", "diverged_trials",
        ])
        for r in rows:
            writer.writerow([
                r.mechanism, f"{r.epsilon:.6g}", f"{r.sigma:.6g}",
                f"{r.mean_accuracy:.6f}", f"{r.sd_accuracy:.6f}",
                r.noise_draws, r.diverged_trials,
            ])


def sweep_c(spec: ExperimentSpec, corpus: Corpus, c_grid=None,
            plateau_tol: float = 0.5):
    """Mean accuracy per stabilization constant, plus the plateau point.

    The plateau is the smallest grid value beyond which consecutive
    accuracy changes stay below plateau_tol (absolute percentage
    points); defaults to the grid maximum when no plateau appears.
    """
    if c_grid is None:
        c_grid = np.arange(0.0, 2.5 + 1e-9, 0.25)
    c_grid = [float(c) for c in c_grid]
    if not c_grid:
        raise ValueError("c grid must not be empty")
    epsilon = spec.epsilons[0]
    means = []
    for c_value in c_grid:
        accs = []
        for trial in range(spec.mc_trials):
            seed = _trial_seed(spec.train_config.seed, trial)
            config = replace(spec.train_config, epsilon=epsilon,
                             env_sigma=spec.env_sigma, seed=seed,
                             c_scalar=c_value)
            result = train_spof(corpus.batches, config)
            accs.append(_final_accuracy("spof", corpus, result))
        means.append(float(np.mean(accs)))
    plateau = c_grid[-1]
    if len(c_grid) > 1:
        deltas = np.abs(np.diff(means))
        for k in range(len(c_grid)):
            if np.all(deltas[k:] < plateau_tol):
                plateau = c_grid[k]
                break
    return list(zip(c_grid, means)), plateau
