"""Distribution of the input-noise factor and its scaled maximum.

With additive Gaussian input noise, the projection of the noise onto one
encoder column is Gaussian with scale sigma_tilde, and the per-unit
multiplicative factor is X = e^D / (1 + h(e^D - 1)) for D ~ N(0,
sigma_tilde^2) and activation constant h.  Its density is tabulated in
closed form; the scaled maximum b_max = l * max(X_1..X_k) over k
independent factors gets the order-statistic density
(k/l) f_X(b/l) F_X(b/l)^(k-1) with the CDF estimated by Monte Carlo, and
Pr[b_max <= 1] is read off by trapezoidal integration.

Note the variance convention: the source analysis writes the projected
variance as sigma^2 * ||w||_2, while the standard identity for a linear
combination of i.i.d. Gaussians gives sigma^2 * ||w||_2^2.  The correct
form is the default; `paper_literal_variance=True` reproduces the other.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .rng import substream

__all__ = [
    "EnvNoiseProfile",
    "TabulatedPdf",
    "pdf_fX",
    "draw_factors",
    "estimate_cdf_FX",
    "pdf_b_max",
    "tabulate_pdf_b_max",
    "prob_bmax_leq_one",
    "sweep_sigma",
    "write_sweep_csv",
    "MIN_CDF_SAMPLES",
]

MIN_CDF_SAMPLES = 10_000


@dataclass(frozen=True)
class EnvNoiseProfile:
    """Parameters of the input-noise factor analysis.

    sigma: s.d. of the raw additive input noise.
    sigma_tilde: scale of the projected noise (derived from a weight row
        unless given directly).
    h: activation constant in [0, 1]; h = 0 makes X exactly lognormal.
    l: number of encoder units summed into the factor b.
    sample_count: how many independent factors the maximum ranges over.
    """

    sigma: float
    sigma_tilde: float
    h: float = 0.0
    l: int = 7
    sample_count: int = 100

    def __post_init__(self):
        if self.sigma < 0 or self.sigma_tilde < 0:
            raise ValueError("noise scales must be non-negative")
        if not 0.0 <= self.h <= 1.0:
            raise ValueError(f"h must lie in [0, 1], got {self.h}")
        if self.l < 1 or self.sample_count < 1:
            raise ValueError("l and sample_count must be at least 1")

    @classmethod
    def from_weights(
        cls,
        sigma: float,
        weight_row,
        h: float = 0.0,
        l: int = 7,
        sample_count: int = 100,
        paper_literal_variance: bool = False,
    ) -> "EnvNoiseProfile":
        """Derive sigma_tilde from one encoder weight row."""
        w = np.asarray(weight_row, dtype=float)
        norm = float(np.linalg.norm(w))
        var = sigma * sigma * (norm if paper_literal_variance else norm * norm)
        return cls(sigma=sigma, sigma_tilde=float(np.sqrt(var)), h=h, l=l,
                   sample_count=sample_count)


@dataclass(frozen=True)
class TabulatedPdf:
    """A density evaluated on an ascending grid."""

    grid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    name: str = ""

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly ascending")
        if np.any(self.density < 0):
            raise ValueError("density values must be non-negative")

    def trapezoid(self) -> float:
        return float(np.trapezoid(self.density, self.grid))


def pdf_fX(x, profile: EnvNoiseProfile):
    """Closed-form density of the per-unit factor X.

    f_X(x) = (1+h) / (sigma_tilde sqrt(2 pi)) * 1/(x (1 - h x + h))
             * exp(-(ln(x / (1 - h x + h)))^2 / (2 sigma_tilde^2)),
    zero outside x > 0 with 1 - h x + h > 0.  For h = 0 this is the
    lognormal(0, sigma_tilde^2) density.
    """
    x = np.asarray(x, dtype=float)
    st, h = profile.sigma_tilde, profile.h
    if st <= 0:
        raise ValueError("sigma_tilde must be positive to evaluate the density")
    out = np.zeros_like(x)
    denom = 1.0 - h * x + h
    ok = (x > 0) & (denom > 0)
    arg = x[ok] / denom[ok]
    out[ok] = (
        (1.0 + h)
        / (st * np.sqrt(2.0 * np.pi))
        / (x[ok] * denom[ok])
        * np.exp(-np.log(arg) ** 2 / (2.0 * st * st))
    )
    return out if out.ndim else float(out)


def draw_factors(profile: EnvNoiseProfile, size, rng) -> np.ndarray:
    """Sample X = e^D / (1 + h(e^D - 1)) with D ~ N(0, sigma_tilde^2).

    Large projections overflow e^D; the factor then saturates at 1/h
    (or +inf for h = 0), which is the correct limit for CDF counting.
    """
    d = rng.normal(0.0, profile.sigma_tilde, size)
    h = profile.h
    with np.errstate(over="ignore", invalid="ignore"):
        ed = np.exp(d)
        x = ed / (1.0 + h * (ed - 1.0))
    if h > 0.0:
        x = np.where(np.isinf(ed), 1.0 / h, x)
    return x


def estimate_cdf_FX(profile: EnvNoiseProfile, threshold: float,
                    mc_samples: int, seed: int = 0) -> float:
    """Monte Carlo estimate of Pr[X <= threshold]."""
    if mc_samples < MIN_CDF_SAMPLES:
        raise ValueError(
            f"mc_samples={mc_samples} too small; need at least {MIN_CDF_SAMPLES}"
        )
    rng = substream(seed, 0xF0)
    x = draw_factors(profile, mc_samples, rng)
    return float(np.mean(x <= threshold))


def _cdf_table(profile: EnvNoiseProfile, points, mc_samples: int, seed: int):
    """Empirical CDF of X at many points from one shared sample."""
    rng = substream(seed, 0xF0)
    xs = np.sort(draw_factors(profile, mc_samples, rng))
    return np.searchsorted(xs, points, side="right") / mc_samples


def pdf_b_max(b: float, profile: EnvNoiseProfile, mc_samples: int = 100_000,
              seed: int = 0) -> float:
    """Order-statistic density of the scaled maximum at a single point."""
    if b <= 0:
        raise ValueError(f"b must be positive, got {b}")
    if mc_samples < MIN_CDF_SAMPLES:
        raise ValueError(
            f"mc_samples={mc_samples} too small; need at least {MIN_CDF_SAMPLES}"
        )
    k, l = profile.sample_count, profile.l
    fx = pdf_fX(b / l, profile)
    Fx = _cdf_table(profile, np.asarray([b / l]), mc_samples, seed)[0]
    return float((k / l) * fx * Fx ** (k - 1))


def tabulate_pdf_b_max(profile: EnvNoiseProfile, grid, mc_samples: int = 100_000,
                       seed: int = 0) -> TabulatedPdf:
    """Order-statistic density on a grid, reusing one Monte Carlo sample."""
    grid = np.asarray(grid, dtype=float)
    k, l = profile.sample_count, profile.l
    fx = pdf_fX(grid / l, profile)
    Fx = _cdf_table(profile, grid / l, mc_samples, seed)
    return TabulatedPdf(grid=grid, density=(k / l) * fx * Fx ** (k - 1),
                        name="f_b_max")


def prob_bmax_leq_one(profile: EnvNoiseProfile, grid_step: float = 1e-3,
                      mc_samples: int = 100_000, seed: int = 0) -> float:
    """Trapezoidal integral of the b_max density over (0, 1]."""
    if not grid_step > 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    grid = np.arange(grid_step, 1.0 + grid_step / 2.0, grid_step)
    table = tabulate_pdf_b_max(profile, grid, mc_samples, seed)
    return min(1.0, table.trapezoid())


def sample_bmax_probability(profile: EnvNoiseProfile, reps: int = 100_000,
                            seed: int = 1) -> float:
    """Direct Monte Carlo of Pr[l * max(X_1..X_k) <= 1]; test oracle and
    cross-check for the trapezoidal route."""
    rng = substream(seed, 0xB1)
    x = draw_factors(profile, (reps, profile.sample_count), rng)
    return float(np.mean(profile.l * x.max(axis=1) <= 1.0))


def sweep_sigma(sigmas, profile_template: EnvNoiseProfile,
                weight_row=None, grid_step: float = 1e-3,
                mc_samples: int = 100_000, seed: int = 0,
                paper_literal_variance: bool = False):
    """Pr[b_max <= 1] per sigma; rows ordered by the input list.

    When a weight row is given, sigma_tilde is re-derived per sigma;
    otherwise sigma_tilde scales proportionally from the template.
    """
    sigmas = list(sigmas)
    if not sigmas:
        raise ValueError("sigma list must not be empty")
    rows = []
    for i, sigma in enumerate(sigmas):
        if weight_row is not None:
            prof = EnvNoiseProfile.from_weights(
                sigma, weight_row, h=profile_template.h, l=profile_template.l,
                sample_count=profile_template.sample_count,
                paper_literal_variance=paper_literal_variance,
            )
        else:
            if profile_template.sigma <= 0:
                raise ValueError("template sigma must be positive to rescale")
            st = profile_template.sigma_tilde * sigma / profile_template.sigma
            prof = replace(profile_template, sigma=sigma, sigma_tilde=st)
        rows.append((float(sigma), prob_bmax_leq_one(prof, grid_step, mc_samples,
                                                     seed=seed + i)))
    return rows


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma", "prob_bmax_leq_1"])
        for sigma, p in rows:
            writer.writerow([f"{sigma:.6g}", f"{p:.10g}"])


def write_pdf_csv(path, tables):
    """Emit (b, density) columns for one or more tabulated pdfs."""
    tables = list(tables)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["b"] + [t.name or f"pdf{i}" for i, t in enumerate(tables)])
        for idx in range(tables[0].grid.size):
            writer.writerow(
                [f"{tables[0].grid[idx]:.6g}"]
                + [f"{t.density[idx]:.10g}" for t in tables]
            )
