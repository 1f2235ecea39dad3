"""Cross-entropy loss of the distributed autoencoder and its quadratic form.

The exact per-user loss sums, over features,
x * log(1 + e^-z) + (1 - x) * log(1 + e^z).  Expanded to second order
around z = 0 it becomes the polynomial

    n*log(2) + sum_i [ (0.5 - x_i) * z_i + (0.5*x_i - 0.25) * z_i**2 ],

whose coefficients carry all dependence on the private data, so noising
the coefficients privatizes the training signal.  This module also
provides the stabilized variant (decoder shifted by a constant vector,
z -> z + shift), the input-noise variant (multiplicative per-unit
factors b and cross terms t), and the truncation-error bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .da_model import DaParams, encode, z_vector
from .dp_mech import Dataset

__all__ = [
    "LOG2",
    "LossCoeffs",
    "StabilizedCoeffs",
    "NoisyLossCoeffs",
    "softplus",
    "exact_loss",
    "coeffs",
    "approx_loss",
    "approx_loss_grad_z",
    "taylor_error_bound",
    "stabilize",
    "noisy_factors",
]

LOG2 = float(np.log(2.0))


def softplus(z):
    """log(1 + e^z) computed as max(z, 0) + log1p(e^-|z|); no overflow."""
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


@dataclass(frozen=True)
class LossCoeffs:
    """Per-feature quadratic-loss coefficients for one user row.

    constant is log(2) for every feature; linear = 0.5 - x;
    quadratic = 0.5*x - 0.25.  For x in [0,1] the linear coefficients
    lie in [-0.5, 0.5] and the quadratic ones in [-0.25, 0.25].
    """

    linear: np.ndarray = field(repr=False)
    quadratic: np.ndarray = field(repr=False)

    @property
    def constant(self) -> float:
        return LOG2

    @property
    def num_features(self) -> int:
        return self.linear.size


@dataclass(frozen=True)
class StabilizedCoeffs:
    """Quadratic-loss coefficients after the decoder shift z -> z + shift.

    Expanding the original polynomial at the shifted variable gives, per
    feature,

        constant_i  = log(2) + shift*linear_i + shift**2*quadratic_i
        linear_i'   = linear_i + 2*shift*quadratic_i
        quadratic_i' = quadratic_i

    so evaluating these at z reproduces the original polynomial at
    z + shift identically.  shift = 0 recovers the original coefficients.
    """

    shift: float
    constant: np.ndarray = field(repr=False)
    linear: np.ndarray = field(repr=False)
    quadratic: np.ndarray = field(repr=False)

    def evaluate(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(np.sum(self.constant + self.linear * z + self.quadratic * z * z))


@dataclass(frozen=True)
class NoisyLossCoeffs:
    """Coefficients when the encoder input carries additive noise.

    unit_factors holds the per-unit multiplicative factors b_{j,r} (all 1
    at zero noise); factor_sum is their sum b_j (= l at zero noise);
    cross_terms is the per-feature vector t with the property
    factor_sum * z - cross_terms == decoder block applied to the noisy
    code.  linear and quadratic are the clean coefficients scaled by
    factor_sum; the loss variable shifts to z - cross_terms/factor_sum.
    """

    unit_factors: np.ndarray = field(repr=False)
    cross_terms: np.ndarray = field(repr=False)
    linear: np.ndarray = field(repr=False)
    quadratic: np.ndarray = field(repr=False)

    @property
    def factor_sum(self) -> float:
        return float(self.unit_factors.sum())

    @property
    def constant(self) -> float:
        return LOG2

    def shifted_z(self, z) -> np.ndarray:
        """The effective loss variable b_j * z - t."""
        return self.factor_sum * np.asarray(z, dtype=float) - self.cross_terms


def exact_loss(params: DaParams, data: Dataset) -> float:
    """Exact cross-entropy loss summed over all users and features."""
    rows = data.rows if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if rows.shape != (params.num_users, params.num_features):
        raise ValueError(
            f"data shape {rows.shape} does not match model "
            f"({params.num_users}, {params.num_features})"
        )
    total = 0.0
    for j in range(params.num_users):
        h = encode(params, j, rows[j])
        z = z_vector(params, j, h)
        # x*log(1+e^-z) + (1-x)*log(1+e^z), both via the stable softplus
        total += float(np.sum(rows[j] * softplus(-z) + (1.0 - rows[j]) * softplus(z)))
    return total


def coeffs(x_row) -> LossCoeffs:
    """Quadratic-loss coefficients for one user row (entries in [0, 1])."""
    x = np.asarray(x_row, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single feature row")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("entries must lie in [0, 1]")
    return LossCoeffs(linear=0.5 - x, quadratic=0.5 * x - 0.25)


def approx_loss(c: LossCoeffs, z) -> float:
    """Quadratic loss n*log(2) + sum(linear*z + quadratic*z**2)."""
    z = np.asarray(z, dtype=float)
    if z.shape != c.linear.shape:
        raise ValueError("z must match the coefficient length")
    return float(c.num_features * LOG2 + np.sum(c.linear * z + c.quadratic * z * z))


def approx_loss_grad_z(c: LossCoeffs, z) -> np.ndarray:
    """Gradient of the quadratic loss with respect to z."""
    z = np.asarray(z, dtype=float)
    return c.linear + 2.0 * c.quadratic * z


def taylor_error_bound(G: float, delta: float) -> float:
    """Truncation-error bound 2*G*(e^delta - 1 - delta - delta**2/2).

    G caps |f^(r)| for every order r >= 3 of the per-feature loss terms;
    delta bounds |z - expansion point|.  The bound vanishes as delta -> 0.
    """
    if not G > 0:
        raise ValueError(f"G must be positive, got {G}")
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    return 2.0 * G * (np.expm1(delta) - delta - delta * delta / 2.0)


def stabilize(c: LossCoeffs, c_scalar: float, h) -> StabilizedCoeffs:
    """Coefficients of the loss after adding a constant vector (every
    entry c_scalar) to the user's decoder sub-columns.

    The decoder shift moves the loss variable to z + shift with
    shift = c_scalar * sum(h).  The returned coefficients satisfy the
    identity stabilized(z) == original(z + shift) exactly; the paper's
    grouped form drops the shift*linear cross terms, and we keep them so
    the identity holds (the matching inflated sensitivity lives in
    spof.sensitivity).
    """
    if c_scalar < 0:
        raise ValueError(f"c_scalar must be non-negative, got {c_scalar}")
    h = np.asarray(h, dtype=float)
    shift = float(c_scalar * h.sum())
    return StabilizedCoeffs(
        shift=shift,
        constant=LOG2 + shift * c.linear + shift * shift * c.quadratic,
        linear=c.linear + 2.0 * shift * c.quadratic,
        quadratic=c.quadratic.copy(),
    )


def _unit_noise_factors(proj, h):
    """Per-unit factor e^p / (1 + (e^p - 1) h) for projected noise p.

    Exactly 1 at p = 0 for any h.  For large positive p the direct form
    overflows, so switch to the equivalent limit 1/h.  Sigmoid outputs
    live in the open interval (0, 1); float saturation to exactly 0 or 1
    is clamped away so the factors stay finite.
    """
    proj = np.asarray(proj, dtype=float)
    h = np.clip(np.asarray(h, dtype=float), 1e-300, 1.0 - 1e-16)
    out = np.empty_like(proj)
    big = proj > 700.0
    ep = np.exp(proj[~big])
    out[~big] = ep / (1.0 + (ep - 1.0) * h[~big])
    out[big] = 1.0 / h[big]
    return out


def noisy_factors(params: DaParams, user_j: int, x, env_noise) -> NoisyLossCoeffs:
    """Coefficients induced by additive input noise for user j.

    The code is computed from the noiseless x; the noise enters through
    its projection onto the encoder columns.  Satisfies
    factor_sum * z - cross_terms == decoder block applied to the noisy
    code, and reduces to unit factors with an unshifted variable at zero
    noise.
    """
    x = np.asarray(x, dtype=float)
    noise = np.asarray(env_noise, dtype=float)
    if noise.shape != x.shape:
        raise ValueError("noise vector must match the feature length")
    if not np.all(np.isfinite(noise)):
        raise ValueError("noise entries must be finite")
    h = encode(params, user_j, x)
    proj = params.encoders[user_j].T @ noise
    unit = _unit_noise_factors(proj, h)
    b_sum = float(unit.sum())
    block = params.decoder_block(user_j)
    cross = block.T @ ((b_sum - unit) * h)
    c = coeffs(x)
    return NoisyLossCoeffs(
        unit_factors=unit,
        cross_terms=cross,
        linear=b_sum * c.linear,
        quadratic=b_sum * c.quadratic,
    )
