"""Training loops for the two privatization mechanisms.

The coefficient-perturbation trainer adds a constant stabilization
vector to each user's decoder block, noises the per-feature loss
coefficients with Laplace noise calibrated to the stabilized
sensitivity, and descends the perturbed quadratic.  The gradient
trainer computes the per-feature expansion-point gradient, clips it to
l2 norm C, noises the clipped vector, and descends.  Both chain the
per-feature z gradient through the decoder block and the encoder
analytically, and both update users in fixed order for determinism.

Per-user randomness is derived from (seed, epoch, batch, user), so one
user's noise never depends on another user's data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .da_model import DaParams, accuracy, init_params, reconstruct, sigmoid
from .dp_mech import Dataset, laplace_from_uniform
from .rng import substream
from .sensitivity import sgd_sensitivity, spof_sensitivity_stabilized_noisy
from .taylor_loss import LOG2, coeffs, noisy_factors

__all__ = [
    "TrainConfig",
    "OpCounters",
    "EpochMetrics",
    "TrainResult",
    "train_spof",
    "train_dpsgd",
    "grad_check",
    "corpus_accuracy",
    "DIVERGENCE_LIMIT",
]

DIVERGENCE_LIMIT = 1e6

# Stream tags keep environmental and privatization noise independent.
_ENV_TAG = 1
_DP_TAG = 2


@dataclass(frozen=True)
class TrainConfig:
    """Shared configuration for both trainers.

    epsilon = math.inf disables privatization noise (the zero-noise
    limit); env_sigma = 0 disables input noise.  The clipping threshold
    applies to the gradient trainer only, the stabilization constant to
    the coefficient trainer only.
    """

    eta: float = 0.01
    epsilon: float = math.inf
    clip: float = 4.0
    c_scalar: float = 2.5
    epochs: int = 1
    env_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"learning rate must be positive, got {self.eta}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.clip > 0:
            raise ValueError(f"clipping threshold must be positive, got {self.clip}")
        if self.c_scalar < 0:
            raise ValueError(f"c_scalar must be non-negative, got {self.c_scalar}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be at least 1, got {self.epochs}")
        if self.env_sigma < 0:
            raise ValueError(f"env_sigma must be non-negative, got {self.env_sigma}")

    @property
    def private(self) -> bool:
        return math.isfinite(self.epsilon)


@dataclass
class OpCounters:
    """Privatization-side operation counts, monotone during a run."""

    perturbations: int = 0
    clip_divisions: int = 0
    norm_ops: int = 0
    noise_draws: int = 0


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    accuracy: float


@dataclass
class TrainResult:
    params: DaParams
    metrics: list[EpochMetrics] = field(default_factory=list)
    counters: OpCounters = field(default_factory=OpCounters)
    diverged: bool = False


def _as_batches(data) -> list[Dataset]:
    if isinstance(data, Dataset):
        return [data]
    batches = list(data)
    if not batches:
        raise ValueError("training data must contain at least one batch")
    return batches


def _default_width(n: int) -> int:
    return max(1, n // 2)


def corpus_accuracy(params: DaParams, batches, stride: int = 1) -> float:
    """Mean reconstruction accuracy over (a stride of) the corpus."""
    batches = _as_batches(batches)
    total, count = 0.0, 0
    for batch in batches[::stride]:
        for j in range(params.num_users):
            x_hat = reconstruct(params, j, sigmoid(params.encoders[j].T @ batch.rows[j]))
            total += accuracy(batch.rows[j][None, :], x_hat[None, :])
            count += 1
    return total / count


def _chain_update(params: DaParams, user_j: int, x, h, g, eta: float):
    """Apply one SGD step from the per-feature z gradient g."""
    l = params.code_width
    block = params.decoder_block(user_j)
    grad_h = block @ g
    params.encoders[user_j] -= eta * np.outer(x, grad_h * h * (1.0 - h))
    params.decoder[user_j * l:(user_j + 1) * l, :] -= eta * np.outer(h, g)


def _guard(loss: float) -> bool:
    return not math.isfinite(loss) or abs(loss) > DIVERGENCE_LIMIT


def train_spof(data, config: TrainConfig,
               params: DaParams | None = None) -> TrainResult:
    """Coefficient-perturbation training over the given batches.

    The stabilization vector (every entry c_scalar) is folded into each
    user's decoder block once up front; the returned parameters are the
    deployable shifted model.  Each user step perturbs the 2n loss
    coefficients with Laplace noise at scale sensitivity/(sqrt(2) eps),
    where the sensitivity uses the current per-user shift c_scalar *
    sum(h) and, under input noise, the factor sum of the unit noise
    factors.
    """
    batches = _as_batches(data)
    m, n = batches[0].num_users, batches[0].num_features
    if params is None:
        params = init_params(n, _default_width(n), m, config.seed)
    else:
        params = params.copy()
    if config.c_scalar > 0.0:
        params.decoder += config.c_scalar
    result = TrainResult(params=params)
    counters = result.counters

    for epoch in range(config.epochs):
        loss_sum, loss_count = 0.0, 0
        for b, batch in enumerate(batches):
            for j in range(m):
                x = batch.rows[j]
                h = sigmoid(params.encoders[j].T @ x)
                z = params.decoder_block(j).T @ h

                if config.env_sigma > 0.0:
                    env_rng = substream(config.seed, _ENV_TAG, epoch, b, j)
                    noise = env_rng.normal(0.0, config.env_sigma, n)
                    nc = noisy_factors(params, j, x, noise)
                    factor = nc.factor_sum
                    linear, quadratic = nc.linear, nc.quadratic
                    v = z - nc.cross_terms / factor
                else:
                    factor = 1.0
                    c = coeffs(x)
                    linear, quadratic = c.linear.copy(), c.quadratic.copy()
                    v = z

                if config.private:
                    shift = config.c_scalar * float(h.sum())
                    sens = spof_sensitivity_stabilized_noisy(n, shift, factor)
                    scale = sens / (math.sqrt(2.0) * config.epsilon)
                    dp_rng = substream(config.seed, _DP_TAG, epoch, b, j)
                    linear = linear + laplace_from_uniform(dp_rng.random(n), scale)
                    quadratic = quadratic + laplace_from_uniform(dp_rng.random(n), scale)
                    counters.noise_draws += 2 * n
                    counters.perturbations += 2 * n

                loss = float(n * LOG2 + np.sum(linear * v + quadratic * v * v))
                if _guard(loss):
                    result.diverged = True
                    break
                loss_sum += loss
                loss_count += 1
                g = linear + 2.0 * quadratic * v
                _chain_update(params, j, x, h, g, config.eta)
            if result.diverged:
                break
        result.metrics.append(EpochMetrics(
            epoch=epoch,
            train_loss=loss_sum / max(1, loss_count),
            accuracy=corpus_accuracy(params, batches),
        ))
        if result.diverged:
            break
    return result


def train_dpsgd(data, config: TrainConfig,
                params: DaParams | None = None) -> TrainResult:
    """Gradient-perturbation training over the given batches.

    Each user step computes the expansion-point gradient (0.5 - x per
    feature, scaled by the input-noise factor sum when input noise is
    on), clips it to l2 norm `clip`, adds per-component Laplace noise at
    scale sensitivity/eps, and chains the noised gradient to the
    encoder and decoder weights.
    """
    batches = _as_batches(data)
    m, n = batches[0].num_users, batches[0].num_features
    if params is None:
        params = init_params(n, _default_width(n), m, config.seed)
    else:
        params = params.copy()
    result = TrainResult(params=params)
    counters = result.counters

    for epoch in range(config.epochs):
        loss_sum, loss_count = 0.0, 0
        for b, batch in enumerate(batches):
            for j in range(m):
                x = batch.rows[j]
                h = sigmoid(params.encoders[j].T @ x)
                z = params.decoder_block(j).T @ h

                factor = 1.0
                if config.env_sigma > 0.0:
                    env_rng = substream(config.seed, _ENV_TAG, epoch, b, j)
                    noise = env_rng.normal(0.0, config.env_sigma, n)
                    factor = noisy_factors(params, j, x, noise).factor_sum

                raw = factor * (0.5 - x)
                norm = float(np.linalg.norm(raw))
                counters.norm_ops += 1
                counters.clip_divisions += n + 1
                g = raw / max(1.0, norm / config.clip)

                if config.private:
                    sens = sgd_sensitivity(
                        n, config.clip, norm,
                        noise_factor=factor if config.env_sigma > 0.0 else None,
                    )
                    dp_rng = substream(config.seed, _DP_TAG, epoch, b, j)
                    g = g + laplace_from_uniform(dp_rng.random(n), sens / config.epsilon)
                    counters.noise_draws += n
                    counters.perturbations += n

                c = coeffs(x)
                loss = float(n * LOG2 + np.sum(c.linear * z + c.quadratic * z * z))
                if _guard(loss):
                    result.diverged = True
                    break
                loss_sum += loss
                loss_count += 1
                _chain_update(params, j, x, h, g, config.eta)
            if result.diverged:
                break
        result.metrics.append(EpochMetrics(
            epoch=epoch,
            train_loss=loss_sum / max(1, loss_count),
            accuracy=corpus_accuracy(params, batches),
        ))
        if result.diverged:
            break
    return result


def grad_check(params: DaParams, x_row, user_j: int, fd_step: float = 1e-5) -> float:
    """Analytic vs central-finite-difference gradients of the quadratic
    loss over every entry of the user's encoder and the whole decoder.

    Returns the max entrywise difference normalized by the largest
    finite-difference gradient magnitude.
    """
    x = np.asarray(x_row, dtype=float)
    c = coeffs(x)

    def loss_at(p: DaParams) -> float:
        h = sigmoid(p.encoders[user_j].T @ x)
        z = p.decoder_block(user_j).T @ h
        return float(p.num_features * LOG2 + np.sum(c.linear * z + c.quadratic * z * z))

    h = sigmoid(params.encoders[user_j].T @ x)
    z = params.decoder_block(user_j).T @ h
    g = c.linear + 2.0 * c.quadratic * z
    block = params.decoder_block(user_j)

    analytic_enc = np.outer(x, (block @ g) * h * (1.0 - h))
    analytic_dec = np.zeros_like(params.decoder)
    l = params.code_width
    analytic_dec[user_j * l:(user_j + 1) * l, :] = np.outer(h, g)

    work = params.copy()

    def central(arr, idx):
        orig = arr[idx]
        arr[idx] = orig + fd_step
        up = loss_at(work)
        arr[idx] = orig - fd_step
        down = loss_at(work)
        arr[idx] = orig
        return (up - down) / (2.0 * fd_step)

    fd_enc = np.zeros_like(work.encoders[user_j])
    for idx in np.ndindex(fd_enc.shape):
        fd_enc[idx] = central(work.encoders[user_j], idx)
    fd_dec = np.zeros_like(work.decoder)
    for idx in np.ndindex(fd_dec.shape):
        fd_dec[idx] = central(work.decoder, idx)

    scale = max(np.abs(fd_enc).max(), np.abs(fd_dec).max(), 1e-8)
    err = max(
        np.abs(analytic_enc - fd_enc).max(),
        np.abs(analytic_dec - fd_dec).max(),
    )
    return float(err / scale)
