"""Multi-user differentially private training for distributed autoencoders.

Two local-DP mechanisms over the same model: perturbing the coefficients
of a quadratic approximation of the reconstruction loss (with a loss
stabilization constant), and per-user DP-SGD with gradient clipping.
Companion analyses cover l1 sensitivities, the effect of additive input
noise on required DP noise, and macro-operation perturbation costs.
"""

from .complexity import ComplexityReport, OpCosts, c_dpsgd, c_spof, reduction
from .da_model import (
    DaParams,
    accuracy,
    encode,
    init_params,
    reconstruct,
    sigmoid,
    z_value,
    z_vector,
)
from .dp_mech import (
    Dataset,
    LaplaceScale,
    NeighborPair,
    PrivacyBudget,
    empirical_dp_ratio,
    laplace_from_uniform,
    make_neighbor,
    sample_laplace,
)
from .env_noise import (
    EnvNoiseProfile,
    TabulatedPdf,
    estimate_cdf_FX,
    pdf_b_max,
    pdf_fX,
    prob_bmax_leq_one,
    sweep_sigma,
)
from .harness import (
    Corpus,
    ExperimentSpec,
    ingest_csv,
    run_experiment,
    single_user_view,
    sweep_c,
    synth_corpus,
)
from .rng import substream
from .sensitivity import (
    PerTermCurve,
    SensitivityReport,
    sgd_per_term,
    sgd_sensitivity,
    spof_per_term,
    spof_per_term_curve,
    spof_sensitivity,
    spof_sensitivity_noisy,
    spof_sensitivity_stabilized,
    spof_sensitivity_stabilized_noisy,
)
from .taylor_loss import (
    LossCoeffs,
    NoisyLossCoeffs,
    StabilizedCoeffs,
    approx_loss,
    coeffs,
    exact_loss,
    noisy_factors,
    stabilize,
    taylor_error_bound,
)
from .trainers import (
    OpCounters,
    TrainConfig,
    TrainResult,
    corpus_accuracy,
    grad_check,
    train_dpsgd,
    train_spof,
)

__version__ = "0.1.0"
