"""Command-line front end for experiments and analyses.

Subcommands: train, compare, sweep-c, env-noise, sensitivity-curve,
complexity, dp-check.  The seed falls back to the SPOF_SEED environment
variable when --seed is not given.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import complexity, env_noise, harness, sensitivity
from .dp_mech import PrivacyBudget, empirical_dp_ratio
from .rng import substream
from .trainers import TrainConfig


def _default_seed() -> int:
    return int(os.environ.get("SPOF_SEED", "0"))


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: $SPOF_SEED or 0)")
    p.add_argument("--out", metavar="CSV", default=None, help="output CSV path")


def _add_data(p: argparse.ArgumentParser):
    group = p.add_mutually_exclusive_group()
    group.add_argument("--data", metavar="CSV", help="ingest a non-negative numeric CSV")
    group.add_argument("--synthetic", action="store_true", default=True,
                       help="use the synthetic corpus (default)")
    p.add_argument("--n", type=int, default=14, help="features per row")
    p.add_argument("--l", type=int, default=7, help="encoder code width")
    p.add_argument("--m", type=int, default=2, help="users per batch")
    p.add_argument("--batches", type=int, default=2000, help="synthetic corpus batches")


def _add_train(p: argparse.ArgumentParser):
    p.add_argument("--mechanism", choices=harness.MECHANISMS, default="spof")
    p.add_argument("--epsilon", default="0.5,1,2,4,8",
                   help="comma-separated privacy budgets")
    p.add_argument("--sigma", type=float, default=0.0,
                   help="environmental noise s.d. (0 = noiseless)")
    p.add_argument("--trials", type=int, default=10, help="Monte Carlo trials")
    p.add_argument("--eta", type=float, default=0.01, help="learning rate")
    p.add_argument("--c-scalar", type=float, default=2.5,
                   help="loss stabilization constant entry")
    p.add_argument("--clip", type=float, default=4.0, help="gradient clipping norm")
    p.add_argument("--epochs", type=int, default=1)


def _seed_of(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _corpus_of(args) -> harness.Corpus:
    if args.data:
        return harness.ingest_csv(args.data, n_expected=args.n, m=args.m)
    return harness.synth_corpus(args.n, args.m, args.batches, seed=_seed_of(args))


def _epsilons_of(args) -> tuple:
    return tuple(float(tok) for tok in str(args.epsilon).split(",") if tok)


def _train_config(args) -> TrainConfig:
    return TrainConfig(eta=args.eta, clip=args.clip, c_scalar=args.c_scalar,
                       epochs=args.epochs, env_sigma=args.sigma, seed=_seed_of(args))


def _print_rows(rows, out):
    if out:
        harness.write_results_csv(out, rows)
        print(f"wrote {len(rows)} rows to {out}")
    else:
        print("mechanism,epsilon,sigma,mean_accuracy,sd_accuracy,noise_draws,diverged_trials")
        for r in rows:
            print(f"{r.mechanism},{r.epsilon:g},{r.sigma:g},{r.mean_accuracy:.4f},"
                  f"{r.sd_accuracy:.4f},{r.noise_draws},{r.diverged_trials}")


def cmd_train(args) -> int:
    spec = harness.ExperimentSpec(
        mechanisms=(args.mechanism,), epsilons=_epsilons_of(args)[:1] or (1.0,),
        env_sigma=args.sigma, mc_trials=args.trials, train_config=_train_config(args),
    )
    _print_rows(harness.run_experiment(spec, _corpus_of(args)), args.out)
    return 0


def cmd_compare(args) -> int:
    spec = harness.ExperimentSpec(
        mechanisms=tuple(harness.MECHANISMS), epsilons=_epsilons_of(args),
        env_sigma=args.sigma, mc_trials=args.trials, train_config=_train_config(args),
    )
    _print_rows(harness.run_experiment(spec, _corpus_of(args)), args.out)
    return 0


def cmd_sweep_c(args) -> int:
    spec = harness.ExperimentSpec(
        mechanisms=("spof",), epsilons=_epsilons_of(args)[:1] or (1.0,),
        env_sigma=args.sigma, mc_trials=args.trials, train_config=_train_config(args),
    )
    grid = np.arange(args.c_min, args.c_max + 1e-9, args.c_step)
    rows, plateau = harness.sweep_c(spec, _corpus_of(args), grid)
    lines = ["c,mean_accuracy"] + [f"{c:g},{acc:.4f}" for c, acc in rows]
    text = "\n".join(lines) + f"\n# plateau_c,{plateau:g}\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows to {args.out} (plateau at c={plateau:g})")
    else:
        print(text, end="")
    return 0


def cmd_env_noise(args) -> int:
    seed = _seed_of(args)
    rng = substream(seed, 0xE0)
    weight_row = rng.uniform(-10.0, 10.0, args.n)
    sigmas = tuple(float(tok) for tok in str(args.sigmas).split(",") if tok)
    template = env_noise.EnvNoiseProfile.from_weights(
        sigmas[0], weight_row, h=args.h, l=args.l, sample_count=args.samples,
        paper_literal_variance=args.paper_literal_variance,
    )
    rows = env_noise.sweep_sigma(
        sigmas, template, weight_row=weight_row, mc_samples=args.mc_samples,
        seed=seed, paper_literal_variance=args.paper_literal_variance,
    )
    if args.out:
        env_noise.write_sweep_csv(args.out, rows)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        print("sigma,prob_bmax_leq_1")
        for sigma, p in rows:
            print(f"{sigma:g},{p:.6g}")
    return 0


def cmd_sensitivity_curve(args) -> int:
    grid = np.arange(args.a_min, args.a_max + args.a_step / 2, args.a_step)
    if args.out:
        sensitivity.write_per_term_csv(args.out, grid, clip=args.clip)
        print(f"wrote {grid.size} rows to {args.out}")
    else:
        curve = sensitivity.spof_per_term_curve(grid)
        print(f"per-term sensitivity at a=0: {sensitivity.spof_per_term(0.0):.4f}")
        print(f"grid minimum {curve.min:.4f} at a={curve.argmin:.4f}")
    return 0


def cmd_complexity(args) -> int:
    rep = complexity.report(args.n, args.l, profile=args.profile)
    text = rep.to_json() if args.json else rep.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
        print(f"wrote report to {args.out}")
    else:
        print(text, end="" if text.endswith("\n") else "\n")
    return 0


def cmd_dp_check(args) -> int:
    n = args.n
    query_base = np.concatenate([np.full(n, 0.5), np.full(n, -0.25)])
    query_neighbor = np.concatenate([np.full(n, -0.5), np.full(n, 0.25)])
    sens = sensitivity.spof_sensitivity_stabilized(n, args.c_j)
    if args.halve_sensitivity:
        sens /= 2.0
    ratio = empirical_dp_ratio(
        query_base, query_neighbor, PrivacyBudget(args.epsilon), sens,
        trials=args.trials, seed=_seed_of(args),
    )
    verdict = "OK" if ratio <= args.epsilon + 0.05 else "VIOLATION"
    print(f"max empirical log-ratio {ratio:.4f} vs epsilon {args.epsilon:g}: {verdict}")
    return 0 if verdict == "OK" or args.halve_sensitivity else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spof",
        description="Multi-user DP training of a distributed autoencoder "
                    "and the accompanying sensitivity / noise / cost analyses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one mechanism at one epsilon")
    _add_common(p); _add_data(p); _add_train(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="privacy-utility sweep over all mechanisms")
    _add_common(p); _add_data(p); _add_train(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-c", help="stabilization-constant sweep")
    _add_common(p); _add_data(p); _add_train(p)
    p.add_argument("--c-min", type=float, default=0.0)
    p.add_argument("--c-max", type=float, default=2.5)
    p.add_argument("--c-step", type=float, default=0.25)
    p.set_defaults(func=cmd_sweep_c)

    p = sub.add_parser("env-noise", help="input-noise factor analysis sweep")
    _add_common(p)
    p.add_argument("--sigmas", default="0.5,1,2,5,10")
    p.add_argument("--h", type=float, default=0.0)
    p.add_argument("--l", type=int, default=7)
    p.add_argument("--n", type=int, default=14)
    p.add_argument("--samples", type=int, default=100, help="factors under the max")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--paper-literal-variance", action="store_true",
                   help="use the sigma^2*||w|| projected-variance convention")
    p.set_defaults(func=cmd_env_noise)

    p = sub.add_parser("sensitivity-curve", help="per-term sensitivity vs expansion point")
    _add_common(p)
    p.add_argument("--a-min", type=float, default=-5.0)
    p.add_argument("--a-max", type=float, default=5.0)
    p.add_argument("--a-step", type=float, default=1e-4)
    p.add_argument("--clip", type=float, default=4.0)
    p.set_defaults(func=cmd_sensitivity_curve)

    p = sub.add_parser("complexity", help="macro-op cost report")
    _add_common(p)
    p.add_argument("--n", type=int, default=14)
    p.add_argument("--l", type=int, default=7)
    p.add_argument("--profile", choices=sorted(complexity.COST_PROFILES), default="amd-k7")
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("dp-check", help="empirical privacy-ratio verification")
    _add_common(p)
    p.add_argument("--n", type=int, default=14)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--c-j", type=float, default=0.0, help="stabilization shift")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--halve-sensitivity", action="store_true",
                   help="deliberately miscalibrate to demonstrate detection")
    p.set_defaults(func=cmd_dp_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
