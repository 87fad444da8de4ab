from __future__ import annotations

import argparse
from typing import Any

from netfactor.models import DegreeGradient, FactorConfig, Variant

# CLI flag -> FactorConfig field.
_CFG_FLAGS: dict[str, str] = {
    "k": "k",
    "alpha": "alpha",
    "alpha2": "alpha2",
    "max_iter": "max_iter",
    "sigma": "sigma",
    "delta": "delta",
    "tol": "stop_tol",
    "seed": "seed",
    "degree_gradient": "degree_gradient",
}


def add_variant_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--variant",
        choices=[v.value for v in Variant],
        required=True,
        help="Factorization variant.",
    )


def add_factor_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument("--k", type=int, required=True, help="Latent dimension.")
    group.add_argument("--alpha", type=float, help="Structure weight of the first network.")
    group.add_argument("--alpha2", type=float, help="Structure weight of the second network (default: alpha).")
    group.add_argument("--max-iter", dest="max_iter", type=int)
    group.add_argument("--sigma", type=float, help="Clipping floor.")
    group.add_argument("--delta", type=float, help="Step-size denominator guard.")
    group.add_argument("--tol", type=float, help="Absolute cost-change stopping threshold.")
    group.add_argument("--seed", type=int)
    group.add_argument("--degree-gradient", dest="degree_gradient", choices=[g.value for g in DegreeGradient])


def factor_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """FactorConfig fields given on the command line (unset flags omitted)."""

    out: dict[str, Any] = {}
    for flag, key in _CFG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            out[key] = value
    return out


def factor_config(args: argparse.Namespace) -> FactorConfig:
    return FactorConfig.model_validate(factor_overrides(args))
