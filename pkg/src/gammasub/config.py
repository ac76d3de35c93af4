"""Flat key-value run configuration.

A config file is plain text, one ``key = value`` pair per line, ``#`` starts
a comment.  Recognized keys:

    bin_edges       = 1 2 4          strictly increasing positive reals
                                     (omit or leave empty for the binless model)
    alpha_init      = 1.0
    beta_init       = 1.0
    theta_init      = 0 0 0          defaults to zeros
    rho_init        = 0 0 0          defaults to zeros

    alpha_prior     = gamma 2 1      one of: uniform LO HI | gamma SHAPE RATE
    beta_prior      = uniform 0.1 1000   | normal MEAN SD; omit beta_prior to
    theta_prior     = normal 0 3.2       fix beta (disables the beta move)
    rho_prior       = normal 0 7.1   theta/rho priors broadcast over bins
    tail_constraint = true
    reparam         = false          single-bin transformed coordinates;
                                     theta_prior/rho_prior then cover
                                     alpha + slope_1 and beta*exp(-rho_1)

    sigma_alpha     = 0.025          proposal scales
    sigma_theta     = 0.025
    sigma_rho       = 0.15
    sigma_beta      = 0.01
    beta_move_period = 5
    update_schedule = params         stages cycled per sweep
    refinement      = 10             imputed points per observation interval
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .mcmc import ProposalSpec
from .model import ModelParams, Prior, PriorSpec

__all__ = ["RunConfig", "parse_config", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    params0: ModelParams
    prior: PriorSpec
    proposal: ProposalSpec
    refinement: int
    raw: dict

    def echo(self) -> dict:
        """The parsed key-value pairs, for the run manifest."""
        return dict(self.raw)


def _parse_pairs(text: str) -> dict[str, str]:
    pairs = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {line_no}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip().lower()
        if key in pairs:
            raise ConfigError(f"config line {line_no}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _floats(value: str) -> list[float]:
    return [float(v) for v in value.replace(",", " ").split()]


def _bool(value: str, key: str) -> bool:
    low = value.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _prior(value: str, key: str) -> Prior:
    parts = value.split()
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 'KIND A B', got {value!r}")
    kind = parts[0].lower()
    try:
        a, b = float(parts[1]), float(parts[2])
    except ValueError:
        raise ConfigError(f"{key}: bad hyperparameters in {value!r}") from None
    return Prior(kind, a, b)


def parse_config(text: str) -> RunConfig:
    """Parse flat key-value text into the model, prior, and proposal specs."""
    pairs = _parse_pairs(text)
    known = {
        "bin_edges", "alpha_init", "beta_init", "theta_init", "rho_init",
        "alpha_prior", "beta_prior", "theta_prior", "rho_prior",
        "tail_constraint", "reparam", "sigma_alpha", "sigma_theta",
        "sigma_rho", "sigma_beta", "beta_move_period", "update_schedule",
        "refinement",
    }
    unknown = set(pairs) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    edges = np.asarray(_floats(pairs.get("bin_edges", "")), dtype=float)
    n = edges.size

    def _vector(key: str) -> np.ndarray:
        if key not in pairs:
            return np.zeros(n)
        vec = np.asarray(_floats(pairs[key]), dtype=float)
        if vec.size == 1 and n > 1:
            vec = np.full(n, vec[0])
        if vec.size != n:
            raise ConfigError(f"{key}: expected {n} values, got {vec.size}")
        return vec

    if "alpha_init" not in pairs:
        raise ConfigError("config must set alpha_init")
    params0 = ModelParams(
        alpha=float(pairs["alpha_init"]),
        beta=float(pairs.get("beta_init", "1.0")),
        bin_edges=edges,
        theta_slopes=_vector("theta_init"),
        theta_intercepts=_vector("rho_init"),
    )

    if "alpha_prior" not in pairs:
        raise ConfigError("config must set alpha_prior")
    alpha_prior = _prior(pairs["alpha_prior"], "alpha_prior")
    beta_prior = _prior(pairs["beta_prior"], "beta_prior") if "beta_prior" in pairs else None
    if n:
        if "theta_prior" not in pairs or "rho_prior" not in pairs:
            raise ConfigError("binned models must set theta_prior and rho_prior")
        theta_priors = (_prior(pairs["theta_prior"], "theta_prior"),) * n
        rho_priors = (_prior(pairs["rho_prior"], "rho_prior"),) * n
    else:
        theta_priors = ()
        rho_priors = ()
    prior = PriorSpec(
        alpha=alpha_prior,
        beta=beta_prior,
        theta=theta_priors,
        rho=rho_priors,
        tail_constraint=_bool(pairs.get("tail_constraint", "true"), "tail_constraint"),
        reparam=_bool(pairs.get("reparam", "false"), "reparam"),
    )

    proposal = ProposalSpec(
        sigma_alpha=float(pairs.get("sigma_alpha", "0.025")),
        sigma_theta=float(pairs.get("sigma_theta", "0.025")),
        sigma_rho=float(pairs.get("sigma_rho", "0.15")),
        sigma_beta=float(pairs.get("sigma_beta", "0.01")),
        beta_move_period=int(pairs.get("beta_move_period", "5")),
        update_schedule=tuple(pairs.get("update_schedule", "params").split()),
    )

    refinement = int(pairs.get("refinement", "10"))
    if refinement < 1:
        raise ConfigError(f"refinement must be >= 1, got {refinement}")
    return RunConfig(params0=params0, prior=prior, proposal=proposal,
                     refinement=refinement, raw=pairs)


def load_config(path) -> RunConfig:
    with open(path, "r") as fh:
        return parse_config(fh.read())
