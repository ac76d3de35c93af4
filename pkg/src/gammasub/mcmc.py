"""Metropolis-within-Gibbs sampler with bridge data augmentation.

Each sweep refreshes the latent path segments with Gamma bridge proposals,
then applies the scheduled parameter block updates: a joint correlated
random walk on (alpha, slopes, intercepts), and, when the activity rate is
declared random, a transdimensional move that superposes or thins every
segment and re-pins it to the observations.

Segments are held internally as an (n_segments, m) increment matrix with
cached per-segment bin statistics; all per-segment randomness is drawn in
fixed-layout blocks from dedicated splittable streams, so the result is
independent of the order in which segments are processed.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln

from .data import Observations
from .exceptions import ConfigError, ContractError, DegeneratePathError, DomainError
from .likelihood import BinStats, bin_stats_matrix, loglik_ratio_params, psi_log
from .model import ModelParams, PriorSpec, prior_logpdf
from .paths import GridPath, TimeGrid

__all__ = [
    "ProposalSpec",
    "ChainState",
    "ChainRecord",
    "init_chain",
    "refresh_segments",
    "update_params",
    "update_beta",
    "run_mcmc",
    "reparam_view",
    "reparam_invert",
    "write_chain_csv",
    "read_chain_csv",
    "write_meta_json",
]

_RESAMPLE_LIMIT = 100
_TINY = np.finfo(float).tiny

_STAGES = ("params", "beta")


@dataclass(frozen=True)
class ProposalSpec:
    """Random-walk proposal scales and the per-sweep update schedule.

    update_schedule lists the block updated on each sweep, cycled; "params"
    is the joint correlated move, "beta" the transdimensional move.  When the
    schedule contains no explicit "beta" stage and beta is random, the beta
    move additionally runs every beta_move_period-th sweep.
    """

    sigma_alpha: float = 0.025
    sigma_theta: float = 0.025
    sigma_rho: float = 0.15
    sigma_beta: float = 0.01
    beta_move_period: int = 5
    update_schedule: tuple[str, ...] = ("params",)

    def __post_init__(self):
        object.__setattr__(self, "update_schedule", tuple(self.update_schedule))
        for name in ("sigma_alpha", "sigma_theta", "sigma_rho", "sigma_beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {v!r}")
        if int(self.beta_move_period) < 1:
            raise ConfigError(f"beta_move_period must be >= 1, got {self.beta_move_period}")
        object.__setattr__(self, "beta_move_period", int(self.beta_move_period))
        if not self.update_schedule:
            raise ConfigError("update_schedule must name at least one stage")
        for stage in self.update_schedule:
            if stage not in _STAGES:
                raise ConfigError(f"unknown update stage {stage!r}; expected one of {_STAGES}")


@dataclass
class ChainRecord:
    """One retained posterior sample with acceptance bookkeeping."""

    iteration: int
    alpha: float
    beta: float
    theta: tuple
    rho: tuple
    accept_path_rate: float
    accept_params: bool | None = None
    accept_beta: bool | None = None
    logr_params: float = math.nan
    logr_beta: float = math.nan

    def to_params(self, bin_edges) -> ModelParams:
        return ModelParams(self.alpha, self.beta, bin_edges,
                           np.asarray(self.theta), np.asarray(self.rho))


@dataclass
class ChainState:
    """Mutable sampler state: parameters plus the augmented segments."""

    params: ModelParams
    obs: Observations
    grid: TimeGrid
    increments: np.ndarray              # (n_segments, m), rows sum to obs increments
    seg_sums: np.ndarray                # (n_segments, N+1) cached bin sums
    seg_counts: np.ndarray              # (n_segments, N+1) cached bin counts
    rng_path: np.random.Generator
    rng_accept: np.random.Generator
    rng_params: np.random.Generator
    rng_beta: np.random.Generator
    iteration: int = 0
    accept_path_rate: float = math.nan
    accept_params: bool | None = None
    accept_beta: bool | None = None
    logr_params: float = math.nan
    logr_beta: float = math.nan
    segment_accepts: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))

    @property
    def n_segments(self) -> int:
        return self.increments.shape[0]

    @property
    def m(self) -> int:
        return self.increments.shape[1]

    def sub_spans(self) -> np.ndarray:
        """Per-segment sub-step span h_i / m, shape (n_segments, 1)."""
        return (self.grid.spans / self.grid.m)[:, None]

    def total_stats(self) -> BinStats:
        return BinStats(self.seg_sums.sum(axis=0), self.seg_counts.sum(axis=0),
                        self.grid.horizon)

    def segment_stats(self, i: int) -> BinStats:
        return BinStats(self.seg_sums[i], self.seg_counts[i], float(self.grid.spans[i]))

    def segment_paths(self) -> list[GridPath]:
        """Materialize the segments as GridPath objects (diagnostic view)."""
        out = []
        for i in range(self.n_segments):
            start = self.obs.values[i]
            end = self.obs.values[i + 1]
            values = np.concatenate(([start], start + np.cumsum(self.increments[i])))
            np.clip(values, None, end, out=values)
            values[-1] = end
            out.append(GridPath(self.grid.segment_grid(i), values, self.increments[i]))
        return out

    def record(self) -> ChainRecord:
        return ChainRecord(
            iteration=self.iteration,
            alpha=self.params.alpha,
            beta=self.params.beta,
            theta=tuple(float(v) for v in self.params.theta_slopes),
            rho=tuple(float(v) for v in self.params.theta_intercepts),
            accept_path_rate=self.accept_path_rate,
            accept_params=self.accept_params,
            accept_beta=self.accept_beta,
            logr_params=self.logr_params,
            logr_beta=self.logr_beta,
        )


def _pin_rows(raw: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale rows of raw to sum to targets; returns (pinned, degenerate_mask).

    Row sums match the targets to within accumulation ulp; the GridPath view
    pins the endpoint values themselves exactly.
    """
    totals = raw.sum(axis=1)
    degenerate = totals == 0.0
    good = ~degenerate
    out = np.zeros_like(raw)
    if np.any(good):
        clamped = np.maximum(raw[good], _TINY)
        out[good] = targets[good, None] * clamped / clamped.sum(axis=1, keepdims=True)
    return out, degenerate


def _sample_bridge_rows(rng: np.random.Generator, shape_col: np.ndarray,
                        m: int, targets: np.ndarray) -> np.ndarray:
    """Draw Gamma bridge increments row-wise: rows sum to targets exactly.

    The bridge transform is scale free, so the driving increments are drawn
    with unit scale.  Rows whose draw degenerates to zero are redrawn up to
    the resample limit.
    """
    n = targets.size
    raw = rng.gamma(shape=np.broadcast_to(shape_col, (n, m)))
    out, degenerate = _pin_rows(raw, targets)
    tries = 0
    while np.any(degenerate):
        tries += 1
        if tries > _RESAMPLE_LIMIT:
            raise DegeneratePathError(
                f"{int(degenerate.sum())} bridge proposals degenerate after "
                f"{_RESAMPLE_LIMIT} resamples; increase refinement or check beta*h"
            )
        idx = np.flatnonzero(degenerate)
        raw = rng.gamma(shape=np.broadcast_to(shape_col, (n, m))[idx])
        redone, still = _pin_rows(raw, targets[idx])
        out[idx] = redone
        degenerate[idx] = still
    return out


def _make_rngs(seed) -> tuple[np.random.Generator, ...]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return tuple(np.random.Generator(np.random.Philox(s)) for s in root.spawn(4))


def init_chain(obs: Observations, params0: ModelParams, grid: TimeGrid, seed) -> ChainState:
    """Build the starting state: Gamma bridges connecting the observations."""
    if not np.array_equal(grid.times, obs.times):
        raise ContractError("grid observation times must equal the data times")
    if obs.times[0] != 0.0:
        raise DomainError("observations must start at time 0")
    rng_path, rng_accept, rng_params, rng_beta = _make_rngs(seed)
    deltas = obs.increments
    shape_col = params0.beta * (grid.spans / grid.m)[:, None]
    increments = _sample_bridge_rows(rng_path, shape_col, grid.m, deltas)
    sums, counts = bin_stats_matrix(increments, params0.bin_edges)
    return ChainState(
        params=params0, obs=obs, grid=grid, increments=increments,
        seg_sums=sums, seg_counts=counts,
        rng_path=rng_path, rng_accept=rng_accept,
        rng_params=rng_params, rng_beta=rng_beta,
        segment_accepts=np.zeros(deltas.size, dtype=bool),
    )


def refresh_segments(state: ChainState, segment_order: Sequence[int] | None = None) -> ChainState:
    """Propose a fresh Gamma bridge per segment and accept independently.

    The acceptance for segment i compares the endpoint-matched path ratio to
    ln(U_i).  Noise and uniforms are drawn in one fixed-layout block, so any
    processing order (segment_order is for verification) gives bit-identical
    results.
    """
    params = state.params
    shape_col = params.beta * state.sub_spans()
    proposal = _sample_bridge_rows(state.rng_path, shape_col, state.m, state.obs.increments)
    new_sums, new_counts = bin_stats_matrix(proposal, params.bin_edges)
    if params.n_bins:
        log_ratio = -(
            (new_sums[:, 1:] - state.seg_sums[:, 1:]) @ params.theta_slopes
            + (new_counts[:, 1:] - state.seg_counts[:, 1:]) @ params.theta_intercepts
        )
    else:
        log_ratio = np.zeros(state.n_segments)
    log_u = np.log(state.rng_accept.uniform(size=state.n_segments))
    accept = log_ratio >= log_u
    if segment_order is None:
        state.increments[accept] = proposal[accept]
        state.seg_sums[accept] = new_sums[accept]
        state.seg_counts[accept] = new_counts[accept]
    else:
        for i in segment_order:
            if accept[i]:
                state.increments[i] = proposal[i]
                state.seg_sums[i] = new_sums[i]
                state.seg_counts[i] = new_counts[i]
    state.segment_accepts = accept
    state.accept_path_rate = float(accept.mean())
    return state


def reparam_view(params: ModelParams) -> tuple[float, float, float, float]:
    """Single-bin bijection to (alpha, beta, alpha + slope_1, beta*exp(-rho_1))."""
    if params.n_bins != 1:
        raise ContractError("reparameterised view requires exactly one bin")
    return (params.alpha, params.beta,
            params.alpha + float(params.theta_slopes[0]),
            params.beta * math.exp(-float(params.theta_intercepts[0])))


def reparam_invert(alpha: float, beta: float, alpha1: float, beta1: float,
                   bin_edges) -> ModelParams:
    """Inverse of reparam_view; beta1 must be positive."""
    if beta1 <= 0:
        raise DomainError(f"beta1 must be > 0, got {beta1}")
    return ModelParams(alpha, beta, bin_edges,
                       np.array([alpha1 - alpha]),
                       np.array([math.log(beta) - math.log(beta1)]))


def _propose_params(state: ChainState, prop: ProposalSpec, prior: PriorSpec) -> ModelParams | None:
    """Draw the joint correlated proposal; None when outside the model domain."""
    params = state.params
    rng = state.rng_params
    n = params.n_bins
    z_alpha = rng.normal()
    z_theta = rng.normal(size=n)
    z_rho = rng.normal(size=n)
    alpha_new = params.alpha + prop.sigma_alpha * z_alpha
    if alpha_new <= 0:
        return None
    if prior.reparam:
        _, _, alpha1, beta1 = reparam_view(params)
        alpha1_new = alpha1 + prop.sigma_theta * z_theta[0]
        beta1_new = beta1 + prop.sigma_rho * z_rho[0]
        if beta1_new <= 0:
            return None
        return reparam_invert(alpha_new, params.beta, alpha1_new, beta1_new, params.bin_edges)
    # slopes shift against the alpha move so slope_k + alpha is preserved
    theta_new = params.theta_slopes + prop.sigma_theta * z_theta - (alpha_new - params.alpha)
    rho_new = params.theta_intercepts + prop.sigma_rho * z_rho
    return params.with_updates(alpha=alpha_new, theta_slopes=theta_new,
                               theta_intercepts=rho_new)


def update_params(state: ChainState, prop: ProposalSpec, prior: PriorSpec) -> ChainState:
    """Joint Metropolis update of alpha and the per-bin slopes/intercepts.

    The proposal is a symmetric Gaussian walk (with the correlated alpha
    shift), so acceptance uses the parameter likelihood ratio plus the prior
    log ratio only.  Out-of-support proposals are rejected through the -inf
    prior; candidates with a non-integrable tail are rejected outright.
    """
    state.accept_params = False
    state.logr_params = -math.inf
    candidate = _propose_params(state, prop, prior)
    if candidate is None or not candidate.tail_integrable:
        return state
    lp_new = prior_logpdf(prior, candidate)
    if lp_new == -math.inf:
        return state
    lp_old = prior_logpdf(prior, state.params)
    stats = state.total_stats()
    log_ratio = float(loglik_ratio_params(stats, state.params, candidate) + lp_new - lp_old)
    state.logr_params = log_ratio
    if log_ratio >= math.log(state.rng_params.uniform()):
        state.params = candidate
        state.accept_params = True
    return state


def update_beta(state: ChainState, prop: ProposalSpec, prior: PriorSpec) -> ChainState:
    """Transdimensional activity-rate move with segment transform and re-pin.

    Proposes beta° from a symmetric walk; raises every segment's activity by
    superposing an independent Gamma component (beta° > beta) or lowers it by
    Beta thinning (beta° < beta), re-pins each transformed segment to the
    observations, and accepts jointly with the prior ratio, the Gamma
    density ratio at the observed increments, and the path log-density ratio
    against the respective Gamma references.
    """
    if not prior.beta_is_random:
        raise ConfigError("beta is fixed by the prior; the beta move is unavailable")
    state.accept_beta = False
    state.logr_beta = -math.inf
    params = state.params
    rng = state.rng_beta
    beta_new = params.beta + prop.sigma_beta * rng.normal()
    if beta_new <= 0:
        return state
    candidate = params.with_updates(beta=beta_new)
    lp_diff = prior_logpdf(prior, candidate) - prior_logpdf(prior, params)
    if lp_diff == -math.inf:
        return state

    sub = state.sub_spans()
    if beta_new > params.beta:
        extra = rng.gamma(shape=np.broadcast_to((beta_new - params.beta) * sub,
                                                state.increments.shape),
                          scale=1.0 / params.alpha)
        transformed = state.increments + extra
    elif beta_new < params.beta:
        mult = rng.beta(np.broadcast_to(beta_new * sub, state.increments.shape),
                        np.broadcast_to((params.beta - beta_new) * sub,
                                        state.increments.shape))
        transformed = state.increments * mult
    else:
        transformed = state.increments.copy()
    # re-pin to the observations; fully collapsed rows fall back to the
    # clamped (uniform) bridge rather than aborting the move
    totals = transformed.sum(axis=1)
    collapsed = totals == 0.0
    if np.any(collapsed):
        transformed[collapsed] = 1.0
    clamped = np.maximum(transformed, _TINY)
    repinned = state.obs.increments[:, None] * clamped / clamped.sum(axis=1, keepdims=True)
    new_sums, new_counts = bin_stats_matrix(repinned, params.bin_edges)

    spans = state.grid.spans
    deltas = state.obs.increments
    shape_old = params.beta * spans
    shape_new = beta_new * spans
    ptilde_diff = float(
        np.sum((shape_new - shape_old) * (math.log(params.alpha) + np.log(deltas)))
        - np.sum(gammaln(shape_new) - gammaln(shape_old))
    )
    psi_diff = (
        psi_log(BinStats(new_sums.sum(axis=0), new_counts.sum(axis=0), state.grid.horizon),
                candidate)
        - psi_log(state.total_stats(), params)
    )
    log_ratio = float(lp_diff + ptilde_diff + psi_diff)
    state.logr_beta = log_ratio
    if log_ratio >= math.log(rng.uniform()):
        state.params = candidate
        state.increments = repinned
        state.seg_sums = new_sums
        state.seg_counts = new_counts
        state.accept_beta = True
    return state


def _validate_run(params0: ModelParams, prior: PriorSpec, prop: ProposalSpec,
                  iterations: int, burn_in: int, thinning: int) -> None:
    if prior.n_bins != params0.n_bins:
        raise ConfigError(
            f"prior covers {prior.n_bins} bins but the model has {params0.n_bins}"
        )
    if prior.reparam and params0.n_bins != 1:
        raise ConfigError("reparameterised mode requires exactly one bin")
    if "beta" in prop.update_schedule and not prior.beta_is_random:
        raise ConfigError("schedule contains a beta stage but the prior fixes beta")
    if iterations < 0 or burn_in < 0 or iterations < burn_in:
        raise ConfigError(
            f"need iterations >= burn_in >= 0, got ({iterations}, {burn_in})"
        )
    if thinning < 1:
        raise ConfigError(f"thinning must be >= 1, got {thinning}")
    if not params0.tail_integrable:
        raise ConfigError("initial parameters violate the tail constraint")
    if prior_logpdf(prior, params0) == -math.inf:
        raise ConfigError("initial parameters have zero prior density")


def run_mcmc(obs: Observations, params0: ModelParams, prior: PriorSpec,
             prop: ProposalSpec, iterations: int, burn_in: int | None = None,
             thinning: int = 1, seed=0, m: int = 10,
             grid: TimeGrid | None = None) -> Iterator[ChainRecord]:
    """Run the sampler and yield one ChainRecord per retained iteration.

    Every sweep refreshes all segments, then runs the scheduled block update;
    when no explicit beta stage is scheduled and beta is random, the beta
    move additionally fires every beta_move_period-th sweep.  burn_in
    defaults to 10 percent of iterations; records are emitted post burn-in
    at the thinning stride.  Fully deterministic given the seed.
    """
    if burn_in is None:
        burn_in = iterations // 10
    _validate_run(params0, prior, prop, iterations, burn_in, thinning)
    if grid is None:
        grid = TimeGrid(obs.times, m)
    state = init_chain(obs, params0, grid, seed)
    periodic_beta = prior.beta_is_random and "beta" not in prop.update_schedule
    n_stages = len(prop.update_schedule)
    for t in range(1, iterations + 1):
        state.iteration = t
        state.accept_params = None
        state.accept_beta = None
        state.logr_params = math.nan
        state.logr_beta = math.nan
        refresh_segments(state)
        stage = prop.update_schedule[(t - 1) % n_stages]
        if stage == "params":
            update_params(state, prop, prior)
        else:
            update_beta(state, prop, prior)
        if periodic_beta and t % prop.beta_move_period == 0:
            update_beta(state, prop, prior)
        if t > burn_in and (t - burn_in) % thinning == 0:
            yield state.record()


def _fmt_opt_bool(v: bool | None) -> str:
    return "" if v is None else str(int(v))


def _fmt_opt_float(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def chain_csv_header(n_bins: int) -> str:
    cols = ["iteration", "alpha", "beta"]
    cols += [f"theta_{k}" for k in range(1, n_bins + 1)]
    cols += [f"rho_{k}" for k in range(1, n_bins + 1)]
    cols += ["accept_path_rate", "accept_params", "accept_beta",
             "logr_params", "logr_beta"]
    return ",".join(cols)


def write_chain_csv(records, stream, n_bins: int) -> None:
    """Serialize chain records; full double precision, one row per record."""
    stream.write(chain_csv_header(n_bins) + "\n")
    for r in records:
        row = [str(r.iteration), repr(r.alpha), repr(r.beta)]
        row += [repr(v) for v in r.theta]
        row += [repr(v) for v in r.rho]
        row += [repr(r.accept_path_rate), _fmt_opt_bool(r.accept_params),
                _fmt_opt_bool(r.accept_beta), _fmt_opt_float(r.logr_params),
                _fmt_opt_float(r.logr_beta)]
        stream.write(",".join(row) + "\n")


def read_chain_csv(stream) -> list[ChainRecord]:
    header = stream.readline().strip().split(",")
    n_bins = sum(1 for c in header if c.startswith("theta_"))
    records = []
    for line in stream:
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        it = int(parts[0])
        alpha, beta = float(parts[1]), float(parts[2])
        theta = tuple(float(v) for v in parts[3:3 + n_bins])
        rho = tuple(float(v) for v in parts[3 + n_bins:3 + 2 * n_bins])
        tail = parts[3 + 2 * n_bins:]
        records.append(ChainRecord(
            iteration=it, alpha=alpha, beta=beta, theta=theta, rho=rho,
            accept_path_rate=float(tail[0]),
            accept_params=None if tail[1] == "" else bool(int(tail[1])),
            accept_beta=None if tail[2] == "" else bool(int(tail[2])),
            logr_params=math.nan if tail[3] == "" else float(tail[3]),
            logr_beta=math.nan if tail[4] == "" else float(tail[4]),
        ))
    return records


def write_meta_json(stream, *, config_echo: dict, records: list[ChainRecord],
                    extra: dict | None = None) -> None:
    """Write the run manifest: config echo plus acceptance-rate summaries."""
    def _rate(flags):
        attempted = [f for f in flags if f is not None]
        return float(np.mean([bool(f) for f in attempted])) if attempted else None

    meta = {
        "config": config_echo,
        "n_records": len(records),
        "acceptance": {
            "path_refresh_mean_rate": float(np.mean([r.accept_path_rate for r in records]))
            if records else None,
            "params_rate": _rate([r.accept_params for r in records]),
            "beta_rate": _rate([r.accept_beta for r in records]),
        },
    }
    if extra:
        meta.update(extra)
    json.dump(meta, stream, indent=2, sort_keys=True)
    stream.write("\n")
