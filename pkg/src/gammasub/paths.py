"""Discrete-grid Gamma process simulation and path transforms.

Everything here works at increment level: a path is its values on a refined
time grid, increments over sub-steps of span h are Gamma(beta*h, alpha), and
the bridge / activity-change transforms act on those increments.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, DegeneratePathError, DomainError

__all__ = [
    "TimeGrid",
    "GridPath",
    "as_generator",
    "sample_gamma_path",
    "gamma_bridge",
    "sample_gamma_bridge",
    "augment_path",
    "thin_path",
    "write_path_csv",
]

_RESAMPLE_LIMIT = 100
_TINY = np.finfo(float).tiny


def as_generator(seed) -> np.random.Generator:
    """Coerce an int seed, SeedSequence, or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class TimeGrid:
    """Observation times plus a uniform refinement of each interval.

    Between consecutive observation times t_{i-1} < t_i the grid inserts
    points t_{i-1} + (j/m)(t_i - t_{i-1}), j = 0..m.
    """

    times: np.ndarray
    m: int = 1

    def __post_init__(self):
        arr = np.asarray(self.times, dtype=float).reshape(-1).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "times", arr)
        object.__setattr__(self, "m", int(self.m))
        if arr.size < 2:
            raise DomainError("grid needs at least two observation times")
        if not np.all(np.isfinite(arr)) or arr[0] < 0 or np.any(np.diff(arr) <= 0):
            raise DomainError("observation times must be finite, non-negative, strictly increasing")
        if self.m < 1:
            raise DomainError(f"refinement count must be >= 1, got {self.m}")

    @property
    def n_segments(self) -> int:
        return self.times.size - 1

    @property
    def spans(self) -> np.ndarray:
        """Lengths of the inter-observation intervals."""
        return np.diff(self.times)

    @property
    def horizon(self) -> float:
        return float(self.times[-1] - self.times[0])

    def all_times(self) -> np.ndarray:
        """Every refined grid point, observation points included once."""
        t = self.times
        steps = (t[:-1, None] + np.arange(1, self.m + 1) / self.m * np.diff(t)[:, None]).ravel()
        out = np.concatenate(([t[0]], steps))
        # land exactly on the observation times
        out[self.m :: self.m] = t[1:]
        return out

    def segment_grid(self, i: int) -> "TimeGrid":
        """The single-interval grid covering segment i."""
        return TimeGrid(self.times[i : i + 2], self.m)


@dataclass(frozen=True)
class GridPath:
    """A non-decreasing process path on an explicit grid.

    The step increments are the authoritative state: statistics read them
    directly, so steps far below the running value are not absorbed by the
    cumulative-sum rendering in ``values``.  Paths built from a value array
    get their increments by differencing; paths built by the samplers and
    transforms here carry the exact increments they were constructed from.
    """

    grid: TimeGrid
    values: np.ndarray
    increments: np.ndarray = None

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).reshape(-1).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        expected = self.grid.n_segments * self.grid.m + 1
        if arr.size != expected:
            raise DomainError(f"path needs {expected} values for this grid, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("path values must be finite")
        if np.any(np.diff(arr) < 0):
            raise DomainError("path values must be non-decreasing")
        inc = np.diff(arr) if self.increments is None else (
            np.asarray(self.increments, dtype=float).reshape(-1).copy())
        if inc.size != arr.size - 1:
            raise DomainError(f"path needs {arr.size - 1} increments, got {inc.size}")
        if not np.all(np.isfinite(inc)) or np.any(inc < 0):
            raise DomainError("increments must be finite and non-negative")
        inc.flags.writeable = False
        object.__setattr__(self, "increments", inc)

    @classmethod
    def from_increments(cls, grid: TimeGrid, start: float, increments) -> "GridPath":
        inc = np.asarray(increments, dtype=float).reshape(-1)
        values = np.concatenate(([start], start + np.cumsum(inc)))
        return cls(grid, values, inc)

    @property
    def start(self) -> float:
        return float(self.values[0])

    @property
    def end(self) -> float:
        return float(self.values[-1])


def _step_spans(grid: TimeGrid) -> np.ndarray:
    return np.repeat(grid.spans / grid.m, grid.m)


def sample_gamma_path(beta: float, alpha: float, grid: TimeGrid, seed) -> GridPath:
    """Sample a Gamma(beta, alpha) process path started at 0 on the grid.

    Increments over a sub-step of span h are independent Gamma(beta*h, alpha);
    the result is deterministic given the seed.
    """
    if not (beta > 0 and alpha > 0 and math.isfinite(beta) and math.isfinite(alpha)):
        raise DomainError("beta and alpha must be finite and > 0")
    rng = as_generator(seed)
    incs = rng.gamma(shape=beta * _step_spans(grid), scale=1.0 / alpha)
    return GridPath.from_increments(grid, 0.0, incs)


def gamma_bridge(path: GridPath, x_start: float, x_end: float) -> GridPath:
    """Pin a path to the endpoints (x_start, x_end) by multiplicative rescaling.

    The output at grid time t is x_start + (x_end - x_start) * S_t / S_T where
    S is the input path shifted to start at 0.  Endpoints are hit exactly and
    the result is strictly increasing.  Zero increments (float underflow) are
    clamped to the smallest positive normal before forming ratios; a path with
    zero total increment raises DegeneratePathError.
    """
    if not x_end > x_start:
        raise DomainError(f"need x_end > x_start, got ({x_start}, {x_end})")
    incs = path.increments
    total = incs.sum()
    if total == 0.0:
        raise DegeneratePathError("path has zero total increment; resample the proposal")
    incs = np.maximum(incs, _TINY)
    out_incs = (x_end - x_start) * incs / incs.sum()
    rel = np.cumsum(incs)
    rel /= rel[-1]
    values = np.concatenate(([x_start], x_start + (x_end - x_start) * rel))
    # interior points can round a hair past x_end when x_start + span does
    np.clip(values, None, x_end, out=values)
    values[-1] = x_end
    return GridPath(path.grid, values, out_incs)


def sample_gamma_bridge(beta: float, alpha: float, grid: TimeGrid,
                        x_start: float, x_end: float, seed) -> GridPath:
    """Sample a Gamma(beta, alpha) bridge from x_start to x_end on the grid.

    Resamples the driving path up to 100 times if it degenerates to zero
    total increment, then fails with a diagnostic.
    """
    rng = as_generator(seed)
    for _ in range(_RESAMPLE_LIMIT):
        try:
            return gamma_bridge(sample_gamma_path(beta, alpha, grid, rng), x_start, x_end)
        except DegeneratePathError:
            continue
    raise DegeneratePathError(
        f"bridge proposal degenerate after {_RESAMPLE_LIMIT} resamples "
        f"(beta*h = {beta * grid.spans.min() / grid.m:.3e} may be too small)"
    )


def augment_path(path: GridPath, beta_old: float, beta_new: float, alpha: float, seed) -> GridPath:
    """Superpose an independent Gamma(beta_new - beta_old, alpha) component.

    Adds an independent Gamma(h*(beta_new - beta_old), alpha) variate to each
    increment over span h, so increments become Gamma(h*beta_new, alpha)
    marginally.  Requires beta_new > beta_old.
    """
    if not beta_new > beta_old:
        raise ContractError(f"augment requires beta_new > beta_old, got ({beta_old}, {beta_new})")
    if not (beta_old > 0 and alpha > 0):
        raise DomainError("beta_old and alpha must be > 0")
    rng = as_generator(seed)
    extra = rng.gamma(shape=(beta_new - beta_old) * _step_spans(path.grid), scale=1.0 / alpha)
    return GridPath.from_increments(path.grid, path.start, path.increments + extra)


def thin_path(path: GridPath, beta_old: float, beta_new: float, seed) -> GridPath:
    """Thin each increment by an independent Beta multiplier.

    Multiplies the increment over span h by Beta(h*beta_new, h*(beta_old -
    beta_new)), so increments become Gamma(h*beta_new, alpha) marginally.
    Requires 0 < beta_new < beta_old.
    """
    if not 0 < beta_new < beta_old:
        raise ContractError(f"thin requires 0 < beta_new < beta_old, got ({beta_old}, {beta_new})")
    rng = as_generator(seed)
    h = _step_spans(path.grid)
    mult = rng.beta(h * beta_new, h * (beta_old - beta_new))
    return GridPath.from_increments(path.grid, path.start, path.increments * mult)


def write_path_csv(path: GridPath, stream) -> None:
    """Write (time, value) rows at full double precision for debugging."""
    stream.write("time,value\n")
    for t, v in zip(path.grid.all_times(), path.values):
        stream.write(f"{float(t)!r},{float(v)!r}\n")
