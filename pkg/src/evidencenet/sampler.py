"""Derivative-free nested sampling with slice-sampled replacements.

The engine maintains ``n_live`` points in the unit hypercube under a
rising likelihood constraint.  Each iteration the worst point dies and
contributes a quadrature element logL + log dX to the evidence, with the
prior volume compressed deterministically as X_i = exp(-i / n_live).
Replacement points come from a chain of one-dimensional slice-sampling
updates along directions shaped by the live-point covariance, so no
gradient information is ever needed.
"""

from __future__ import annotations

import json
import hashlib
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .likelihood import LogLikeEvaluator
from .model import ModelSpec, total_dim

__all__ = ["SamplerConfig", "NsRun", "run", "run_nested",
           "constrained_sample", "run_summary",
           "write_dead_points", "read_dead_points", "write_summary",
           "read_summary", "summary_checksum"]

# Width of the initial slice bracket, in units of the live-point spread
# along the chosen direction; brackets can still grow by stepping out.
_SLICE_WIDTH = 2.0
_MAX_STEPS_OUT = 8
_MIN_BRACKET = 1e-12
_MAX_DIRECTION_RETRIES = 50


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    """Run-shaping knobs.

    ``n_live`` is the resolution parameter (evidence error shrinks like
    1/sqrt(n_live)); ``n_repeats`` is the reliability parameter, the
    number of slice updates between accepted points (0 means the 5 x
    dimensionality default).
    """

    n_live: int = 200
    n_repeats: int = 0
    seed: int = 0
    termination_frac: float = 1e-3
    max_iters: int = 2_000_000

    def __post_init__(self):
        if self.n_live < 2:
            raise ValueError(f"n_live must be >= 2, got {self.n_live}")
        if self.n_repeats < 0:
            raise ValueError(f"n_repeats must be >= 0, got {self.n_repeats}")
        if not 0.0 < self.termination_frac < 1.0:
            raise ValueError(f"termination_frac must be in (0, 1), got {self.termination_frac}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")

    def resolved_repeats(self, ndim: int) -> int:
        return self.n_repeats if self.n_repeats else 5 * ndim


@dataclass
class NsRun:
    """Completed (or truncated) nested-sampling run.

    The dead-point arrays are ordered by death; ``dead_logl`` is
    nondecreasing and ``dead_logx`` strictly decreasing.  ``log_z_err``
    is the usual sqrt(H / n_live) information-based estimate.
    """

    dead_u: np.ndarray        # (N, D) hypercube coordinates
    dead_theta: np.ndarray    # (N, D) physical coordinates
    dead_logl: np.ndarray     # (N,)
    dead_logx: np.ndarray     # (N,) log prior volume at death
    dead_logw: np.ndarray     # (N,) logL + log dX, unnormalized
    log_z: float
    log_z_err: float
    info_h: float
    n_like_calls: int
    n_iters: int
    converged: bool
    config: SamplerConfig
    model_name: str | None = None
    split_index: int | None = None

    @property
    def ndim(self) -> int:
        return self.dead_u.shape[1]


def run(spec: ModelSpec, train: Dataset, cfg: SamplerConfig,
        model_name: str | None = None, split_index: int | None = None) -> NsRun:
    """Nested-sample the posterior of ``spec`` on a training slice."""
    evaluator = LogLikeEvaluator(spec, train)
    out = run_nested(evaluator.from_hypercube, total_dim(spec), cfg)
    out.model_name = model_name if model_name is not None else spec.name
    out.split_index = split_index
    return out


def run_nested(evaluate, ndim: int, cfg: SamplerConfig) -> NsRun:
    """Core loop over an arbitrary problem.

    ``evaluate(u) -> (theta, logL)`` maps a hypercube point to physical
    coordinates and its log-likelihood; for problems posed directly on
    the cube, return ``u`` itself as theta.
    """
    if ndim < 1:
        raise ValueError("need at least one dimension")
    n_live = cfg.n_live
    rng = np.random.default_rng(cfg.seed)
    n_repeats = cfg.resolved_repeats(ndim)

    live_u = rng.random((n_live, ndim))
    live_theta = np.empty_like(live_u)
    live_logl = np.empty(n_live)
    ncall = 0
    for i in range(n_live):
        live_theta[i], live_logl[i] = evaluate(live_u[i])
        ncall += 1
    if not np.any(live_logl > -np.inf):
        raise SamplerError("all initial live points have zero likelihood")

    dead_u, dead_theta, dead_logl, dead_logx, dead_logw = [], [], [], [], []
    # dX_i = X_{i-1} - X_i with X_i = exp(-i/n_live)
    log_shell = float(np.log1p(-np.exp(-1.0 / n_live)))
    log_z = -np.inf
    chol = None
    update_every = max(1, n_live // 10)
    it = 0
    converged = False

    while it < cfg.max_iters:
        worst = int(np.argmin(live_logl))
        logl_star = float(live_logl[worst])
        it += 1
        log_x = -it / n_live
        logw = logl_star + log_shell - (it - 1) / n_live
        log_z = float(np.logaddexp(log_z, logw))

        dead_u.append(live_u[worst].copy())
        dead_theta.append(live_theta[worst].copy())
        dead_logl.append(logl_star)
        dead_logx.append(log_x)
        dead_logw.append(logw)

        if float(np.max(live_logl)) + log_x < log_z + np.log(cfg.termination_frac):
            converged = True
            break

        if chol is None or it % update_every == 0:
            chol = _live_cholesky(live_u)
        new_u, new_theta, new_logl, nc = constrained_sample(
            live_u, live_theta, live_logl, logl_star, n_repeats, rng,
            evaluate, chol)
        ncall += nc
        live_u[worst] = new_u
        live_theta[worst] = new_theta
        live_logl[worst] = new_logl

    # Remaining live points share the residual volume X_it equally,
    # entering in likelihood order so dead_logl stays sorted.
    n_dead = it
    log_x_final = -n_dead / n_live
    log_dx_final = log_x_final - np.log(n_live)
    order = np.argsort(live_logl, kind="stable")
    for j, idx in enumerate(order, start=1):
        logw = float(live_logl[idx]) + log_dx_final
        log_z = float(np.logaddexp(log_z, logw))
        dead_u.append(live_u[idx].copy())
        dead_theta.append(live_theta[idx].copy())
        dead_logl.append(float(live_logl[idx]))
        with np.errstate(divide="ignore"):
            dead_logx.append(float(log_x_final + np.log((n_live - j) / n_live)))
        dead_logw.append(logw)

    dead_logl_arr = np.asarray(dead_logl)
    dead_logw_arr = np.asarray(dead_logw)
    info_h = _information(dead_logl_arr, dead_logw_arr, log_z)
    log_z_err = float(np.sqrt(max(info_h, 0.0) / n_live))
    log_z_err = max(log_z_err, 1e-12)  # strictly positive by contract

    return NsRun(dead_u=np.asarray(dead_u), dead_theta=np.asarray(dead_theta),
                 dead_logl=dead_logl_arr, dead_logx=np.asarray(dead_logx),
                 dead_logw=dead_logw_arr, log_z=float(log_z),
                 log_z_err=log_z_err, info_h=float(info_h),
                 n_like_calls=ncall, n_iters=it, converged=converged, config=cfg)


def _information(logl, logw, log_z):
    p = np.exp(logw - log_z)
    mask = p > 0.0
    return float(np.sum(p[mask] * (logl[mask] - log_z)))


def _live_cholesky(live_u: np.ndarray):
    """Lower-triangular factor of the live-point covariance; identity
    fallback when the cloud is degenerate."""
    ndim = live_u.shape[1]
    cov = np.atleast_2d(np.cov(live_u, rowvar=False))
    scale = float(np.max(np.diag(cov), initial=0.0))
    if not np.isfinite(cov).all() or scale <= 0.0:
        return np.eye(ndim)
    cov[np.diag_indices_from(cov)] += 1e-9 * scale
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return np.eye(ndim)


def _fold(u: np.ndarray) -> np.ndarray:
    """Reflect arbitrary coordinates into [0, 1] (triangle-wave map)."""
    folded = np.mod(u, 2.0)
    return np.where(folded > 1.0, 2.0 - folded, folded)


def constrained_sample(live_u, live_theta, live_logl, logl_star, n_repeats,
                       rng, evaluate, chol=None):
    """Draw a point with logL above the threshold via slice sampling.

    The chain starts from a uniformly chosen live point strictly inside
    the constraint (falling back to any live point on likelihood
    plateaus) and performs ``n_repeats`` one-dimensional slice updates
    along directions drawn from the live-point covariance factor.  Cube
    boundaries are handled by reflection.  Returns
    ``(u, theta, logL, n_calls)``.
    """
    n_points, ndim = live_u.shape
    if n_points < 2:
        raise SamplerError("need at least 2 live points")
    if chol is None:
        chol = _live_cholesky(live_u)

    inside = np.flatnonzero(live_logl > logl_star)
    if inside.size:
        start = int(inside[rng.integers(inside.size)])
    else:
        start = int(rng.integers(n_points))
    x = live_u[start].copy()
    theta = live_theta[start].copy()
    logl_x = float(live_logl[start])
    ncall = 0

    for _ in range(n_repeats):
        for attempt in range(_MAX_DIRECTION_RETRIES):
            z = rng.standard_normal(ndim)
            norm = float(np.linalg.norm(z))
            if norm == 0.0:
                continue
            direction = chol @ (z / norm)
            width = _SLICE_WIDTH * float(np.linalg.norm(direction))
            if width == 0.0 or not np.isfinite(width):
                direction = z / norm
                width = _SLICE_WIDTH
            step, nc = _slice_update(x, direction / np.linalg.norm(direction),
                                     width, logl_star, rng, evaluate)
            ncall += nc
            if step is None:
                continue
            x, theta, logl_x = step
            break
        else:
            raise SamplerError(
                f"slice bracket collapsed along {_MAX_DIRECTION_RETRIES} directions")
    return x, theta, logl_x, ncall


def _slice_update(x, unit_dir, width, logl_star, rng, evaluate):
    """One slice-sampling update along ``unit_dir``.

    Returns ``((u, theta, logL) | None, n_calls)``; None signals bracket
    collapse and the caller retries with a fresh direction.
    """
    ncall = 0

    def logl_at(t):
        nonlocal ncall
        ncall += 1
        u = _fold(x + t * unit_dir)
        theta, logl = evaluate(u)
        return u, theta, logl

    r = rng.random()
    t_lo = -r * width
    t_hi = (1.0 - r) * width
    # Neal's stepping out with a randomized cap split, so a truncated
    # expansion still leaves the update reversible.
    j = int(np.floor(_MAX_STEPS_OUT * rng.random()))
    k = _MAX_STEPS_OUT - 1 - j
    while j > 0:
        _, _, logl = logl_at(t_lo)
        if logl < logl_star:
            break
        t_lo -= width
        j -= 1
    while k > 0:
        _, _, logl = logl_at(t_hi)
        if logl < logl_star:
            break
        t_hi += width
        k -= 1

    while True:
        t = rng.uniform(t_lo, t_hi)
        u, theta, logl = logl_at(t)
        if logl >= logl_star:
            return (u, theta, logl), ncall
        if t_hi - t_lo < _MIN_BRACKET:
            return None, ncall
        if t > 0.0:
            t_hi = t
        else:
            t_lo = t


# --------------------------------------------------------------------------
# Run artifacts

def _atomic_write(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dead_points(run: NsRun, path) -> None:
    """Dead-point CSV: logL, logX, logWeight, physical then hypercube
    coordinates; one row per dead point, written atomically."""
    ndim = run.ndim
    header = (["logL", "logX", "logWeight"]
              + [f"theta_{i}" for i in range(ndim)]
              + [f"u_{i}" for i in range(ndim)])
    lines = [",".join(header)]
    for i in range(run.dead_logl.shape[0]):
        row = [run.dead_logl[i], run.dead_logx[i], run.dead_logw[i]]
        row.extend(run.dead_theta[i])
        row.extend(run.dead_u[i])
        lines.append(",".join(f"{v:.17g}" for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_dead_points(path):
    """Inverse of :func:`write_dead_points`; returns (logl, logx, logw,
    theta, u) arrays."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    ndim = sum(1 for name in header if name.startswith("theta_"))
    logl, logx, logw = data[:, 0], data[:, 1], data[:, 2]
    theta = data[:, 3:3 + ndim]
    u = data[:, 3 + ndim:3 + 2 * ndim]
    return logl, logx, logw, theta, u


def summary_checksum(summary: dict) -> str:
    payload = {k: v for k, v in summary.items() if k != "checksum"}
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()


def run_summary(run: NsRun, **extra) -> dict:
    summary = {
        "log_z": run.log_z,
        "log_z_err": run.log_z_err,
        "info_h": run.info_h,
        "n_like_calls": run.n_like_calls,
        "n_iters": run.n_iters,
        "converged": run.converged,
        "seed": run.config.seed,
        "model_name": run.model_name,
        "split_index": run.split_index,
        "n_live": run.config.n_live,
        "n_repeats": run.config.n_repeats,
        "termination_frac": run.config.termination_frac,
    }
    summary.update(extra)
    summary["checksum"] = summary_checksum(summary)
    return summary


def write_summary(summary: dict, path) -> None:
    _atomic_write(path, json.dumps(summary, sort_keys=True, indent=2) + "\n")


def read_summary(path, check: bool = True) -> dict:
    with open(path) as fh:
        summary = json.load(fh)
    if check and summary.get("checksum") != summary_checksum(summary):
        raise ValueError(f"{path}: checksum mismatch (file edited after writing?)")
    return summary
