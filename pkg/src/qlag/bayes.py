"""Adaptive lag selection with a conjugate Gamma posterior.

The lag is modeled as 1/theta for an exponential rate theta with a
Gamma(alpha, beta) belief. Each job draws theta, applies lag 1/theta,
observes whether the arriving job found the server idle or busy, and -- only
when two consecutive jobs saw the same state -- folds the drawn lag into the
posterior, crediting eps_idle or eps_busy pseudo-observations to alpha.
Mixed consecutive states are treated as the system sitting at its operating
point, and the posterior is left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ._fmt import fmt_float, write_csv
from .distributions import DistributionSpec
from .simulator import (
    STATE_BUSY,
    STATE_IDLE,
    ParamSchedule,
    Trajectory,
    Window,
    assemble_trajectory,
    estimate_reward,
    sample_jobs,
    schedule_means,
    state_from_wait,
)
from .streams import substream

__all__ = [
    "PosteriorState",
    "BayesConfig",
    "AdaptiveResult",
    "draw_lag",
    "update",
    "run_adaptive",
    "adaptive_log_to_csv",
]


@dataclass(frozen=True)
class PosteriorState:
    """Gamma(alpha, beta) belief over the lag rate theta."""

    alpha: float
    beta: float
    updates_applied: int = 0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"Gamma parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean_rate(self) -> float:
        return self.alpha / self.beta

    @property
    def mean_lag(self) -> float:
        """Plug-in lag estimate 1 / E[theta]."""
        return self.beta / self.alpha


@dataclass(frozen=True)
class BayesConfig:
    alpha0: float = 1.0
    beta0: float = 1.0
    eps_idle: float = 3.0
    eps_busy: float = 1.0

    def __post_init__(self):
        if self.alpha0 <= 0 or self.beta0 <= 0:
            raise ValueError("prior parameters must be positive")
        if self.eps_idle < 0 or self.eps_busy < 0:
            raise ValueError("state increments must be nonnegative")


def draw_lag(post: PosteriorState, rng: np.random.Generator) -> float:
    """Sample theta from the posterior and return the lag 1/theta."""
    theta = rng.gamma(post.alpha, 1.0 / post.beta)
    return 1.0 / max(theta, 1e-300)


def update(
    post: PosteriorState,
    lag_sample: float,
    state_now: str,
    state_prev: Optional[str],
    cfg: BayesConfig,
) -> PosteriorState:
    """Conjugate update for one observed job.

    The first job (state_prev None) and any same-state pair fold the applied
    lag into beta and credit eps_idle/eps_busy to alpha; a state flip leaves
    the posterior unchanged.
    """
    if state_now not in (STATE_IDLE, STATE_BUSY):
        raise ValueError(f"unknown server state {state_now!r}")
    if lag_sample <= 0:
        raise ValueError(f"lag sample must be positive, got {lag_sample}")
    if state_prev is not None and state_now != state_prev:
        return post
    eps = cfg.eps_idle if state_now == STATE_IDLE else cfg.eps_busy
    return PosteriorState(
        alpha=post.alpha + eps,
        beta=post.beta + lag_sample,
        updates_applied=post.updates_applied + 1,
    )


@dataclass(frozen=True)
class AdaptiveResult:
    trajectory: Trajectory
    posterior: PosteriorState
    reward: Union[float, np.ndarray]
    reporting: Window
    lags: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray


def run_adaptive(
    service: DistributionSpec,
    delay: DistributionSpec,
    schedule: Optional[ParamSchedule],
    f,
    n: int,
    cfg: BayesConfig = BayesConfig(),
    seed: int = 0,
    reporting: Window = Window.last_k(5000),
) -> AdaptiveResult:
    """Run the adaptive loop for n jobs and report the windowed reward.

    One posterior draw per job; the drawn lag is the lag actually applied to
    that job's call. Deterministic for a fixed seed.
    """
    if n < 2:
        raise ValueError(f"need at least 2 jobs, got {n}")
    if reporting.kind == "all":
        pass
    elif reporting.size > n:
        raise ValueError(
            f"reporting window of {reporting.size} jobs exceeds the {n}-job run"
        )
    ts_means, td_means = schedule_means(schedule, n)
    s = sample_jobs(service, substream(seed, "service"), n, ts_means)
    d = sample_jobs(delay, substream(seed, "delay"), n, td_means)
    rng = substream(seed, "posterior")

    post = PosteriorState(cfg.alpha0, cfg.beta0)
    lags = np.empty(n)
    alphas = np.empty(n)
    betas = np.empty(n)
    prev_state: Optional[str] = None
    for j in range(n):
        t = draw_lag(post, rng)
        wait = 0.0 if j == 0 else max(float(s[j - 1]) - t - float(d[j]), 0.0)
        state = state_from_wait(wait)
        post = update(post, t, state, prev_state, cfg)
        lags[j] = t
        alphas[j] = post.alpha
        betas[j] = post.beta
        prev_state = state

    traj = assemble_trajectory(s, d, lags, seed, "adaptive gamma-posterior lag")
    reward = estimate_reward(traj, f, reporting)
    return AdaptiveResult(traj, post, reward, reporting, lags, alphas, betas)


def adaptive_log_to_csv(result: AdaptiveResult, f, path) -> None:
    """Per-job log: index,lag_drawn,alpha,beta,state,reward_window.

    reward_window is the rolling estimate over the trailing window of the
    reporting size, left empty until enough jobs have accumulated.
    """
    traj = result.trajectory
    n = len(traj)
    width = result.reporting.size if result.reporting.kind != "all" else n
    f_cum = np.concatenate(([0.0], np.cumsum(f.eval(traj.sojourn))))
    a_cum = np.concatenate(([0.0], np.cumsum(traj.iat)))

    def rows():
        for j in range(n):
            end = j + 1
            if end >= width:
                num = f_cum[end] - f_cum[end - width]
                den = a_cum[end] - a_cum[end - width]
                window_val = fmt_float(num / den) if den > 0 else ""
            else:
                window_val = ""
            yield [
                str(j + 1),
                fmt_float(result.lags[j]),
                fmt_float(result.alphas[j]),
                fmt_float(result.betas[j]),
                STATE_BUSY if traj.busy[j] else STATE_IDLE,
                window_val,
            ]

    write_csv(path, ["index", "lag_drawn", "alpha", "beta", "state", "reward_window"], rows())
