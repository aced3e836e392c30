"""Conditional maximum-likelihood estimation.

The log likelihood conditions on the truncated history: observations with
incomplete lag windows (the first ``max(q, 1)``) are dropped, and for models
with index autoregression the presample index lags are set to the
unconditional mean.  Optimization is Newton-Raphson with step-halving on the
analytic score; the Hessian is observed numerically by central differences of
the score.  Ordered thresholds are optimized through the increasing-gap
parameterization ``mu_j = mu_0 + sum_{k<=j} exp(c_k)`` so the monotonicity
constraint never binds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import (
    LinkKind,
    ModelSpec,
    Series,
    Theta,
    link_pdf,
    link_tail,
    _presample_pi,
    _thresholds,
)

__all__ = [
    "FitOptions",
    "FitResult",
    "NonConvergenceError",
    "SeparationError",
    "ThresholdCollapseError",
    "loglik",
    "score",
    "score_contributions",
    "fit_mle",
]

LOGLIK_FLOOR = 1e-12


class NonConvergenceError(RuntimeError):
    """Optimization failed; carries the last iterate."""

    def __init__(self, message: str, last_theta: Theta | None = None):
        super().__init__(message)
        self.last_theta = last_theta


class SeparationError(NonConvergenceError):
    """Perfect separation or parameter divergence."""


class ThresholdCollapseError(NonConvergenceError):
    """Adjacent thresholds collapsed during optimization."""


@dataclass(frozen=True)
class FitOptions:
    tol_grad: float = 1e-8
    max_iter: int = 100
    theta_cap: float = 1e3
    tol_mu: float = 1e-8
    fd_step: float = 1e-5


@dataclass(frozen=True)
class FitResult:
    """Estimation output.

    ``info_matrix`` is the average outer product of the per-observation
    scores in natural coordinates, an estimate of the information.
    ``score_norm`` is the max-norm of the free-parameter gradient at the
    returned estimate.
    """

    theta_hat: Theta
    loglik: float
    score_norm: float
    info_matrix: np.ndarray
    iterations: int
    converged: bool
    n_obs: int
    loglik_trace: tuple[float, ...] = ()

    def stderr(self, spec: ModelSpec) -> np.ndarray:
        """Asymptotic standard errors from the inverse information."""
        cov = np.linalg.inv(self.info_matrix * self.n_obs)
        return np.sqrt(np.maximum(np.diag(cov), 0.0))

    def to_json_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat.to_json_dict(),
            "loglik": self.loglik,
            "score_norm": self.score_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "n_obs": self.n_obs,
            "info_matrix": [list(map(float, row)) for row in self.info_matrix],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _window_start(spec: ModelSpec) -> int:
    return max(spec.q, 1)


def _index_and_grad(
    spec: ModelSpec, theta: Theta, series: Series
) -> tuple[np.ndarray, np.ndarray]:
    """Index path and its gradient w.r.t. the index parameters, all periods.

    The gradient columns follow the natural order
    ``(pi0, delta, alpha, beta, gamma)``; thresholds do not enter the index.
    """
    T = series.T
    y = series.y.astype(float)
    x = series.x
    k = spec.n_regressors
    n_idx = 1 + spec.q + spec.p_ar + k + (k if spec.interactions else 0)

    if spec.p_ar == 0:
        G = np.empty((T, n_idx))
        G[:, 0] = 1.0
        pos = 1
        for i in range(1, spec.q + 1):
            G[:, pos] = np.concatenate((np.zeros(i), y[:-i]))
            pos += 1
        if k:
            G[:, pos : pos + k] = x
            pos += k
        if spec.interactions:
            y1 = np.concatenate((np.zeros(1), y[:-1]))
            G[:, pos : pos + k] = y1[:, None] * x
        coef = np.concatenate(([theta.pi0], theta.delta, theta.beta, theta.gamma))
        return G @ coef, G

    # recursive case: carry d pi_t / d theta through the index autoregression
    s = sum(theta.alpha)
    pi_pre = _presample_pi(theta)
    g_pre = np.zeros(n_idx)
    g_pre[0] = 1.0 / (1.0 - s)
    for i in range(spec.p_ar):
        g_pre[1 + spec.q + i] = theta.pi0 / (1.0 - s) ** 2
    pi = np.empty(T)
    G = np.empty((T, n_idx))
    for t in range(T):
        direct = np.zeros(n_idx)
        direct[0] = 1.0
        value = theta.pi0
        for i in range(1, spec.q + 1):
            y_lag = y[t - i] if t - i >= 0 else 0.0
            value += theta.delta[i - 1] * y_lag
            direct[i] = y_lag
        acc = np.zeros(n_idx)
        for i in range(1, spec.p_ar + 1):
            pi_lag = pi[t - i] if t - i >= 0 else pi_pre
            g_lag = G[t - i] if t - i >= 0 else g_pre
            value += theta.alpha[i - 1] * pi_lag
            direct[spec.q + i] = pi_lag
            acc += theta.alpha[i - 1] * g_lag
        pos = 1 + spec.q + spec.p_ar
        if k:
            value += float(x[t] @ np.asarray(theta.beta))
            direct[pos : pos + k] = x[t]
            pos += k
        if spec.interactions:
            y1 = y[t - 1] if t >= 1 else 0.0
            value += float(y1 * (x[t] @ np.asarray(theta.gamma)))
            direct[pos : pos + k] = y1 * x[t]
        pi[t] = value
        G[t] = direct + acc
    return pi, G


def _realized_cells(
    spec: ModelSpec, theta: Theta, pi: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Realized cell probability and the densities at its two thresholds.

    Returns ``(p, f_lo, f_hi)`` where ``p = P(Y = y)``,
    ``f_lo = f(mu_{y-1} - pi)`` and ``f_hi = f(mu_y - pi)`` (zero at the
    infinite boundary thresholds).
    """
    mu = _thresholds(spec, theta)
    J = spec.support_size
    lo = np.where(y > 0, mu[np.maximum(y - 1, 0)] - pi, -np.inf)
    hi = np.where(y < J, mu[np.minimum(y, J - 1)] - pi, np.inf)
    tail_lo = np.where(y > 0, link_tail(spec.link, np.where(np.isfinite(lo), lo, 0.0)), 1.0)
    tail_hi = np.where(y < J, link_tail(spec.link, np.where(np.isfinite(hi), hi, 0.0)), 0.0)
    p = tail_lo - tail_hi
    f_lo = np.where(np.isfinite(lo), link_pdf(spec.link, np.where(np.isfinite(lo), lo, 0.0)), 0.0)
    f_hi = np.where(np.isfinite(hi), link_pdf(spec.link, np.where(np.isfinite(hi), hi, 0.0)), 0.0)
    return p, f_lo, f_hi


def loglik(spec: ModelSpec, theta: Theta, series: Series) -> float:
    """Conditional log likelihood over observations with complete lag windows.

    Returns ``-inf`` when any realized cell probability hits the floor.
    """
    theta.validate(spec)
    series.validate(spec)
    i0 = _window_start(spec)
    pi, _ = _index_and_grad(spec, theta, series)
    p, _, _ = _realized_cells(spec, theta, pi[i0:], series.y[i0:])
    if p.min() < LOGLIK_FLOOR:
        return -np.inf
    return float(np.sum(np.log(p)))


def score_contributions(spec: ModelSpec, theta: Theta, series: Series) -> np.ndarray:
    """Per-observation score vectors in natural coordinates, shape (n, L)."""
    theta.validate(spec)
    series.validate(spec)
    i0 = _window_start(spec)
    pi_all, G_all = _index_and_grad(spec, theta, series)
    pi, G, y = pi_all[i0:], G_all[i0:], series.y[i0:]
    p, f_lo, f_hi = _realized_cells(spec, theta, pi, y)
    p = np.maximum(p, LOGLIK_FLOOR)
    dlp_dpi = (f_lo - f_hi) / p
    n = y.shape[0]
    L = spec.n_params
    out = np.zeros((n, L))
    n_idx = G.shape[1]
    out[:, :n_idx] = dlp_dpi[:, None] * G
    if spec.ordered:
        J = spec.support_size
        rows = np.arange(n)
        dmu = np.zeros((n, J))
        has_hi = y < J
        dmu[rows[has_hi], y[has_hi]] += f_hi[has_hi] / p[has_hi]
        has_lo = y > 0
        dmu[rows[has_lo], y[has_lo] - 1] -= f_lo[has_lo] / p[has_lo]
        out[:, n_idx:] = dmu
    return out


def score(spec: ModelSpec, theta: Theta, series: Series) -> np.ndarray:
    """Analytic gradient of :func:`loglik` in natural coordinates."""
    return score_contributions(spec, theta, series).sum(axis=0)


# --- working parameterization -------------------------------------------------

class _WorkingMap:
    """Maps between natural ``Theta`` and the unconstrained working vector.

    Binary models use the natural coordinates directly.  Ordered models drop
    the (fixed) intercept and represent thresholds as the first threshold
    plus log gaps.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        k = spec.n_regressors
        self.n_index = 1 + spec.q + spec.p_ar + k + (k if spec.interactions else 0)
        if spec.ordered:
            self.n_free = (self.n_index - 1) + spec.support_size
        else:
            self.n_free = self.n_index

    def to_working(self, theta: Theta) -> np.ndarray:
        vec = theta.to_vector()
        if not self.spec.ordered:
            return vec.copy()
        idx = vec[1 : self.n_index]
        mu = np.asarray(theta.mu)
        gaps = np.diff(mu)
        if np.any(gaps <= 0):
            raise ValueError("thresholds must be strictly increasing")
        work_mu = np.concatenate(([mu[0]], np.log(gaps))) if mu.size > 1 else mu.copy()
        return np.concatenate((idx, work_mu))

    def to_theta(self, w: np.ndarray) -> Theta:
        spec = self.spec
        if not spec.ordered:
            return Theta.from_vector(spec, w)
        idx = w[: self.n_index - 1]
        wm = w[self.n_index - 1 :]
        mu = np.concatenate(([wm[0]], wm[0] + np.cumsum(np.exp(wm[1:])))) if wm.size > 1 else wm.copy()
        return Theta.from_vector(spec, np.concatenate(([0.0], idx, mu)))

    def grad_to_working(self, w: np.ndarray, g_nat: np.ndarray) -> np.ndarray:
        spec = self.spec
        if not spec.ordered:
            return g_nat.copy()
        g_idx = g_nat[1 : self.n_index]
        g_mu = g_nat[self.n_index :]
        J = spec.support_size
        g_w_mu = np.empty(J)
        g_w_mu[0] = g_mu.sum()
        if J > 1:
            c = w[self.n_index - 1 :]  # (mu0, c_1..c_{J-1})
            rev_tail = np.cumsum(g_mu[::-1])[::-1]  # sum_{j>=k} g_mu[j]
            g_w_mu[1:] = np.exp(c[1:]) * rev_tail[1:]
        return np.concatenate((g_idx, g_w_mu))


def _default_init(spec: ModelSpec, series: Series) -> Theta:
    """All parameters zero; ordered thresholds at normal quantiles of the
    empirical category frequencies."""
    if not spec.ordered:
        return Theta.from_vector(spec, np.zeros(spec.n_params))
    i0 = _window_start(spec)
    y = series.y[i0:]
    n = y.shape[0]
    J = spec.support_size
    counts = np.bincount(y, minlength=J + 1)
    cum = np.cumsum(counts[:-1]) / n
    cum = np.clip(cum, 1.0 / (n + 1.0), 1.0 - 1.0 / (n + 1.0))
    mu = special.ndtri(cum)
    # enforce strictly increasing in pathological clipped cases
    for j in range(1, J):
        if mu[j] <= mu[j - 1]:
            mu[j] = mu[j - 1] + 1e-3
    vec = np.zeros(spec.n_params)
    vec[-J:] = mu
    return Theta.from_vector(spec, vec)


def _check_category_counts(spec: ModelSpec, series: Series) -> None:
    i0 = _window_start(spec)
    counts = np.bincount(series.y[i0:], minlength=spec.support_size + 1)
    J = spec.support_size
    if counts[0] == 0 or counts[J] == 0:
        raise SeparationError(
            "an extreme outcome category is empty: the likelihood has no interior maximum"
        )
    middle = np.nonzero(counts[1:J] == 0)[0]
    if middle.size:
        raise ThresholdCollapseError(
            f"outcome category {int(middle[0]) + 1} is empty: adjacent thresholds collapse"
        )


def fit_mle(
    spec: ModelSpec,
    series: Series,
    init: Theta | None = None,
    options: FitOptions | None = None,
) -> FitResult:
    """Newton-Raphson conditional ML fit.

    Raises
    ------
    SeparationError
        On perfect separation (degenerate category counts or parameter
        divergence beyond the cap).
    ThresholdCollapseError
        When adjacent thresholds collapse.
    """
    opts = options or FitOptions()
    series.validate(spec)
    max_lag = max(spec.q, spec.p_ar, 1)
    if series.T <= spec.n_params + max_lag:
        raise ValueError(
            f"need T > {spec.n_params + max_lag} observations to fit {spec.n_params} parameters"
        )
    _check_category_counts(spec, series)

    wmap = _WorkingMap(spec)
    theta = init if init is not None else _default_init(spec, series)
    theta.validate(spec)
    w = wmap.to_working(theta)

    def ll_of(w_vec: np.ndarray) -> float:
        return loglik(spec, wmap.to_theta(w_vec), series)

    def grad_of(w_vec: np.ndarray) -> np.ndarray:
        th = wmap.to_theta(w_vec)
        return wmap.grad_to_working(w_vec, score(spec, th, series))

    ll = ll_of(w)
    if not np.isfinite(ll):
        raise NonConvergenceError("initial point has degenerate likelihood", theta)
    trace = [ll]
    g = grad_of(w)
    iterations = 0
    converged = bool(np.max(np.abs(g)) <= opts.tol_grad)

    while not converged and iterations < opts.max_iter:
        iterations += 1
        H = _fd_hessian(grad_of, w, opts.fd_step)
        d = _ascent_direction(H, g)
        # step-halving line search
        eta = 1.0
        accepted = False
        for _ in range(60):
            w_new = w + eta * d
            ll_new = ll_of(w_new)
            if np.isfinite(ll_new) and ll_new > ll:
                accepted = True
                break
            eta *= 0.5
        if accepted:
            w, ll = w_new, ll_new
            trace.append(ll)
            g = grad_of(w)
        else:
            # So close to the optimum that the quadratic gain is below the
            # float resolution of the log likelihood: accept the raw Newton
            # step as long as it shrinks the score.
            w_new = w + d
            ll_new = ll_of(w_new)
            if not np.isfinite(ll_new):
                break
            g_new = grad_of(w_new)
            if np.max(np.abs(g_new)) >= np.max(np.abs(g)):
                break
            w, ll, g = w_new, ll_new, g_new
        theta = wmap.to_theta(w)
        if spec.ordered and spec.support_size > 1:
            c = w[wmap.n_index - 1 :][1:]
            if np.any(c < math.log(opts.tol_mu)):
                raise ThresholdCollapseError("threshold gap fell below tol_mu", theta)
        if np.max(np.abs(w)) > opts.theta_cap:
            raise SeparationError(
                f"parameter norm exceeded cap {opts.theta_cap:g}: perfect separation "
                "or divergence",
                theta,
            )
        converged = bool(np.max(np.abs(g)) <= opts.tol_grad)

    theta = wmap.to_theta(w)
    contrib = score_contributions(spec, theta, series)
    info = contrib.T @ contrib / contrib.shape[0]
    return FitResult(
        theta_hat=theta,
        loglik=ll,
        score_norm=float(np.max(np.abs(g))),
        info_matrix=info,
        iterations=iterations,
        converged=converged,
        n_obs=contrib.shape[0],
        loglik_trace=tuple(trace),
    )


def _fd_hessian(grad_of, w: np.ndarray, step: float) -> np.ndarray:
    L = w.shape[0]
    H = np.empty((L, L))
    for i in range(L):
        h = step * (1.0 + abs(w[i]))
        e = np.zeros(L)
        e[i] = h
        H[:, i] = (grad_of(w + e) - grad_of(w - e)) / (2.0 * h)
    return (H + H.T) / 2.0


def _ascent_direction(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Newton direction, with Levenberg damping if the Hessian misbehaves."""
    A = -H
    lam = 0.0
    scale = max(np.trace(A) / A.shape[0], 1.0)
    for _ in range(12):
        try:
            d = np.linalg.solve(A + lam * np.eye(A.shape[0]), g)
        except np.linalg.LinAlgError:
            d = None
        if d is not None and np.isfinite(d).all() and float(d @ g) > 0.0:
            return d
        lam = max(2.0 * lam, 1e-8 * scale) * 10.0
    return g / scale
