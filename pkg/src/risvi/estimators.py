"""Cascaded-channel estimators mapping ``(y_k, S_c,k, W_k)`` to ``c_hat_k``.

* :func:`estimate_vi_laplace` - mean-field VI under a complex adaptive
  Laplace prior, built as a Gaussian scale mixture
  ``alpha_i | lambda_i ~ CN(0, lambda_i)``, ``lambda_i ~ Gamma(3/2, gamma_i/4)``,
  ``gamma_i ~ Gamma(a, b)``, with a Gamma(a, b) noise precision ``beta``.
* :func:`estimate_vi_student` - the same VI machinery with a Student's-t
  (Gaussian-Gamma) prior, i.e. the relevance vector machine.
* :func:`estimate_ls` and :func:`estimate_lmmse` - linear baselines.

Both VI estimators rescale ``y`` to unit mean power before iterating and
undo the scaling afterwards, so the tiny ``a = b = 1e-6`` hyperpriors stay
non-informative whatever the physical units of the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .numeric import hermitian_solve


class NumericalError(FloatingPointError):
    """Non-finite value produced inside an iterative estimator."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class Hyperpriors:
    a: float = 1e-6
    b: float = 1e-6

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("hyperprior shape and rate must be non-negative")


@dataclass(frozen=True)
class VIOptions:
    tol: float = 1e-6
    max_iters: int = 200
    floor: float = 1e-30
    beta_cap: float = 1e12
    normalize: bool = True


@dataclass
class PosteriorState:
    m_alpha: np.ndarray
    C_alpha: np.ndarray
    mean_lambda: np.ndarray
    mean_inv_lambda: np.ndarray
    mean_gamma: np.ndarray
    mean_beta: float
    iteration: int = 0
    last_change: float = np.inf
    floor_hits: int = 0

    @property
    def second_moment(self) -> np.ndarray:
        """``<|alpha_i|^2> = |m_i|^2 + C_ii`` under q(alpha)."""
        return np.abs(self.m_alpha) ** 2 + np.real(np.diag(self.C_alpha))


@dataclass
class StudentState:
    m_alpha: np.ndarray
    C_alpha: np.ndarray
    mean_gamma: np.ndarray
    mean_beta: float
    iteration: int = 0
    last_change: float = np.inf
    floor_hits: int = 0

    @property
    def second_moment(self) -> np.ndarray:
        return np.abs(self.m_alpha) ** 2 + np.real(np.diag(self.C_alpha))


@dataclass
class EstimatorOutput:
    c_hat: np.ndarray
    alpha_hat: np.ndarray
    iterations: int = 0
    last_change: float = 0.0
    noise_precision: float | None = None
    floor_hits: int = 0
    extras: dict = field(default_factory=dict)


def _initial_beta(y, opts: VIOptions) -> float:
    power = max(float(np.mean(np.abs(y) ** 2)), opts.floor)
    return min(1.0 / (0.1 * power), opts.beta_cap)


def init_state(y, n_gains: int, opts: VIOptions = VIOptions()) -> PosteriorState:
    ones = np.ones(n_gains)
    return PosteriorState(
        m_alpha=np.zeros(n_gains, dtype=complex),
        C_alpha=np.eye(n_gains, dtype=complex),
        mean_lambda=ones.copy(),
        mean_inv_lambda=ones.copy(),
        mean_gamma=ones.copy(),
        mean_beta=_initial_beta(y, opts),
    )


def gaussian_posterior(S, y, beta: float, prior_precision, gram=None):
    """Mean and covariance of ``CN(y | S a, I / beta) CN(a | 0, diag(1 / prior_precision))``."""
    if gram is None:
        gram = S.conj().T @ S
    precision = beta * gram + np.diag(prior_precision)
    C = hermitian_solve(precision, np.eye(len(prior_precision)))
    C = 0.5 * (C + C.conj().T)
    m = beta * (C @ (S.conj().T @ y))
    return m, C


def update_q_alpha(state, S_ck, y_k, gram=None):
    """Gaussian q(alpha): ``C = (<beta> S^H S + <Lambda^-1>)^-1``, ``m = <beta> C S^H y``."""
    m, C = gaussian_posterior(S_ck, y_k, state.mean_beta, state.mean_inv_lambda, gram)
    return replace(state, m_alpha=m, C_alpha=C)


def update_q_lambda(state: PosteriorState, floor: float = 1e-30) -> PosteriorState:
    """GIG(<gamma>/2, 2<|alpha|^2>, 1/2) means of the scale variables."""
    moment = state.second_moment
    hits = int(np.count_nonzero(moment < floor))
    moment = np.maximum(moment, floor)
    root_moment = np.sqrt(moment)
    root_gamma = np.sqrt(state.mean_gamma)
    return replace(
        state,
        mean_lambda=2.0 * root_moment / root_gamma + 2.0 / state.mean_gamma,
        mean_inv_lambda=root_gamma / (2.0 * root_moment),
        floor_hits=state.floor_hits + hits,
    )


def update_q_gamma(state: PosteriorState, hp: Hyperpriors = Hyperpriors()) -> PosteriorState:
    a_bar = hp.a + 1.5
    b_bar = hp.b + state.mean_lambda / 4.0
    return replace(state, mean_gamma=a_bar / b_bar)


def update_q_beta(state, S_ck, y_k, hp: Hyperpriors = Hyperpriors(), gram=None,
                  floor: float = 1e-30, cap: float = 1e12):
    """Gamma q(beta) with shape ``a + NT`` and rate ``b + |y - S m|^2 + tr(C S^H S)``."""
    if gram is None:
        gram = S_ck.conj().T @ S_ck
    residual = y_k - S_ck @ state.m_alpha
    rate = hp.b + float(np.vdot(residual, residual).real) + float(np.real(np.sum(state.C_alpha * gram.T)))
    hits = 0
    if rate < floor:
        rate = floor
        hits += 1
    beta = (hp.a + len(y_k)) / rate
    if beta > cap:
        beta = cap
        hits += 1
    return replace(state, mean_beta=beta, floor_hits=state.floor_hits + hits)


def _relative_change(new, old, floor):
    return float(np.linalg.norm(new - old) / max(np.linalg.norm(old), floor))


def _check(state, iteration):
    values = (state.m_alpha, state.C_alpha, state.mean_beta)
    if not all(np.all(np.isfinite(v)) for v in values):
        raise NumericalError(f"non-finite posterior at iteration {iteration}", iteration)


def run_vi_laplace(y_k, S_ck, hp: Hyperpriors = Hyperpriors(), opts: VIOptions = VIOptions(),
                   state: PosteriorState | None = None) -> PosteriorState:
    """Coordinate ascent over q(alpha), q(lambda), q(gamma), q(beta) in that order.

    Operates on ``y_k`` as given (no rescaling). Starts from ``state`` if
    supplied, otherwise from :func:`init_state`.
    """
    if state is None:
        state = init_state(y_k, S_ck.shape[1], opts)
    gram = S_ck.conj().T @ S_ck
    for it in range(1, opts.max_iters + 1):
        previous = state.m_alpha
        state = update_q_alpha(state, S_ck, y_k, gram)
        state = update_q_lambda(state, opts.floor)
        state = update_q_gamma(state, hp)
        state = update_q_beta(state, S_ck, y_k, hp, gram, opts.floor, opts.beta_cap)
        _check(state, it)
        change = _relative_change(state.m_alpha, previous, opts.floor)
        state = replace(state, iteration=state.iteration + 1, last_change=change)
        if change < opts.tol:
            break
    return state


def update_q_gamma_student(state: StudentState, hp: Hyperpriors = Hyperpriors(),
                           floor: float = 1e-30) -> StudentState:
    """RVM precision update ``<gamma_i> = (a + 1) / (b + <|alpha_i|^2>)``."""
    rate = hp.b + state.second_moment
    hits = int(np.count_nonzero(rate < floor))
    return replace(state, mean_gamma=(hp.a + 1.0) / np.maximum(rate, floor),
                   floor_hits=state.floor_hits + hits)


def run_vi_student(y_k, S_ck, hp: Hyperpriors = Hyperpriors(), opts: VIOptions = VIOptions(),
                   state: StudentState | None = None) -> StudentState:
    n = S_ck.shape[1]
    if state is None:
        state = StudentState(
            m_alpha=np.zeros(n, dtype=complex),
            C_alpha=np.eye(n, dtype=complex),
            mean_gamma=np.ones(n),
            mean_beta=_initial_beta(y_k, opts),
        )
    gram = S_ck.conj().T @ S_ck
    for it in range(1, opts.max_iters + 1):
        previous = state.m_alpha
        m, C = gaussian_posterior(S_ck, y_k, state.mean_beta, state.mean_gamma, gram)
        state = replace(state, m_alpha=m, C_alpha=C)
        state = update_q_gamma_student(state, hp, opts.floor)
        state = update_q_beta(state, S_ck, y_k, hp, gram, opts.floor, opts.beta_cap)
        _check(state, it)
        change = _relative_change(state.m_alpha, previous, opts.floor)
        state = replace(state, iteration=state.iteration + 1, last_change=change)
        if change < opts.tol:
            break
    return state


def _data_scale(y, opts: VIOptions) -> float:
    if not opts.normalize:
        return 1.0
    scale = float(np.sqrt(np.mean(np.abs(y) ** 2)))
    return scale if scale > 0 else 1.0


def _vi_output(state, W_k, scale) -> EstimatorOutput:
    alpha_hat = scale * state.m_alpha
    return EstimatorOutput(
        c_hat=W_k @ alpha_hat,
        alpha_hat=alpha_hat,
        iterations=state.iteration,
        last_change=state.last_change,
        noise_precision=state.mean_beta / scale**2,
        floor_hits=state.floor_hits,
        extras={"state": state, "scale": scale},
    )


def estimate_vi_laplace(y_k, S_ck, W_k, hp: Hyperpriors = Hyperpriors(),
                        opts: VIOptions = VIOptions()) -> EstimatorOutput:
    """Proposed estimator: ``c_hat = W_k m_alpha`` after VI converges."""
    scale = _data_scale(y_k, opts)
    state = run_vi_laplace(y_k / scale, S_ck, hp, opts)
    return _vi_output(state, W_k, scale)


def estimate_vi_student(y_k, S_ck, W_k, hp: Hyperpriors = Hyperpriors(),
                        opts: VIOptions = VIOptions()) -> EstimatorOutput:
    scale = _data_scale(y_k, opts)
    state = run_vi_student(y_k / scale, S_ck, hp, opts)
    return _vi_output(state, W_k, scale)


def estimate_ls(y_k, S_ck, W_k, rcond: float = 1e-10) -> EstimatorOutput:
    """Minimum-norm least squares via SVD, singular values below ``rcond * s_max`` dropped."""
    alpha_hat = np.linalg.lstsq(S_ck, y_k, rcond=rcond)[0]
    return EstimatorOutput(c_hat=W_k @ alpha_hat, alpha_hat=alpha_hat)


def estimate_lmmse(y_k, S_ck, W_k, prior_var, noise_var: float) -> EstimatorOutput:
    """Linear MMSE in gain space with diagonal prior covariance ``D``.

    Computes ``D S^H (S D S^H + s2 I)^-1 y`` in the equivalent small form
    ``(S^H S + s2 D^-1)^-1 S^H y``.
    """
    prior_var = np.broadcast_to(np.asarray(prior_var, dtype=float), (S_ck.shape[1],))
    if np.any(prior_var <= 0):
        raise ValueError("prior variances must be positive")
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    system = S_ck.conj().T @ S_ck + np.diag(noise_var / prior_var)
    alpha_hat = hermitian_solve(system, S_ck.conj().T @ y_k)
    return EstimatorOutput(c_hat=W_k @ alpha_hat, alpha_hat=alpha_hat)


def marginal_laplace_pdf(alpha, gamma: float):
    """Single-component complex adaptive Laplace density ``gamma/(2 pi) exp(-sqrt(gamma)|alpha|)``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return gamma / (2 * np.pi) * np.exp(-np.sqrt(gamma) * np.abs(alpha))
