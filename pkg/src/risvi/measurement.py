"""Uplink pilot protocol: T RIS subblocks of tau pilot slots each.

Every UE repeats the same orthogonal pilot in each subblock while the RIS
holds one phase profile per subblock. Correlating a subblock with a UE's
pilot removes the other UEs. Stacking the T results and vectorizing gives
the linear model ``y_k = S_bar c_k + n_k`` with
``S_bar = sqrt(P) (S^T kron I_N)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .numeric import as_generator, sample_circ_gauss, vec


@dataclass(frozen=True)
class PilotBook:
    tau: int
    K: int
    pilots: np.ndarray  # tau x K, column k is x_k


@dataclass(frozen=True)
class RisProfile:
    S: np.ndarray  # L x T, unit modulus

    @property
    def T(self) -> int:
        return self.S.shape[1]


@dataclass
class MeasurementSet:
    y: list[np.ndarray]
    S_bar: np.ndarray
    S_c: list[np.ndarray]
    sigma2_b: float
    power: float
    tau: int

    @property
    def effective_noise_var(self) -> float:
        """Per-entry noise variance of ``y_k`` after pilot correlation."""
        return self.sigma2_b / self.tau


def gen_pilots(tau: int, K: int) -> PilotBook:
    """DFT pilots ``x_k[u] = exp(j 2 pi k u / tau)``, so ``x_k^T x_g^* = tau delta_kg``."""
    if tau < K:
        raise ValueError(f"need tau >= K for orthogonal pilots, got tau={tau}, K={K}")
    if K < 1:
        raise ValueError("K must be >= 1")
    u = np.arange(tau)[:, None]
    k = np.arange(K)[None, :]
    return PilotBook(tau=tau, K=K, pilots=np.exp(2j * np.pi * k * u / tau))


def gen_ris_profile(rng, L: int, T: int) -> RisProfile:
    """Random RIS phases, i.i.d. uniform on [0, 2 pi).

    Phases are drawn subblock by subblock, so the first T' columns of a
    profile are the same for every T >= T' under one stream.
    """
    if L < 1 or T < 1:
        raise ValueError("L and T must be >= 1")
    gen = as_generator(rng)
    phases = gen.uniform(0.0, 2 * np.pi, size=(T, L)).T
    return RisProfile(S=np.exp(1j * phases))


def sensing_matrix(profile: RisProfile, power: float, n_bs: int) -> np.ndarray:
    return np.sqrt(power) * np.kron(profile.S.T, np.eye(n_bs))


def simulate_slot(chan: ChannelRealization, profile: RisProfile, pilots: PilotBook,
                  power: float, rng: np.random.Generator, sigma2_b: float,
                  t: int, u: int) -> np.ndarray:
    """Received BS vector in slot ``u`` of subblock ``t`` (both 0-based)."""
    if not 0 <= t < profile.T or not 0 <= u < pilots.tau:
        raise IndexError(f"slot ({t}, {u}) outside {profile.T} x {pilots.tau}")
    s_t = profile.S[:, t]
    reflected = sum(f_k * pilots.pilots[u, k] for k, f_k in enumerate(chan.f))
    signal = np.sqrt(power) * (chan.G @ (s_t * reflected))
    return signal + sample_circ_gauss(rng, chan.G.shape[0], sigma2_b)


def decorrelate(Yt: np.ndarray, pilots: PilotBook, k: int) -> np.ndarray:
    """``(1/tau) Y[t] x_k^*``: UE k's component of one subblock."""
    return Yt @ pilots.pilots[:, k].conj() / pilots.tau


def _check_dims(chan, profile, pilots):
    n_bs, n_ris = chan.G.shape
    if profile.S.shape[0] != n_ris:
        raise ValueError(f"RIS profile has {profile.S.shape[0]} rows, channel has L={n_ris}")
    if pilots.K != chan.n_users:
        raise ValueError(f"pilot book has K={pilots.K}, channel has {chan.n_users} UEs")


def assemble(chan: ChannelRealization, profile: RisProfile, pilots: PilotBook,
             power: float, rng, sigma2_b: float) -> MeasurementSet:
    """Run every slot of the protocol, decorrelate and stack per UE."""
    _check_dims(chan, profile, pilots)
    gen = as_generator(rng)
    n_bs = chan.G.shape[0]
    T = profile.T
    Y_k = np.zeros((pilots.K, n_bs, T), dtype=complex)
    for t in range(T):
        Yt = np.stack(
            [simulate_slot(chan, profile, pilots, power, gen, sigma2_b, t, u)
             for u in range(pilots.tau)],
            axis=1,
        )
        for k in range(pilots.K):
            Y_k[k, :, t] = decorrelate(Yt, pilots, k)
    return _finish(chan, profile, pilots, power, sigma2_b, [vec(Y) for Y in Y_k])


def assemble_direct(chan: ChannelRealization, profile: RisProfile, pilots: PilotBook,
                    power: float, rng, sigma2_b: float) -> MeasurementSet:
    """Fast path: ``y_k = S_bar c_k + vec(N_k)``.

    Noise is drawn in the same slot order as :func:`assemble`, so the two
    paths agree to rounding under a shared stream.
    """
    _check_dims(chan, profile, pilots)
    gen = as_generator(rng)
    n_bs = chan.G.shape[0]
    T, tau = profile.T, pilots.tau
    noise = sample_circ_gauss(gen, T * tau * n_bs, sigma2_b).reshape(T, tau, n_bs)
    S_bar = sensing_matrix(profile, power, n_bs)
    ys = []
    for k in range(pilots.K):
        N_k = np.einsum("tun,u->nt", noise, pilots.pilots[:, k].conj()) / tau
        ys.append(S_bar @ chan.c[k] + vec(N_k))
    return _finish(chan, profile, pilots, power, sigma2_b, ys, S_bar)


def _finish(chan, profile, pilots, power, sigma2_b, ys, S_bar=None):
    if S_bar is None:
        S_bar = sensing_matrix(profile, power, chan.G.shape[0])
    return MeasurementSet(
        y=ys,
        S_bar=S_bar,
        S_c=[S_bar @ W for W in chan.W],
        sigma2_b=float(sigma2_b),
        power=float(power),
        tau=pilots.tau,
    )
