"""Geometric RIS-BS / UE-RIS channels and the cascaded dictionary.

Steering vectors follow the half-wavelength convention

    a(phi)[i] = exp(j 2 pi d i sin(phi)) / sqrt(n)

for the BS ULA.  The RIS UPA vector is ``kron(h, v)`` with a horizontal
phase ``sin(az) cos(el)`` and a vertical phase ``sin(el)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .numeric import as_generator, khatri_rao, kron, sample_circ_gauss, vec
from .special import bessel_k0


@dataclass(frozen=True)
class ArrayGeometry:
    n_bs: int = 16
    ris_h: int = 10
    ris_v: int = 10
    spacing: float = 0.5

    def __post_init__(self):
        if self.n_bs < 1 or self.ris_h < 1 or self.ris_v < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.spacing <= 0:
            raise ValueError("element spacing must be positive")

    @property
    def n_ris(self) -> int:
        return self.ris_h * self.ris_v


@dataclass(frozen=True)
class AnglePriors:
    """Uniform sectors (radians) from which path angles are drawn."""

    azimuth: tuple[float, float] = (-np.pi / 3, np.pi / 3)
    elevation: tuple[float, float] = (-np.pi / 6, np.pi / 6)
    bs_aoa: tuple[float, float] = (-np.pi / 3, np.pi / 3)


@dataclass(frozen=True)
class PathSet:
    """Angles and raw complex gains of one link's propagation paths.

    ``gains`` are the unscaled CN(0, sigma^2) path gains; the array-size
    factor ``sqrt(N L / M)`` (or ``sqrt(L / M)``) is applied by the channel
    builders. ``bs_aoa`` is only present for the RIS-BS link.
    """

    azimuth: np.ndarray
    elevation: np.ndarray
    gains: np.ndarray
    bs_aoa: np.ndarray | None = None

    def __post_init__(self):
        if len(self.azimuth) != len(self.gains) or len(self.elevation) != len(self.gains):
            raise ValueError("angle and gain arrays must have equal length")
        if self.bs_aoa is not None and len(self.bs_aoa) != len(self.gains):
            raise ValueError("bs_aoa length must match the number of paths")

    @property
    def count(self) -> int:
        return len(self.gains)


@dataclass(frozen=True)
class PathLossModel:
    mu0_db: float = -20.0
    d0: float = 1.0
    eta: float = 2.0

    def __post_init__(self):
        if self.d0 <= 0:
            raise ValueError("reference distance must be positive")


@dataclass
class ChannelRealization:
    """Ground truth for one trial: ``c[k] = W[k] @ alpha[k] = vec(G diag(f[k]))``."""

    G: np.ndarray
    f: list[np.ndarray]
    W: list[np.ndarray]
    alpha: list[np.ndarray]
    c: list[np.ndarray]
    paths_rb: PathSet
    paths_ur: list[PathSet]
    sigma2_rb: float
    sigma2_ur: list[float]
    ue_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def n_users(self) -> int:
        return len(self.f)


def steer_ula(n: int, phi: float, spacing: float = 0.5) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(n)
    return np.exp(2j * np.pi * spacing * i * np.sin(phi)) / np.sqrt(n)


def _upa_factors(lh, lv, az, el, spacing):
    horizontal = steer_ula(lh, 0.0, spacing) * np.exp(
        2j * np.pi * spacing * np.arange(lh) * np.sin(az) * np.cos(el)
    )
    vertical = steer_ula(lv, 0.0, spacing) * np.exp(
        2j * np.pi * spacing * np.arange(lv) * np.sin(el)
    )
    return horizontal, vertical


def steer_upa(lh: int, lv: int, az: float, el: float, spacing: float = 0.5) -> np.ndarray:
    if lh < 1 or lv < 1:
        raise ValueError("lh and lv must be >= 1")
    horizontal, vertical = _upa_factors(lh, lv, az, el, spacing)
    return np.kron(horizontal, vertical)


def ula_matrix(n: int, phis, spacing: float = 0.5) -> np.ndarray:
    phis = np.atleast_1d(phis)
    return np.stack([steer_ula(n, p, spacing) for p in phis], axis=1)


def upa_matrix(geom: ArrayGeometry, azimuth, elevation) -> np.ndarray:
    cols = [
        steer_upa(geom.ris_h, geom.ris_v, az, el, geom.spacing)
        for az, el in zip(np.atleast_1d(azimuth), np.atleast_1d(elevation))
    ]
    return np.stack(cols, axis=1)


def path_loss(model: PathLossModel, d: float) -> float:
    """Linear power gain ``10^(mu0/10) (d / d0)^(-eta)``."""
    if np.any(np.asarray(d) <= 0):
        raise ValueError("link distance must be positive")
    return 10.0 ** (model.mu0_db / 10.0) * (np.asarray(d) / model.d0) ** (-model.eta)


def _degenerate(*angle_arrays) -> bool:
    stacked = np.stack(angle_arrays, axis=1)
    for i in range(len(stacked)):
        for j in range(i + 1, len(stacked)):
            if np.all(np.abs(stacked[i] - stacked[j]) < 1e-6):
                return True
    return False


def draw_paths(rng, count: int, sigma2: float, priors: AnglePriors = AnglePriors(),
               with_bs_aoa: bool = False) -> PathSet:
    if count < 1:
        raise ValueError("number of paths must be >= 1")
    gen = as_generator(rng)
    while True:
        az = gen.uniform(*priors.azimuth, size=count)
        el = gen.uniform(*priors.elevation, size=count)
        aoa = gen.uniform(*priors.bs_aoa, size=count) if with_bs_aoa else None
        angles = (az, el) if aoa is None else (az, el, aoa)
        if not _degenerate(*angles):
            break
    gains = sample_circ_gauss(gen, count, sigma2)
    return PathSet(azimuth=az, elevation=el, gains=gains, bs_aoa=aoa)


def scaled_gains_rb(paths: PathSet, geom: ArrayGeometry) -> np.ndarray:
    return np.sqrt(geom.n_bs * geom.n_ris / paths.count) * paths.gains


def scaled_gains_ur(paths: PathSet, geom: ArrayGeometry) -> np.ndarray:
    return np.sqrt(geom.n_ris / paths.count) * paths.gains


def ris_bs_channel(paths: PathSet, geom: ArrayGeometry) -> np.ndarray:
    """``G = A_B diag(alpha_RB) A_R^H`` for the given path set."""
    a_b = ula_matrix(geom.n_bs, paths.bs_aoa, geom.spacing)
    a_r = upa_matrix(geom, paths.azimuth, paths.elevation)
    return (a_b * scaled_gains_rb(paths, geom)) @ a_r.conj().T


def ue_ris_channel(paths: PathSet, geom: ArrayGeometry) -> np.ndarray:
    a_r = upa_matrix(geom, paths.azimuth, paths.elevation)
    return a_r @ scaled_gains_ur(paths, geom)


def draw_ris_bs_channel(rng, geom: ArrayGeometry, m_rb: int, sigma2_rb: float,
                        priors: AnglePriors = AnglePriors()):
    paths = draw_paths(rng, m_rb, sigma2_rb, priors, with_bs_aoa=True)
    return ris_bs_channel(paths, geom), paths


def draw_ue_ris_channel(rng, geom: ArrayGeometry, m_ur: int, sigma2_ur: float,
                        priors: AnglePriors = AnglePriors()):
    paths = draw_paths(rng, m_ur, sigma2_ur, priors, with_bs_aoa=False)
    return ue_ris_channel(paths, geom), paths


def build_dictionary(paths_rb: PathSet, paths_ur: PathSet, geom: ArrayGeometry) -> np.ndarray:
    """Cascaded dictionary ``W`` with ``vec(G diag(f)) = W (alpha_RB kron alpha_UR)``.

    ``W = ((A_R,RB^H <> A_R,UR^T)^T <> A_B,RB (I kron 1^T))`` where ``<>`` is
    the column-wise Khatri-Rao product.
    """
    a_b = ula_matrix(geom.n_bs, paths_rb.bs_aoa, geom.spacing)
    a_r_rb = upa_matrix(geom, paths_rb.azimuth, paths_rb.elevation)
    a_r_ur = upa_matrix(geom, paths_ur.azimuth, paths_ur.elevation)
    m_ur = paths_ur.count
    a_b_tilde = a_b @ np.kron(np.eye(paths_rb.count), np.ones((1, m_ur)))
    ris_part = khatri_rao(a_r_rb.conj().T, a_r_ur.T).T
    return khatri_rao(ris_part, a_b_tilde)


def cascaded_gains(paths_rb: PathSet, paths_ur: PathSet, geom: ArrayGeometry) -> np.ndarray:
    return kron(scaled_gains_rb(paths_rb, geom)[:, None],
                scaled_gains_ur(paths_ur, geom)[:, None]).ravel()


def cascaded_channel(G: np.ndarray, f: np.ndarray) -> np.ndarray:
    return vec(G * f[None, :])


def place_users(rng, count: int, center=(400.0, 0.0), radius: float = 5.0) -> np.ndarray:
    """UE positions uniformly spread in angle on a circle's perimeter."""
    gen = as_generator(rng)
    theta = gen.uniform(0.0, 2 * np.pi, size=count)
    return np.asarray(center)[None, :] + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)


def realize(paths_rb: PathSet, paths_ur: list[PathSet], geom: ArrayGeometry,
            sigma2_rb: float, sigma2_ur: list[float], ue_positions=None) -> ChannelRealization:
    """Assemble the ground-truth channels for fixed path sets."""
    G = ris_bs_channel(paths_rb, geom)
    f = [ue_ris_channel(p, geom) for p in paths_ur]
    W = [build_dictionary(paths_rb, p, geom) for p in paths_ur]
    alpha = [cascaded_gains(paths_rb, p, geom) for p in paths_ur]
    c = [w @ a for w, a in zip(W, alpha)]
    return ChannelRealization(
        G=G, f=f, W=W, alpha=alpha, c=c, paths_rb=paths_rb, paths_ur=list(paths_ur),
        sigma2_rb=float(sigma2_rb), sigma2_ur=[float(s) for s in sigma2_ur],
        ue_positions=np.zeros((0, 2)) if ue_positions is None else np.asarray(ue_positions),
    )


def draw_realization(rng, geom: ArrayGeometry, m_rb: int, m_ur: list[int],
                     sigma2_rb: float, sigma2_ur: list[float],
                     priors: AnglePriors = AnglePriors(), ue_positions=None) -> ChannelRealization:
    gen = as_generator(rng)
    paths_rb = draw_paths(gen, m_rb, sigma2_rb, priors, with_bs_aoa=True)
    paths_ur = [draw_paths(gen, m, s2, priors) for m, s2 in zip(m_ur, sigma2_ur)]
    return realize(paths_rb, paths_ur, geom, sigma2_rb, sigma2_ur, ue_positions)


def perturb_angles(paths: PathSet, rng, delta2: float) -> PathSet:
    """Add i.i.d. N(0, delta2) errors (radians) to every angle; gains untouched."""
    if delta2 < 0:
        raise ValueError("delta2 must be non-negative")
    gen = as_generator(rng)
    sd = np.sqrt(delta2)
    az = paths.azimuth + sd * gen.standard_normal(paths.count)
    el = paths.elevation + sd * gen.standard_normal(paths.count)
    aoa = None
    if paths.bs_aoa is not None:
        aoa = paths.bs_aoa + sd * gen.standard_normal(paths.count)
    return replace(paths, azimuth=az, elevation=el, bs_aoa=aoa)


def product_gaussian_pdf(z, sigma1: float, sigma2: float):
    """Density of ``z = x1 x2`` for independent x1 ~ CN(0, s1^2), x2 ~ CN(0, s2^2).

    ``f(z) = 2 / (pi s1^2 s2^2) K0(2|z| / (s1 s2))``, a density over the
    complex plane. It diverges logarithmically at ``z = 0``, where ``inf``
    is returned.
    """
    if sigma1 <= 0 or sigma2 <= 0:
        raise ValueError("sigma1 and sigma2 must be positive")
    s = sigma1 * sigma2
    r = np.abs(np.asarray(z))
    return 2.0 / (np.pi * s * s) * bessel_k0(2.0 * r / s)
