"""Laplace-domain rate analysis for one atom between two detuned cavities.

With ``G~(s) = 2 lam (gamma + s) / (Delta^2 + (gamma + s)^2)`` the single-atom
amplitude is ``c(0) (Delta^2 + (gamma+s)^2) / P(s)`` where

    P(s) = s^3 + 2 gamma s^2 + (Delta^2 + gamma^2 + 2 lam) s + 2 lam gamma

The decay rates are the roots of ``P``.  A complex-conjugate root pair means
oscillating (non-Markovian) dynamics; three real roots mean monotone decay.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_OMEGA = np.exp(2j * np.pi / 3)
BOUNDARY_EPS = 1e-12


class Regime(enum.Enum):
    MARKOVIAN = "M"
    NON_MARKOVIAN = "NM"
    BOUNDARY = "B"


@dataclass(frozen=True)
class CubicRates:
    """Monic cubic ``s^3 + a2 s^2 + a1 s + a0`` and its three roots."""

    coefficients: tuple[float, float, float]
    roots: np.ndarray

    @property
    def has_complex_pair(self) -> bool:
        return bool(np.any(self.roots.imag != 0))

    def residues(self, numerator) -> np.ndarray:
        """Residues of ``numerator(s) / P(s)`` at each (simple) root."""
        a0, a1, a2 = self.coefficients
        s = self.roots
        dp = 3 * s**2 + 2 * a2 * s + a1
        return numerator(s) / dp


def characteristic_coefficients(delta: float, gamma: float, lam: float) -> tuple[float, float, float]:
    """``(a0, a1, a2)`` of the single-atom double-cavity characteristic cubic."""
    return (2 * lam * gamma, delta**2 + gamma**2 + 2 * lam, 2 * gamma)


def _cardano(a0: float, a1: float, a2: float) -> np.ndarray:
    shift = a2 / 3
    p = a1 - a2**2 / 3
    q = 2 * a2**3 / 27 - a2 * a1 / 3 + a0
    disc = (q / 2) ** 2 + (p / 3) ** 3
    root = np.sqrt(complex(disc))
    # larger-magnitude branch avoids cancellation in u
    w = -q / 2 + root if abs(-q / 2 + root) >= abs(-q / 2 - root) else -q / 2 - root
    if w == 0:
        y = np.zeros(3, dtype=complex)
    else:
        u = w ** (1 / 3)
        v = -p / (3 * u)
        y = np.array([u + v, _OMEGA * u + v / _OMEGA, u / _OMEGA + _OMEGA * v])
    return y - shift


def _newton(roots: np.ndarray, a0: float, a1: float, a2: float) -> np.ndarray:
    s = roots.copy()
    f = ((s + a2) * s + a1) * s + a0
    df = (3 * s + 2 * a2) * s + a1
    ok = df != 0
    s[ok] -= f[ok] / df[ok]
    return s


def cubic_rates(delta: float, gamma: float, lam: float) -> CubicRates:
    """Roots of the characteristic cubic via Cardano's formula plus one Newton step.

    Roots with negligible imaginary part are snapped to the real axis, and
    a remaining complex pair is made exactly conjugate.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    a0, a1, a2 = characteristic_coefficients(delta, gamma, lam)
    roots = _newton(_cardano(a0, a1, a2), a0, a1, a2)

    if cardano_discriminant(delta, gamma, lam) <= 0:
        roots = roots.real.astype(complex)
    else:
        # one real root and a conjugate pair
        order = np.argsort(np.abs(roots.imag))
        real_root = roots[order[0]].real
        pair = roots[order[1]] if roots[order[1]].imag > 0 else roots[order[2]]
        roots = np.array([real_root, pair, np.conj(pair)])
    roots = roots[np.lexsort((-roots.imag, -roots.real))]
    return CubicRates((a0, a1, a2), roots)


def companion_roots(a0: float, a1: float, a2: float) -> np.ndarray:
    """Eigenvalues of the companion matrix of ``s^3 + a2 s^2 + a1 s + a0``."""
    comp = np.array([[-a2, -a1, -a0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return np.linalg.eigvals(comp)


def cardano_discriminant(delta, gamma, lam):
    """``(3 Delta^2 - gamma^2 + 6 lam)^3 + (9 Delta^2 gamma + gamma^3 - 9 gamma lam)^2``.

    Negative: three real rates (Markovian). Positive: a complex-conjugate
    pair (non-Markovian).  Works elementwise on arrays.
    """
    a = 3 * np.square(delta) - np.square(gamma) + 6 * lam
    b = 9 * np.square(delta) * gamma + gamma**3 - 9 * gamma * lam
    return a**3 + b**2


def _discriminant_scale(delta, gamma, lam):
    a = 3 * np.square(delta) - np.square(gamma) + 6 * lam
    b = 9 * np.square(delta) * gamma + gamma**3 - 9 * gamma * lam
    return np.abs(a) ** 3 + b**2


def classify(delta, gamma, lam, eps: float = BOUNDARY_EPS):
    """Regime per point; values within ``eps`` (relative) of zero are ``BOUNDARY``."""
    d0 = cardano_discriminant(delta, gamma, lam)
    band = eps * _discriminant_scale(delta, gamma, lam)
    labels = np.where(d0 > band, Regime.NON_MARKOVIAN.value, Regime.MARKOVIAN.value)
    labels = np.where(np.abs(d0) <= band, Regime.BOUNDARY.value, labels)
    return labels if labels.ndim else str(labels)


@dataclass(frozen=True)
class DiscriminantMap:
    """Discriminant and regime on a (detuning, width) grid.

    ``values[i, j]`` and ``classification[i, j]`` belong to
    ``delta_axis[i]`` and ``gamma_axis[j]``; CSV rows run over ``gamma``
    fastest (row-major in ``delta``).
    """

    delta_axis: np.ndarray
    gamma_axis: np.ndarray
    lam: float
    values: np.ndarray
    classification: np.ndarray

    def non_markovian(self) -> np.ndarray:
        return self.classification == Regime.NON_MARKOVIAN.value

    def fraction_non_markovian(self) -> float:
        return float(self.non_markovian().mean())

    def to_csv(self, path) -> None:
        Path(path).write_text(self.csv_text())

    def csv_text(self) -> str:
        lines = ["# delta,gamma,discriminant,class"]
        for i, d in enumerate(self.delta_axis):
            for j, g in enumerate(self.gamma_axis):
                lines.append(f"{d:.12g},{g:.12g},{self.values[i, j]:.12g},{self.classification[i, j]}")
        return "\n".join(lines) + "\n"


def discriminant_map(delta_range, gamma_range, lam: float, resolution) -> DiscriminantMap:
    """Evaluate and classify the discriminant on an evenly spaced grid.

    ``resolution`` is an int or a ``(n_delta, n_gamma)`` pair; ranges are
    inclusive ``(low, high)`` bounds.
    """
    n_d, n_g = (resolution, resolution) if np.isscalar(resolution) else resolution
    if int(n_d) < 2 or int(n_g) < 2:
        raise ValueError("resolution must be >= 2 per axis")
    bounds = np.array([*delta_range, *gamma_range], dtype=float)
    if not np.all(np.isfinite(bounds)):
        raise ValueError("grid ranges must be finite")
    if np.any(bounds < 0) or gamma_range[0] <= 0:
        raise ValueError("grid ranges must be positive")
    deltas = np.linspace(delta_range[0], delta_range[1], int(n_d))
    gammas = np.linspace(gamma_range[0], gamma_range[1], int(n_g))
    dd, gg = np.meshgrid(deltas, gammas, indexing="ij")
    return DiscriminantMap(
        delta_axis=deltas,
        gamma_axis=gammas,
        lam=float(lam),
        values=cardano_discriminant(dd, gg, lam),
        classification=classify(dd, gg, lam),
    )


def laplace_amplitude(delta: float, gamma: float, lam: float, times, c0: complex = 1.0) -> np.ndarray:
    """Single-atom amplitude ``c(t)`` by partial fractions over the cubic roots."""
    rates = cubic_rates(delta, gamma, lam)
    res = rates.residues(lambda s: c0 * (delta**2 + (gamma + s) ** 2))
    t = np.asarray(times, dtype=float)
    return np.exp(np.multiply.outer(t, rates.roots)) @ res
