"""Domain types, spectral densities and exponential-sum memory kernels.

All frequencies, rates and couplings are dimensionless multiples of the
atomic transition frequency ``omega0``, which is fixed to 1.  Times are in
units of ``1/omega0``.

Kernels are always stored as exponential sums

    G(t) = sum_k coeff_k * exp(-exponent_k * t)

so that the convolution in the amplitude equations reduces to one linear
auxiliary ODE per term, and the same representation feeds the HEOM bath
decomposition.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

OMEGA0 = 1.0


class Topology(enum.Enum):
    ALL_TO_ALL = "all_to_all"
    CHAIN = "chain"


class Cavity(enum.Enum):
    SINGLE_LORENTZIAN = "single"
    DOUBLE_DETUNED = "double"


class ConfigError(ValueError):
    """Raised when a configuration violates a parameter constraint."""


@dataclass(frozen=True)
class SystemConfig:
    """N two-level atoms coupled to a Lorentzian cavity reservoir.

    Parameters
    ----------
    n_atoms : int
        Number of atoms ``N``.
    lam : float
        Cavity coupling strength (per Lorentzian peak for the double cavity).
    gamma : float
        Spectral width of the Lorentzian(s).
    dipole : float
        Direct dipole-dipole coupling between atoms.
    detuning : float
        Peak offset ``+-detuning`` of the double cavity. Must be 0 for a
        single resonant cavity.
    topology, cavity
        Coupling graph between atoms and reservoir structure.
    """

    n_atoms: int = 1
    lam: float = 0.1
    gamma: float = 0.1
    dipole: float = 0.1
    detuning: float = 0.0
    topology: Topology = Topology.ALL_TO_ALL
    cavity: Cavity = Cavity.SINGLE_LORENTZIAN
    omega0: float = field(default=OMEGA0)

    def __post_init__(self):
        if isinstance(self.n_atoms, bool) or int(self.n_atoms) != self.n_atoms:
            raise ConfigError(f"n_atoms must be an integer, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        for name in ("lam", "gamma", "dipole", "detuning", "omega0"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "topology", Topology(self.topology))
        object.__setattr__(self, "cavity", Cavity(self.cavity))

        if self.n_atoms < 1:
            raise ConfigError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.lam < 0:
            raise ConfigError(f"lam must be >= 0, got {self.lam}")
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.detuning < 0:
            raise ConfigError(f"detuning must be >= 0, got {self.detuning}")
        if self.omega0 != OMEGA0:
            raise ConfigError("omega0 is the unit of frequency and must equal 1")
        if self.cavity is Cavity.SINGLE_LORENTZIAN and self.detuning != 0:
            raise ConfigError("a single resonant cavity requires detuning = 0")

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SpectralDensity:
    """Lorentzian or symmetric double-Lorentzian reservoir spectral density."""

    cavity: Cavity
    lam: float
    gamma: float
    detuning: float = 0.0
    omega0: float = OMEGA0

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "SpectralDensity":
        return cls(cfg.cavity, cfg.lam, cfg.gamma, cfg.detuning, cfg.omega0)

    @property
    def centers(self) -> tuple[float, ...]:
        if self.cavity is Cavity.SINGLE_LORENTZIAN:
            return (self.omega0,)
        return (self.omega0 + self.detuning, self.omega0 - self.detuning)

    def __call__(self, omega):
        return spectral_density_value(self, omega)


@dataclass(frozen=True)
class MemoryKernel:
    """Exponential-sum kernel ``G(t) = sum_k c_k exp(-e_k t)``."""

    coeffs: tuple[complex, ...]
    exponents: tuple[complex, ...]

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        exponents = tuple(complex(e) for e in self.exponents)
        if len(coeffs) != len(exponents) or not coeffs:
            raise ValueError("kernel needs matching, non-empty coefficient and exponent lists")
        if any(e.real <= 0 for e in exponents):
            raise ValueError("kernel exponents must have positive real part")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "exponents", exponents)

    @property
    def terms(self) -> list[tuple[complex, complex]]:
        return list(zip(self.coeffs, self.exponents))

    def __len__(self) -> int:
        return len(self.coeffs)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        c = np.asarray(self.coeffs)
        e = np.asarray(self.exponents)
        return np.sum(c * np.exp(-np.multiply.outer(t, e)), axis=-1)


@dataclass
class AmplitudeState:
    """Single-excitation amplitudes plus one convolution auxiliary per kernel term.

    ``c_plus`` is always derived from ``c`` and never stored.
    """

    c: np.ndarray
    z: np.ndarray
    c0: complex = 0.0

    @property
    def c_plus(self) -> complex:
        return complex(np.sum(self.c))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.c, self.z]).astype(complex)

    @classmethod
    def unpack(cls, y: np.ndarray, n_atoms: int, c0: complex = 0.0) -> "AmplitudeState":
        return cls(c=np.array(y[:n_atoms]), z=np.array(y[n_atoms:]), c0=c0)


def spectral_density_value(sd: SpectralDensity, omega):
    """Evaluate ``J(omega)``.

    Single cavity: ``lam*gamma / (gamma**2 + (omega - omega0)**2)``.
    Double cavity: the sum of two such Lorentzians centred on
    ``omega0 +- detuning``.
    """
    omega = np.asarray(omega, dtype=float)
    value = sum(sd.lam * sd.gamma / (sd.gamma**2 + (omega - w) ** 2) for w in sd.centers)
    return value if value.ndim else float(value)


def memory_kernel_from(sd: SpectralDensity) -> MemoryKernel:
    """Exponential-sum memory kernel for a spectral density.

    The normalisation follows ``G(t) = lam * exp(-gamma t)`` for the single
    cavity, so ``G(t) = (1/pi) * int J(w) exp(i(omega0 - w)t) dw``.  The
    double cavity ``2 lam exp(-gamma t) cos(detuning t)`` is split into its
    two conjugate exponentials.
    """
    if sd.cavity is Cavity.SINGLE_LORENTZIAN:
        return MemoryKernel((sd.lam,), (sd.gamma,))
    return MemoryKernel(
        (sd.lam, sd.lam),
        (complex(sd.gamma, sd.detuning), complex(sd.gamma, -sd.detuning)),
    )


def kernel_from_config(cfg: SystemConfig) -> MemoryKernel:
    return memory_kernel_from(SpectralDensity.from_config(cfg))


def kernel_laplace(kernel: MemoryKernel, s: complex) -> complex:
    """Laplace transform ``sum_k c_k / (s + e_k)``.

    Raises
    ------
    ZeroDivisionError
        If ``s`` sits on a pole ``-e_k``.
    """
    s = complex(s)
    total = 0j
    for c, e in kernel.terms:
        if s + e == 0:
            raise ZeroDivisionError(f"s = {s} is a pole of the kernel transform")
        total += c / (s + e)
    return total


@dataclass
class TimeSeries:
    """Sampled populations ``|c_i|^2`` and total polarisation ``|c_+|``.

    ``amplitudes`` (shape ``[time, atom]``) is kept when the solver works
    with amplitudes; density-matrix solvers leave it as ``None`` and may
    store the physical density matrices in ``states`` instead.
    """

    times: np.ndarray
    populations: np.ndarray
    total_polarisation: np.ndarray
    amplitudes: np.ndarray | None = None
    label: str = ""
    states: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_atoms(self) -> int:
        return self.populations.shape[1]

    @classmethod
    def from_amplitudes(cls, times, amplitudes, label: str = "") -> "TimeSeries":
        amplitudes = np.asarray(amplitudes, dtype=complex)
        return cls(
            times=np.asarray(times, dtype=float),
            populations=np.abs(amplitudes) ** 2,
            total_polarisation=np.abs(amplitudes.sum(axis=1)),
            amplitudes=amplitudes,
            label=label,
        )
