"""Single-excitation dynamics under the rotating wave approximation.

Amplitude equations (interaction picture, ``omega0 = 1``)::

    dc_i/dt = -i Lambda (A c)_i - int_0^t G(t - t1) c_+(t1) dt1

with ``A`` the all-to-all (``ones - I``) or nearest-neighbour chain
adjacency.  For an exponential-sum kernel each convolution term becomes an
auxiliary ``z_k`` with ``dz_k/dt = coeff_k c_+ - exponent_k z_k`` and
``z_k(0) = 0``, which turns the Volterra system into a linear ODE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import (
    AmplitudeState,
    Cavity,
    ConfigError,
    MemoryKernel,
    SystemConfig,
    TimeSeries,
    Topology,
    kernel_from_config,
)

GAMMA_ZERO_THRESHOLD = 1e-10
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-10
STEADY_STATE_WINDOW = 0.1


class SolverError(RuntimeError):
    """Raised when numerical integration fails."""


def _as_amplitudes(c0, n_atoms: int) -> np.ndarray:
    c0 = np.asarray(c0, dtype=complex).ravel()
    if c0.shape != (n_atoms,):
        raise ConfigError(f"expected {n_atoms} initial amplitudes, got {c0.size}")
    if np.sum(np.abs(c0) ** 2) > 1 + 1e-12:
        raise ConfigError("initial amplitudes must satisfy sum |c_i|^2 <= 1")
    return c0


def _as_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0 or times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must start at 0 and be strictly increasing")
    return times


@dataclass(frozen=True)
class SymmetricSolution:
    """Closed-form solution for all-to-all coupling in a resonant Lorentzian cavity.

    ``mu = (gamma - i Lambda (N-1)) / 2`` and ``Gamma_rate = sqrt(mu^2 - lam N)``
    on the principal branch.
    """

    mu: complex
    Gamma_rate: complex
    c_init: np.ndarray
    dipole: float
    n_atoms: int

    @classmethod
    def from_config(cls, cfg: SystemConfig, c0) -> "SymmetricSolution":
        if cfg.topology is not Topology.ALL_TO_ALL:
            raise ConfigError("the closed-form solution requires all-to-all coupling")
        if cfg.cavity is not Cavity.SINGLE_LORENTZIAN:
            raise ConfigError("the closed-form solution requires a single resonant cavity")
        n = cfg.n_atoms
        mu = 0.5 * complex(cfg.gamma, -cfg.dipole * (n - 1))
        return cls(mu, np.sqrt(mu * mu - cfg.lam * n), _as_amplitudes(c0, n), cfg.dipole, n)

    @property
    def c_plus0(self) -> complex:
        return complex(np.sum(self.c_init))

    def polarisation_factor(self, t, Gamma: complex | None = None) -> np.ndarray:
        """``exp(-mu* t) (cosh(Gamma t) + mu/Gamma sinh(Gamma t))``.

        Evaluated as a sum of decaying exponentials to avoid overflow at
        large ``Gamma t``; short ``|Gamma t|`` uses ``sinh(x)/x`` directly and
        ``|Gamma| < 1e-10`` takes the exact limit ``1 + mu t``.
        """
        t = np.asarray(t, dtype=float)
        mu = self.mu
        g = self.Gamma_rate if Gamma is None else complex(Gamma)
        decay = np.exp(-np.conj(mu) * t)
        if abs(g) < GAMMA_ZERO_THRESHOLD:
            return decay * (1 + mu * t)
        x = g * t
        small = np.abs(x) < 1
        out = np.empty(t.shape, dtype=complex)
        xs = x[small]
        sinhc = np.ones_like(xs)
        nz = xs != 0
        sinhc[nz] = np.sinh(xs[nz]) / xs[nz]
        out[small] = decay[small] * (np.cosh(xs) + mu * t[small] * sinhc)
        tl = t[~small]
        a = np.conj(mu)
        out[~small] = 0.5 * (
            (1 + mu / g) * np.exp((g - a) * tl) + (1 - mu / g) * np.exp((-g - a) * tl)
        )
        return out

    def amplitudes(self, t, Gamma: complex | None = None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        n = self.n_atoms
        dark = self.c_init - self.c_plus0 / n
        bright = (self.c_plus0 / n) * self.polarisation_factor(t, Gamma)
        return np.exp(1j * self.dipole * t)[:, None] * dark[None, :] + bright[:, None]


def solve_symmetric_analytic(cfg: SystemConfig, c0, times) -> TimeSeries:
    """Closed-form amplitudes for all-to-all atoms in a resonant Lorentzian cavity.

    ``c_i(t) = (c_i(0) - c_+(0)/N) e^{i Lambda t}
    + (c_+(0)/N) e^{-mu* t} (cosh Gamma t + mu/Gamma sinh Gamma t)``
    """
    sol = SymmetricSolution.from_config(cfg, c0)
    times = np.asarray(times, dtype=float)
    return TimeSeries.from_amplitudes(times, sol.amplitudes(times), label="analytic")


def steady_state(cfg: SystemConfig, c0) -> np.ndarray:
    """Long-time populations ``|c_i(0) - c_+(0)/N|^2`` for all-to-all coupling."""
    if cfg.topology is not Topology.ALL_TO_ALL:
        raise ConfigError("steady_state applies to all-to-all coupling only")
    if cfg.lam <= 0:
        raise ConfigError("steady state needs a decay channel: lam must be > 0")
    c0 = _as_amplitudes(c0, cfg.n_atoms)
    return np.abs(c0 - c0.sum() / cfg.n_atoms) ** 2


def coupling_matrix(cfg: SystemConfig) -> np.ndarray:
    n = cfg.n_atoms
    if cfg.topology is Topology.ALL_TO_ALL:
        return np.ones((n, n)) - np.eye(n)
    if n != 3:
        raise ConfigError(f"chain topology is supported for N = 3 only, got N = {n}")
    return np.eye(n, k=1) + np.eye(n, k=-1)


def generator_matrix(cfg: SystemConfig, kernel: MemoryKernel) -> np.ndarray:
    """Constant matrix ``M`` of the linear system ``dy/dt = M y``, ``y = (c, z)``."""
    n, k = cfg.n_atoms, len(kernel)
    m = np.zeros((n + k, n + k), dtype=complex)
    m[:n, :n] = -1j * cfg.dipole * coupling_matrix(cfg)
    m[:n, n:] = -1.0
    for j, (coeff, exponent) in enumerate(kernel.terms):
        m[n + j, :n] = coeff
        m[n + j, n + j] = -exponent
    return m


def solve_numeric(
    cfg: SystemConfig,
    kernel: MemoryKernel | None,
    c0,
    times,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    method: str = "RK45",
) -> TimeSeries:
    """Integrate the amplitude equations with the convolution reduced to auxiliaries.

    Parameters
    ----------
    cfg : SystemConfig
        Atom count, topology and couplings. Chains must have N = 3.
    kernel : MemoryKernel or None
        Exponential-sum memory kernel; built from ``cfg`` when ``None``.
    c0 : array_like of complex
        Initial amplitudes ``c_i(0)``.
    times : array_like of float
        Output times, starting at 0 and strictly increasing.
    rtol, atol : float
        Tolerances of the embedded Runge-Kutta integrator.
    """
    kernel = kernel_from_config(cfg) if kernel is None else kernel
    c0 = _as_amplitudes(c0, cfg.n_atoms)
    times = _as_times(times)
    n = cfg.n_atoms
    adjacency = coupling_matrix(cfg)
    coeffs = np.asarray(kernel.coeffs)
    exponents = np.asarray(kernel.exponents)
    y0 = AmplitudeState(c=c0, z=np.zeros(len(kernel), dtype=complex)).pack()

    # structured right-hand side: sums of exact opposites cancel exactly, so
    # dark states stay fixed points (a dense matvec with FMA leaves ~1e-18)
    def rhs(t, y):
        c, z = y[:n], y[n:]
        dc = -1j * cfg.dipole * (adjacency @ c) - z.sum()
        dz = coeffs * c.sum() - exponents * z
        return np.concatenate([dc, dz])

    if times.size == 1:
        ys = y0[None, :]
    else:
        res = solve_ivp(
            rhs,
            (0.0, times[-1]),
            y0,
            method=method,
            t_eval=times,
            rtol=rtol,
            atol=atol,
        )
        if not res.success:
            raise SolverError(f"amplitude integration failed: {res.message}")
        ys = res.y.T
    return TimeSeries.from_amplitudes(times, ys[:, : cfg.n_atoms], label="numeric")


def superradiant_expansion(cfg: SystemConfig, t, c0=None) -> np.ndarray:
    """Fourth-order short-time population of each atom for uniform ``c_i(0) = 1/sqrt(N)``.

    ``P_i(t) = (1/N) Re[1 - lam N t^2 + (2/3) lam mu N t^3
    - (1/3) lam N (mu^2 - lam N) t^4]``
    """
    n = cfg.n_atoms
    if c0 is not None:
        c0 = _as_amplitudes(c0, n)
        if not np.allclose(c0, 1 / np.sqrt(n), rtol=0, atol=1e-12):
            raise ConfigError("the expansion assumes c_i(0) = 1/sqrt(N) for every atom")
    t = np.asarray(t, dtype=float)
    lam = cfg.lam
    mu = 0.5 * complex(cfg.gamma, -cfg.dipole * (n - 1))
    poly = (
        1
        - lam * n * t**2
        + (2 / 3) * lam * mu * n * t**3
        - (1 / 3) * lam * n * (mu**2 - lam * n) * t**4
    )
    return np.real(poly) / n


def gamma_rate_limit(cfg: SystemConfig) -> complex:
    """``Gamma`` in the narrow-cavity limit ``gamma -> 0``."""
    n = cfg.n_atoms
    return 1j * np.sqrt(0.25 * cfg.dipole**2 * (n - 1) ** 2 + cfg.lam * n)


def oscillation_predicate(cfg: SystemConfig) -> bool:
    """True when populations oscillate without dipole coupling: ``gamma^2 < 4 lam N``."""
    if cfg.dipole != 0:
        raise ConfigError("oscillation_predicate needs dipole = 0; inspect Gamma_rate instead")
    if cfg.cavity is not Cavity.SINGLE_LORENTZIAN:
        raise ConfigError("oscillation_predicate applies to a single resonant cavity")
    return cfg.gamma**2 < 4 * cfg.lam * cfg.n_atoms


def time_averaged_tail(series: TimeSeries, fraction: float = STEADY_STATE_WINDOW) -> np.ndarray:
    """Mean population per atom over the final ``fraction`` of the run."""
    start = int(np.floor(len(series.times) * (1 - fraction)))
    return series.populations[start:].mean(axis=0)


def interior_maxima(values) -> np.ndarray:
    """Indices of strict interior local maxima."""
    v = np.asarray(values)
    return np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1


def first_peak_time(series: TimeSeries, atom: int) -> float:
    """Time of the first interior maximum of atom ``atom`` (0-based); ``inf`` if none."""
    idx = interior_maxima(series.populations[:, atom])
    return float(series.times[idx[0]]) if idx.size else float("inf")
