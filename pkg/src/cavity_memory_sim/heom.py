"""Hierarchical equations of motion for atoms coupled through sigma_x to a Lorentzian bath.

The zero-temperature bath correlation ``C(t) = lam exp(-(gamma + i omega0) t)``
is split as ``C = C_R + i C_I`` with two exponentials each, giving four
hierarchy indices ``n = (n_R1, n_R2, n_I1, n_I2)``::

    d rho^n/dt = (-i H_S^x - sum_jk n_jk nu_jk) rho^n
                 - i sum_k c^R_k n_Rk [Q, rho^{n-_Rk}]
                 + sum_k c^I_k n_Ik {Q, rho^{n-_Ik}}
                 - i sum_jk [Q, rho^{n+_jk}]

with ``Q = sum_i sigma^x_i``.  Only ``rho^(0,0,0,0)`` is physical.

The whole hierarchy is assembled once into a sparse generator acting on the
stacked, row-major vectorised ADOs and integrated with an explicit adaptive
Runge-Kutta scheme.
"""

from __future__ import annotations

import enum
import hashlib
import io
import itertools
import json
import struct
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.integrate import DOP853, RK45
from scipy.special import gammaln

from .core import Cavity, ConfigError, SystemConfig, TimeSeries, Topology

MAX_ATOMS = 4
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11
DEFAULT_DEPTH = 6
# physical density-matrix entries never exceed 1 in magnitude
DIVERGENCE_BOUND = 10.0
N_TERMS = 4
SLOT_NAMES = ("R1", "R2", "I1", "I2")

_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_NUMBER = np.array([[0, 0], [0, 1]], dtype=complex)
_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)


class HeomError(RuntimeError):
    """Raised when hierarchy propagation fails or produces non-finite ADOs."""


class Truncation(enum.Enum):
    TOTAL_DEPTH = "total_depth"
    PER_INDEX_CAP = "per_index_cap"


@dataclass(frozen=True)
class BathDecomposition:
    """Exponential decomposition of the real and imaginary bath correlation parts.

    ``C_R(t) = sum_k real_coeffs[k] exp(-real_exponents[k] t)`` and likewise
    for ``C_I``; ``C(t) = C_R(t) + i C_I(t)``.
    """

    real_coeffs: tuple[complex, complex]
    real_exponents: tuple[complex, complex]
    imag_coeffs: tuple[complex, complex]
    imag_exponents: tuple[complex, complex]

    @property
    def real_terms(self):
        return list(zip(self.real_coeffs, self.real_exponents))

    @property
    def imag_terms(self):
        return list(zip(self.imag_coeffs, self.imag_exponents))

    @property
    def coeffs(self) -> np.ndarray:
        """Coefficients in hierarchy slot order R1, R2, I1, I2."""
        return np.array(self.real_coeffs + self.imag_coeffs, dtype=complex)

    @property
    def exponents(self) -> np.ndarray:
        return np.array(self.real_exponents + self.imag_exponents, dtype=complex)

    def correlation_real(self, t):
        t = np.asarray(t, dtype=float)
        return sum(c * np.exp(-e * t) for c, e in self.real_terms)

    def correlation_imag(self, t):
        t = np.asarray(t, dtype=float)
        return sum(c * np.exp(-e * t) for c, e in self.imag_terms)

    def correlation(self, t):
        return self.correlation_real(t) + 1j * self.correlation_imag(t)


def decompose_bath(cfg: SystemConfig) -> BathDecomposition:
    """Two-plus-two exponential split of ``C(t) = lam exp(-(gamma + i omega0) t)``."""
    if cfg.cavity is not Cavity.SINGLE_LORENTZIAN:
        raise ConfigError("HEOM supports the single resonant Lorentzian cavity only")
    lam, w0 = cfg.lam, cfg.omega0
    nu_plus, nu_minus = complex(cfg.gamma, w0), complex(cfg.gamma, -w0)
    return BathDecomposition(
        real_coeffs=(lam / 2, lam / 2),
        real_exponents=(nu_plus, nu_minus),
        imag_coeffs=(lam / 2j, -lam / 2j),
        imag_exponents=(nu_plus, nu_minus),
    )


@dataclass(frozen=True)
class SystemOperators:
    """System Hamiltonian and total coupling operator in the product basis.

    Atom ``i`` occupies tensor slot ``i`` (leftmost factor first) and the
    excited level is index 1 of each two-level factor.
    """

    H_S: np.ndarray
    sigma_x_total: np.ndarray
    n_atoms: int

    @property
    def dim(self) -> int:
        return self.H_S.shape[0]

    def number(self, atom: int) -> np.ndarray:
        return _embed(_NUMBER, atom, self.n_atoms)

    def lowering_total(self) -> np.ndarray:
        return sum(_embed(_LOWER, i, self.n_atoms) for i in range(self.n_atoms))


def _embed(op: np.ndarray, slot: int, n_atoms: int) -> np.ndarray:
    factors = [np.eye(2, dtype=complex)] * n_atoms
    factors[slot] = op
    return reduce(np.kron, factors)


def atom_pairs(cfg: SystemConfig) -> list[tuple[int, int]]:
    n = cfg.n_atoms
    if cfg.topology is Topology.CHAIN:
        return [(i, i + 1) for i in range(n - 1)]
    return list(itertools.combinations(range(n), 2))


def build_system_operators(cfg: SystemConfig, max_atoms: int = MAX_ATOMS) -> SystemOperators:
    """``H_S = sum_i omega0 n_i + Lambda sum_pairs sigma^x_i sigma^x_j`` and ``Q = sum_i sigma^x_i``."""
    n = cfg.n_atoms
    if n > max_atoms:
        raise ConfigError(f"HEOM supports at most {max_atoms} atoms, got {n}")
    h = sum(cfg.omega0 * _embed(_NUMBER, i, n) for i in range(n))
    for i, j in atom_pairs(cfg):
        h = h + cfg.dipole * _embed(_SIGMA_X, i, n) @ _embed(_SIGMA_X, j, n)
    q = sum(_embed(_SIGMA_X, i, n) for i in range(n))
    return SystemOperators(H_S=np.asarray(h), sigma_x_total=np.asarray(q), n_atoms=n)


# ---------------------------------------------------------------------------
# multi-index bookkeeping


def raise_index(n: tuple[int, ...], slot: int) -> tuple[int, ...]:
    return n[:slot] + (n[slot] + 1,) + n[slot + 1 :]


def lower_index(n: tuple[int, ...], slot: int) -> tuple[int, ...] | None:
    """Index with ``slot`` lowered, or ``None`` when that entry is already 0."""
    if n[slot] == 0:
        return None
    return n[:slot] + (n[slot] - 1,) + n[slot + 1 :]


@dataclass(frozen=True)
class HierarchyIndex:
    """Ranked enumeration of admissible multi-indices with neighbour tables.

    ``raise_table[k, i]`` / ``lower_table[k, i]`` hold the rank of the
    neighbour of index ``i`` in slot ``k``, or -1 when it is absent (beyond
    truncation, or a 0 entry being lowered).
    """

    truncation: Truncation
    depth: int
    indices: tuple[tuple[int, ...], ...]
    raise_table: np.ndarray
    lower_table: np.ndarray

    @classmethod
    def build(cls, truncation: Truncation | str, depth: int) -> "HierarchyIndex":
        truncation = Truncation(truncation)
        if depth < 0:
            raise ValueError("truncation depth must be >= 0")
        grid = itertools.product(range(depth + 1), repeat=N_TERMS)
        if truncation is Truncation.TOTAL_DEPTH:
            admissible = [n for n in grid if sum(n) <= depth]
        else:
            admissible = list(grid)
        admissible.sort(key=lambda n: (sum(n), tuple(-x for x in n)))
        rank = {n: i for i, n in enumerate(admissible)}
        up = np.full((N_TERMS, len(admissible)), -1, dtype=np.int64)
        down = np.full((N_TERMS, len(admissible)), -1, dtype=np.int64)
        for i, n in enumerate(admissible):
            for k in range(N_TERMS):
                up[k, i] = rank.get(raise_index(n, k), -1)
                lowered = lower_index(n, k)
                if lowered is not None:
                    down[k, i] = rank[lowered]
        return cls(truncation, depth, tuple(admissible), up, down)

    def __len__(self) -> int:
        return len(self.indices)

    def rank(self, n) -> int:
        return self.indices.index(tuple(n))

    def admits(self, n) -> bool:
        if any(x < 0 for x in n):
            return False
        if self.truncation is Truncation.TOTAL_DEPTH:
            return sum(n) <= self.depth
        return max(n) <= self.depth


@dataclass
class HierarchyState:
    """All auxiliary density operators at one time; rank 0 is the physical ``rho``."""

    index: HierarchyIndex
    ados: np.ndarray
    time: float = 0.0

    @classmethod
    def initial(cls, rho0: np.ndarray, truncation="total_depth", depth: int = DEFAULT_DEPTH) -> "HierarchyState":
        """Factorised atoms-plus-vacuum start: physical ``rho0`` and every ADO zero."""
        index = HierarchyIndex.build(truncation, depth)
        rho0 = np.asarray(rho0, dtype=complex)
        ados = np.zeros((len(index),) + rho0.shape, dtype=complex)
        ados[0] = rho0
        return cls(index, ados)

    @property
    def rho(self) -> np.ndarray:
        return self.ados[0]

    def __getitem__(self, n) -> np.ndarray:
        """ADO for multi-index ``n``; indices outside the truncation read as zero."""
        if not self.index.admits(n):
            return np.zeros_like(self.ados[0])
        return self.ados[self.index.rank(n)]

    def as_dict(self) -> dict[tuple[int, ...], np.ndarray]:
        return dict(zip(self.index.indices, self.ados))


def product_state(c0, n_atoms: int) -> np.ndarray:
    """Density matrix of ``sum_i c_i |e_i> + c_g |g...g>`` with ``c_g = sqrt(1 - sum |c_i|^2)``."""
    c0 = np.asarray(c0, dtype=complex)
    if c0.shape != (n_atoms,):
        raise ConfigError(f"expected {n_atoms} amplitudes, got {c0.size}")
    norm = float(np.sum(np.abs(c0) ** 2))
    if norm > 1 + 1e-12:
        raise ConfigError("initial amplitudes must satisfy sum |c_i|^2 <= 1")
    psi = np.zeros(2**n_atoms, dtype=complex)
    psi[0] = np.sqrt(max(0.0, 1 - norm))
    for i, c in enumerate(c0):
        psi[1 << (n_atoms - 1 - i)] = c
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------------------
# generator assembly


def _pre(a):
    return sp.kron(sp.csr_matrix(a), sp.identity(a.shape[0], format="csr"))


def _post(a):
    return sp.kron(sp.identity(a.shape[0], format="csr"), sp.csr_matrix(a.T))


def _connectivity(table: np.ndarray, weights: np.ndarray, size: int) -> sp.csr_matrix:
    rows = np.flatnonzero(table >= 0)
    return sp.csr_matrix((weights[rows], (rows, table[rows])), shape=(size, size))


def hierarchy_generator(
    index: HierarchyIndex,
    ops: SystemOperators,
    bath: BathDecomposition,
    scaled: bool = False,
) -> sp.csr_matrix:
    """Sparse generator ``L`` with ``d vec(ados)/dt = L vec(ados)``.

    ``scaled=True`` uses ADOs normalised by ``prod_k sqrt(n_k! |c_k|^n_k)``;
    the physical matrix is identical in both forms.
    """
    d = ops.dim
    size = len(index)
    q = ops.sigma_x_total
    comm_h = (_pre(ops.H_S) - _post(ops.H_S)).tocsr()
    comm_q = (_pre(q) - _post(q)).tocsr()
    anti_q = (_pre(q) + _post(q)).tocsr()
    eye = sp.identity(d * d, format="csr")

    idx = np.array(index.indices, dtype=float)
    coeffs, exponents = bath.coeffs, bath.exponents
    damping = idx @ exponents

    gen = sp.kron(sp.identity(size, format="csr"), -1j * comm_h) - sp.kron(sp.diags(damping), eye)
    for k in range(N_TERMS):
        mag = abs(coeffs[k])
        nk = idx[:, k]
        if scaled and mag > 0:
            low_w = coeffs[k] * np.sqrt(nk / mag)
            up_w = np.sqrt((nk + 1) * mag)
        else:
            low_w = coeffs[k] * nk
            up_w = np.ones(size)
        low_op = -1j * comm_q if k < 2 else anti_q
        gen = gen + sp.kron(_connectivity(index.lower_table[k], low_w.astype(complex), size), low_op)
        gen = gen + sp.kron(_connectivity(index.raise_table[k], up_w.astype(complex), size), -1j * comm_q)
    return sp.csr_matrix(gen)


# ---------------------------------------------------------------------------
# propagation


def spectral_abscissa(generator, dense_limit: int = 4000) -> float:
    """Largest real part over the generator spectrum.

    A positive value means the truncated hierarchy has growing modes and
    long propagations diverge regardless of the integrator.  Dense
    eigensolve up to ``dense_limit`` rows, Arnoldi beyond.
    """
    if generator.shape[0] <= dense_limit:
        return float(np.linalg.eigvals(generator.toarray()).real.max())
    from scipy.sparse.linalg import eigs

    vals = eigs(generator, k=6, which="LR", return_eigenvectors=False, maxiter=20000)
    return float(vals.real.max())


_METHODS = {"DOP853": DOP853, "RK45": RK45}


def _output_times(dt: float, t_end: float, t_start: float = 0.0) -> np.ndarray:
    if dt <= 0 or t_end < t_start:
        raise ValueError("need dt > 0 and t_end >= start time")
    n = int(round((t_end - t_start) / dt))
    return t_start + dt * np.arange(n + 1)


def _first_bad_index(index: HierarchyIndex, y: np.ndarray, d: int) -> tuple[int, ...] | None:
    blocks = y.reshape(len(index), d * d)
    bad = np.flatnonzero(~np.all(np.isfinite(blocks), axis=1))
    return index.indices[bad[0]] if bad.size else None


def propagate(
    state: HierarchyState,
    ops: SystemOperators,
    bath: BathDecomposition,
    dt: float,
    t_end: float,
    *,
    scaled: bool = False,
    method: str = "DOP853",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    keep_states: bool = True,
) -> TimeSeries:
    """Advance every ADO from ``state.time`` to ``t_end``, sampling every ``dt``.

    The state is updated in place to ``t_end``.  The returned series holds
    atomic populations ``<n_i>``, the total polarisation
    ``sqrt(<S+ S->)`` and the physical density matrix at each sample (when
    ``keep_states``), with trace and Hermiticity diagnostics.

    Raises
    ------
    HeomError
        If the integrator fails or any ADO becomes non-finite (the message
        names the first offending multi-index), or if the physical density
        matrix leaves the bound ``DIVERGENCE_BOUND``.
    """
    d = ops.dim
    if state.ados.shape[1:] != (d, d):
        raise ValueError("state dimension does not match the system operators")
    if not np.all(np.isfinite(state.ados)):
        bad = _first_bad_index(state.index, state.ados.reshape(-1), d)
        raise HeomError(f"initial hierarchy state is non-finite; first non-finite ADO index {bad}")
    times = _output_times(dt, t_end, state.time)
    gen = hierarchy_generator(state.index, ops, bath, scaled=scaled)
    if scaled:
        y = _scale(state.index, bath, state.ados.reshape(-1), inverse=True, dim=d)
    else:
        y = state.ados.reshape(-1).copy()

    physical = np.empty((len(times), d, d), dtype=complex)
    physical[0] = state.ados[0]
    if len(times) > 1:
        solver = _METHODS[method](
            lambda t, v: gen @ v, times[0], y, times[-1], rtol=rtol, atol=atol
        )
        k = 1
        while k < len(times):
            msg = solver.step()
            if solver.status == "failed" or not np.all(np.isfinite(solver.y)):
                bad = _first_bad_index(state.index, solver.y, d)
                raise HeomError(
                    f"HEOM integration failed at t={solver.t:.6g}: {msg or 'non-finite ADO'}"
                    + (f"; first non-finite ADO index {bad}" if bad is not None else "")
                )
            size = float(np.abs(solver.y[: d * d]).max())
            if size > DIVERGENCE_BOUND:
                raise HeomError(
                    f"hierarchy diverged at t={solver.t:.6g}: max |rho_ij| = {size:.3g}; "
                    "the truncated generator has growing modes (see spectral_abscissa)"
                )
            if solver.t >= times[k] or solver.status == "finished":
                interp = solver.dense_output()
                while k < len(times) and times[k] <= solver.t:
                    physical[k] = interp(times[k])[: d * d].reshape(d, d)
                    k += 1
        y = solver.y
        if scaled:
            y = _scale(state.index, bath, y, inverse=False, dim=d)
        state.ados = y.reshape(state.ados.shape).copy()
        physical[-1] = state.ados[0]
    state.time = float(times[-1])
    return _series_from_states(times, physical, ops, keep_states)


def _scale(index, bath, y, *, inverse: bool, dim: int) -> np.ndarray:
    mags = np.abs(bath.coeffs)
    mags = np.where(mags > 0, mags, 1.0)
    idx = np.array(index.indices)
    log_s = 0.5 * np.sum(gammaln(idx + 1) + idx * np.log(mags), axis=1)
    factor = np.exp(-log_s if inverse else log_s)
    return (y.reshape(len(index), dim * dim) * factor[:, None]).reshape(-1)


def _series_from_states(times, rhos, ops: SystemOperators, keep_states: bool) -> TimeSeries:
    numbers = np.array([ops.number(i).diagonal().real for i in range(ops.n_atoms)])
    diag = np.real(np.einsum("tii->ti", rhos))
    populations = diag @ numbers.T
    lower = ops.lowering_total()
    sps = lower.conj().T @ lower
    polarisation = np.sqrt(np.clip(np.real(np.einsum("tij,ji->t", rhos, sps)), 0, None))
    trace = np.real(np.einsum("tii->t", rhos))
    herm = np.abs(rhos - np.conj(np.transpose(rhos, (0, 2, 1)))).max(axis=(1, 2))
    return TimeSeries(
        times=times,
        populations=populations,
        total_polarisation=polarisation,
        label="heom",
        states=rhos if keep_states else None,
        diagnostics={
            "max_trace_drift": float(np.abs(trace - trace[0]).max()),
            "max_hermiticity_error": float(herm.max()),
            "min_eigenvalue": float(min(np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() for r in rhos)),
        },
    )


def run_heom(
    cfg: SystemConfig,
    c0,
    t_end: float,
    dt: float,
    *,
    depth: int = DEFAULT_DEPTH,
    truncation: Truncation | str = Truncation.TOTAL_DEPTH,
    **kwargs,
) -> TimeSeries:
    """Convenience wrapper: build operators, bath and initial state, then propagate."""
    ops = build_system_operators(cfg)
    bath = decompose_bath(cfg)
    state = HierarchyState.initial(product_state(c0, cfg.n_atoms), truncation, depth)
    return propagate(state, ops, bath, dt, t_end, **kwargs)


@dataclass
class ConvergenceReport:
    depths: list[int]
    deviations: list[float]
    tolerance: float = 1e-6
    series: list[TimeSeries] = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return bool(self.deviations) and self.deviations[-1] < self.tolerance

    def depth_for(self, tolerance: float | None = None) -> int | None:
        """Smallest depth whose deviation from the next level is below ``tolerance``."""
        tol = self.tolerance if tolerance is None else tolerance
        for depth, dev in zip(self.depths, self.deviations):
            if dev < tol:
                return depth
        return None


def convergence_study(
    cfg: SystemConfig,
    truncations,
    c0=None,
    t_end: float = 50.0,
    dt: float = 0.5,
    tolerance: float = 1e-6,
    **kwargs,
) -> ConvergenceReport:
    """Propagate at each truncation depth and report successive maximum population deviations."""
    depths = sorted(int(x) for x in truncations)
    if len(depths) < 2:
        raise ValueError("need at least two truncation levels")
    if c0 is None:
        c0 = np.eye(cfg.n_atoms)[0]
    runs = [run_heom(cfg, c0, t_end, dt, depth=L, keep_states=False, **kwargs) for L in depths]
    devs = [
        float(np.abs(a.populations - b.populations).max()) for a, b in zip(runs[:-1], runs[1:])
    ]
    return ConvergenceReport(depths, devs, tolerance, runs)


@dataclass
class Comparison:
    rwa: TimeSeries
    heom: TimeSeries
    difference: np.ndarray

    @property
    def max_difference(self) -> float:
        return float(self.difference.max())


def compare_rwa_heom(cfg: SystemConfig, c0, times, *, depth: int = DEFAULT_DEPTH, **kwargs) -> Comparison:
    """Aligned RWA and HEOM populations plus the pointwise ``|Delta P|`` per atom."""
    from . import rwa

    times = np.asarray(times, dtype=float)
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=0, atol=1e-12 * max(1.0, times[-1])):
        raise ValueError("comparison needs an evenly spaced time grid")
    if cfg.topology is Topology.ALL_TO_ALL and cfg.cavity is Cavity.SINGLE_LORENTZIAN:
        approx = rwa.solve_symmetric_analytic(cfg, c0, times)
    else:
        approx = rwa.solve_numeric(cfg, None, c0, times)
    exact = run_heom(cfg, c0, times[-1], dt, depth=depth, **kwargs)
    return Comparison(approx, exact, np.abs(approx.populations - exact.populations))


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_MAGIC = b"CMSHEOM\0"
CHECKPOINT_VERSION = 1


def config_hash(cfg: SystemConfig) -> str:
    payload = json.dumps(
        {
            "n_atoms": cfg.n_atoms,
            "lam": cfg.lam,
            "gamma": cfg.gamma,
            "dipole": cfg.dipole,
            "detuning": cfg.detuning,
            "topology": cfg.topology.value,
            "cavity": cfg.cavity.value,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def save_checkpoint(path, state: HierarchyState, cfg: SystemConfig) -> None:
    """Write ``magic | u32 version | u32 header length | JSON header | index table | ADOs``."""
    header = json.dumps(
        {
            "config_hash": config_hash(cfg),
            "time": state.time,
            "truncation": state.index.truncation.value,
            "depth": state.index.depth,
            "n_ados": len(state.index),
            "dim": int(state.ados.shape[1]),
        },
        sort_keys=True,
    ).encode()
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
    buf.write(header)
    np.save(buf, np.array(state.index.indices, dtype=np.int64), allow_pickle=False)
    np.save(buf, state.ados.reshape(-1), allow_pickle=False)
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path, cfg: SystemConfig | None = None) -> HierarchyState:
    """Read a checkpoint; with ``cfg`` given, refuse one written for a different configuration."""
    with open(path, "rb") as fh:
        if fh.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise HeomError(f"{path}: not a HEOM checkpoint")
        version, length = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise HeomError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(length))
        table = np.load(fh, allow_pickle=False)
        flat = np.load(fh, allow_pickle=False)
    if cfg is not None and header["config_hash"] != config_hash(cfg):
        raise HeomError(f"{path}: checkpoint was written for a different configuration")
    index = HierarchyIndex.build(header["truncation"], header["depth"])
    if [tuple(r) for r in table.tolist()] != list(index.indices):
        raise HeomError(f"{path}: index table does not match the truncation scheme")
    d = header["dim"]
    return HierarchyState(index, flat.reshape(len(index), d, d), float(header["time"]))
