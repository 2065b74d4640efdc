"""Independent reference computations used by the test suite.

None of these reuse the solver code paths they check.
"""

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
NUMBER = np.array([[0, 0], [0, 1]], dtype=complex)


def embed(op, slot, n):
    out = np.eye(1, dtype=complex)
    for k in range(n):
        out = np.kron(out, op if k == slot else np.eye(2))
    return out


def atom_hamiltonian(n, dipole, pairs):
    h = sum(embed(NUMBER, i, n) for i in range(n))
    for i, j in pairs:
        h = h + dipole * embed(SIGMA_X, i, n) @ embed(SIGMA_X, j, n)
    return h


def product_ket(c0):
    """``sqrt(1 - sum|c|^2)|g..g> + sum_i c_i |e_i>`` with atom 0 leftmost."""
    c0 = np.asarray(c0, dtype=complex)
    n = c0.size
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = np.sqrt(max(0.0, 1 - np.sum(np.abs(c0) ** 2)))
    for i, c in enumerate(c0):
        psi[1 << (n - 1 - i)] = c
    return psi


def unitary_populations(c0, dipole, pairs, times):
    """Populations for an uncoupled reservoir, by matrix exponential."""
    n = len(c0)
    h = atom_hamiltonian(n, dipole, pairs)
    psi0 = product_ket(c0)
    out = []
    for t in times:
        psi = expm(-1j * h * t) @ psi0
        out.append([np.real(np.vdot(psi, embed(NUMBER, i, n) @ psi)) for i in range(n)])
    return np.array(out)


def pseudomode_populations(c0, lam, gamma, dipole, pairs, times, n_fock=8):
    """Atoms plus one damped mode, an exact stand-in for the Lorentzian bath.

    Mode frequency 1, coupling ``i sqrt(lam) Q (a - a^dag)`` with
    ``Q = sum sigma_x`` and Lindblad damping ``sqrt(2 gamma) a`` reproduce the
    zero-temperature correlation ``lam exp(-(gamma + i) t)``.
    """
    n = len(c0)
    d = 2**n
    hs = sp.csr_matrix(atom_hamiltonian(n, dipole, pairs))
    q = sp.csr_matrix(sum(embed(SIGMA_X, i, n) for i in range(n)))
    a = sp.diags(np.sqrt(np.arange(1, n_fock)), 1)
    i_s, i_f = sp.identity(d), sp.identity(n_fock)
    h = sp.kron(hs, i_f) + sp.kron(i_s, a.T @ a) + 1j * np.sqrt(lam) * sp.kron(q, a - a.T)
    big_a = sp.kron(i_s, a)
    dim = d * n_fock
    eye = sp.identity(dim)
    num = big_a.T @ big_a
    liou = (
        -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
        + 2 * gamma * (sp.kron(big_a, big_a) - 0.5 * sp.kron(num, eye) - 0.5 * sp.kron(eye, num.T))
    ).tocsr()
    psi = product_ket(c0)
    vac = np.zeros((n_fock, n_fock))
    vac[0, 0] = 1
    rho0 = np.kron(np.outer(psi, psi.conj()), vac)
    sol = solve_ivp(
        lambda t, y: liou @ y, (0, times[-1]), rho0.ravel().astype(complex),
        t_eval=times, rtol=1e-10, atol=1e-12, method="DOP853",
    )
    numbers = [embed(NUMBER, i, n) for i in range(n)]
    out = []
    for y in sol.y.T:
        rs = np.einsum("iaja->ij", y.reshape(d, n_fock, d, n_fock))
        out.append([np.real(np.trace(rs @ m)) for m in numbers])
    return np.array(out)


def kernel_by_quadrature(density, t, omega0=1.0):
    """``(1/pi) int J(w) exp(i(omega0 - w) t) dw`` for J symmetric about omega0."""
    f = lambda x: density(omega0 + x) + density(omega0 - x)
    if t == 0:
        return quad(f, 0, np.inf, limit=500)[0] / np.pi
    return quad(f, 0, np.inf, weight="cos", wvar=t, limlst=200)[0] / np.pi


def polynomial_roots(a0, a1, a2):
    return np.roots([1.0, a2, a1, a0])


def amplitudes_by_expm(c0, adjacency, dipole, modes, times):
    """Single-excitation amplitudes with each Lorentzian peak as a lossy mode.

    ``modes`` lists ``(lam, gamma, detuning)``; every mode couples with
    strength ``sqrt(lam)`` to every atom.  Solved by matrix exponential of
    the non-Hermitian effective Hamiltonian in the rotating frame.
    """
    c0 = np.asarray(c0, dtype=complex)
    n, k = c0.size, len(modes)
    h = np.zeros((n + k, n + k), dtype=complex)
    h[:n, :n] = dipole * np.asarray(adjacency)
    for j, (lam, gamma, detuning) in enumerate(modes):
        g = np.sqrt(lam)
        h[:n, n + j] = g
        h[n + j, :n] = g
        h[n + j, n + j] = detuning - 1j * gamma
    y0 = np.concatenate([c0, np.zeros(k)])
    return np.array([(expm(-1j * h * t) @ y0)[:n] for t in times])
