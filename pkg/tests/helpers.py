"""Dense-matrix oracles shared by the test modules.

These build explicit 2^n x 2^n matrices and are kept deliberately independent
of the symplectic code paths they check.
"""

import numpy as np

from bbcc.pauli import SignedPauli, SymplecticVector

I2 = np.eye(2)
PAULI_MATS = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(p: SignedPauli) -> np.ndarray:
    m = np.array([[1.0 + 0j]])
    for ch in p.vector.to_string():
        m = np.kron(m, PAULI_MATS[ch])
    return p.sign * m


def rotation_matrix(p: SignedPauli, theta: float) -> np.ndarray:
    w = pauli_matrix(p)
    dim = w.shape[0]
    return np.cos(theta) * np.eye(dim) - 1j * np.sin(theta) * w


def pushforward_oracle(u: SignedPauli, v: SignedPauli, theta: float) -> np.ndarray:
    """R^dagger W(u) R for R = exp(-i theta v): what deferral does to u."""
    r = rotation_matrix(v, theta)
    return r.conj().T @ pauli_matrix(u) @ r


def matrices_commute(a: SignedPauli, b: SignedPauli) -> bool:
    ma, mb = pauli_matrix(a), pauli_matrix(b)
    return np.allclose(ma @ mb, mb @ ma)


def random_signed_pauli(rng, n: int, nonzero: bool = False) -> SignedPauli:
    while True:
        x = int(rng.integers(0, 1 << n))
        z = int(rng.integers(0, 1 << n))
        if nonzero and x == 0 and z == 0:
            continue
        sign = -1 if rng.random() < 0.5 else 1
        return SignedPauli(SymplecticVector(n, x, z), sign)


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < tol:
        return np.allclose(a, b, atol=tol)
    phase = a[idx] / b[idx]
    if abs(abs(phase) - 1.0) > 1e-9:
        return False
    return np.allclose(a, phase * b, atol=tol)
