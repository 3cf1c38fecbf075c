"""Dense-matrix reference simulator.

Builds the full 2^n x 2^n unitary of every gate via Kronecker products and
multiplies statevectors explicitly.  Deliberately shares no code with the
kernel backends: it is the independent oracle the fast path is checked
against (tests and the ``simcheck`` CLI command).
"""

import numpy as np

_I2 = np.eye(2, dtype=np.complex128)


def _h():
    return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


def _x():
    return np.array([[0, 1], [1, 0]], dtype=np.complex128)


def _rx(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def _ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rz(t):
    return np.array(
        [[np.exp(-1j * t / 2), 0], [0, np.exp(1j * t / 2)]], dtype=np.complex128
    )


def single_qubit_unitary(kind: str, angle: float | None) -> np.ndarray:
    return {"H": _h, "X": _x}[kind]() if kind in ("H", "X") else {
        "RX": _rx,
        "RY": _ry,
        "RZ": _rz,
    }[kind](angle)


def expand_single(n_wires: int, wire: int, u2: np.ndarray) -> np.ndarray:
    """Kronecker-expand a 2x2 unitary onto ``wire`` of an n-wire register.

    Wire 0 is the least significant bit, so it sits rightmost in the
    Kronecker chain.
    """
    mat = np.array([[1.0]], dtype=np.complex128)
    for w in range(n_wires - 1, -1, -1):
        mat = np.kron(mat, u2 if w == wire else _I2)
    return mat


def expand_controlled(n_wires: int, control: int, target: int, u2: np.ndarray) -> np.ndarray:
    """Controlled-U as P0 (x) I + P1 (x) U, expanded to the full register."""
    p0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
    p1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)
    term0 = np.array([[1.0]], dtype=np.complex128)
    term1 = np.array([[1.0]], dtype=np.complex128)
    for w in range(n_wires - 1, -1, -1):
        if w == control:
            f0, f1 = p0, p1
        elif w == target:
            f0, f1 = _I2, u2
        else:
            f0 = f1 = _I2
        term0 = np.kron(term0, f0)
        term1 = np.kron(term1, f1)
    return term0 + term1


def gate_unitary(n_wires: int, kind: str, wires, angle: float | None) -> np.ndarray:
    if kind == "CNOT":
        return expand_controlled(n_wires, wires[0], wires[1], _x())
    if kind == "CRZ":
        return expand_controlled(n_wires, wires[0], wires[1], _rz(angle))
    return expand_single(n_wires, wires[0], single_qubit_unitary(kind, angle))


def simulate(n_wires: int, ops, params=()) -> np.ndarray:
    """Run ``ops`` (triples of kind, wires, angle-or-Slot) by dense matmul."""
    from . import Slot

    params = np.asarray(params, dtype=np.float64)
    state = np.zeros(1 << n_wires, dtype=np.complex128)
    state[0] = 1.0
    for kind, wires, param in ops:
        angle = params[param.index] if isinstance(param, Slot) else param
        state = gate_unitary(n_wires, kind, wires, angle) @ state
    return state


def expectation_z(state: np.ndarray, n_wires: int, wire: int) -> float:
    """<Z> via the diagonal observable matrix, built independently."""
    diag = np.array(
        [1.0 if (i >> wire) & 1 == 0 else -1.0 for i in range(1 << n_wires)]
    )
    return float(np.real(np.conj(state) @ (diag * state)))
