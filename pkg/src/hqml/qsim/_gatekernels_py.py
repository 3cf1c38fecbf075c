"""NumPy fallback for the statevector gate kernels.

Mirrors the API of the compiled ``_gatekernels`` extension: every function
mutates a complex128 amplitude array in place.  Wire 0 is the least
significant bit of the basis index, so for a C-ordered reshape to
``[2] * n_wires`` wire ``w`` lives on axis ``n_wires - 1 - w``.
"""

import numpy as np

_INV_SQRT2 = 1.0 / np.sqrt(2.0)

# Gate kind codes shared with the compiled backend.
H, X, RX, RY, RZ, CNOT, CRZ = range(7)


def _single_view(amps, n_wires, wire):
    # axis 1 of the view is the value of bit `wire`
    return amps.reshape(-1, 2, 1 << wire)


def _apply_single(amps, n_wires, wire, m00, m01, m10, m11):
    v = _single_view(amps, n_wires, wire)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = m00 * a0 + m01 * a1
    v[:, 1, :] = m10 * a0 + m11 * a1


def _apply_diag(amps, n_wires, wire, d0, d1):
    v = _single_view(amps, n_wires, wire)
    v[:, 0, :] *= d0
    v[:, 1, :] *= d1


def _control_one_indices(dim, control):
    idx = np.arange(dim)
    return idx[((idx >> control) & 1) == 1]


def apply_gate_inplace(amps, n_wires, kind, w0, w1, angle):
    if kind == H:
        _apply_single(amps, n_wires, w0, _INV_SQRT2, _INV_SQRT2, _INV_SQRT2, -_INV_SQRT2)
    elif kind == X:
        _apply_single(amps, n_wires, w0, 0.0, 1.0, 1.0, 0.0)
    elif kind == RX:
        c = np.cos(angle / 2.0)
        s = np.sin(angle / 2.0)
        _apply_single(amps, n_wires, w0, c, -1j * s, -1j * s, c)
    elif kind == RY:
        c = np.cos(angle / 2.0)
        s = np.sin(angle / 2.0)
        _apply_single(amps, n_wires, w0, c, -s, s, c)
    elif kind == RZ:
        half = angle / 2.0
        _apply_diag(amps, n_wires, w0, np.exp(-1j * half), np.exp(1j * half))
    elif kind == CNOT:
        sel = _control_one_indices(amps.size, w0)
        lo = sel[((sel >> w1) & 1) == 0]
        hi = lo | (1 << w1)
        tmp = amps[lo].copy()
        amps[lo] = amps[hi]
        amps[hi] = tmp
    elif kind == CRZ:
        sel = _control_one_indices(amps.size, w0)
        half = angle / 2.0
        t0 = sel[((sel >> w1) & 1) == 0]
        t1 = sel[((sel >> w1) & 1) == 1]
        amps[t0] *= np.exp(-1j * half)
        amps[t1] *= np.exp(1j * half)
    else:
        raise ValueError(f"unknown gate kind code {kind}")


def expect_z(amps, n_wires, wire):
    probs = (amps.real * amps.real + amps.imag * amps.imag).reshape(-1, 2, 1 << wire)
    return float(probs[:, 0, :].sum() - probs[:, 1, :].sum())


def run_compiled(amps, n_wires, kinds, w0s, w1s, angles, obs, out):
    """Reset ``amps`` to |0...0>, apply all gates, write <Z> per observable."""
    amps[:] = 0.0
    amps[0] = 1.0
    for i in range(kinds.shape[0]):
        apply_gate_inplace(amps, n_wires, kinds[i], w0s[i], w1s[i], angles[i])
    for j in range(obs.shape[0]):
        out[j] = expect_z(amps, n_wires, obs[j])
