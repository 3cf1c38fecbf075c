"""Statevector simulation of the H/X/RX/RY/RZ/CNOT/CRZ gate set.

Conventions (fixed, tested):

* wire 0 is the least significant bit of the basis index, so for two wires
  the basis order is |q1 q0> = |00>, |01>, |10>, |11> at indices 0..3;
* ``RZ(t) = diag(exp(-it/2), exp(+it/2))``;
* ``RX(t) = [[cos(t/2), -i sin(t/2)], [-i sin(t/2), cos(t/2)]]`` and RY is
  the analogous rotation with real off-diagonals;
* CNOT flips the target when the control is 1, CRZ applies RZ on the target
  when the control is 1.

Expectations are exact Pauli-Z values, never sampled.  All public
operations are pure: states are immutable after construction.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import BACKEND

MAX_WIRES = 24

GATE_CODES = {
    "H": kernels.KIND_H,
    "X": kernels.KIND_X,
    "RX": kernels.KIND_RX,
    "RY": kernels.KIND_RY,
    "RZ": kernels.KIND_RZ,
    "CNOT": kernels.KIND_CNOT,
    "CRZ": kernels.KIND_CRZ,
}
PARAMETRIC_KINDS = frozenset({"RX", "RY", "RZ", "CRZ"})
TWO_WIRE_KINDS = frozenset({"CNOT", "CRZ"})


class SizeError(ValueError):
    """Wire count outside the supported range."""


class WireError(ValueError):
    """Wire index invalid for the target state."""


class GateParamError(ValueError):
    """Gate angle missing, extra, or non-finite."""


class ArityError(ValueError):
    """Parameter vector length does not match the circuit's slots."""


@dataclass(frozen=True)
class Slot:
    """Reference to position ``index`` of a circuit's parameter vector."""

    index: int


@dataclass(frozen=True)
class GateOp:
    """A single gate application: kind, wires and (for rotations) an angle."""

    kind: str
    wires: tuple[int, ...]
    param: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_CODES:
            raise GateParamError(f"unknown gate kind {self.kind!r}")
        expected = 2 if self.kind in TWO_WIRE_KINDS else 1
        if len(self.wires) != expected:
            raise WireError(
                f"{self.kind} acts on {expected} wire(s), got {len(self.wires)}"
            )
        if len(set(self.wires)) != len(self.wires):
            raise WireError(f"{self.kind} wires must be distinct: {self.wires}")
        if self.kind in PARAMETRIC_KINDS:
            if self.param is None:
                raise GateParamError(f"{self.kind} requires an angle")
            if not np.isfinite(self.param):
                raise GateParamError(f"{self.kind} angle must be finite")
        elif self.param is not None:
            raise GateParamError(f"{self.kind} takes no angle")


@dataclass
class QuantumState:
    """n-qubit pure state: 2**n_wires complex amplitudes with unit norm."""

    n_wires: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_wires <= MAX_WIRES:
            raise SizeError(f"n_wires must be in [1, {MAX_WIRES}], got {self.n_wires}")
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_wires,):
            raise SizeError(
                f"expected {1 << self.n_wires} amplitudes, got {self.amplitudes.shape}"
            )
        norm = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm deviates from 1 by {abs(norm - 1.0):.3e}")


def new_zero_state(n_wires: int) -> QuantumState:
    """Prepare |0...0> on ``n_wires`` qubits."""
    if not 1 <= n_wires <= MAX_WIRES:
        raise SizeError(f"n_wires must be in [1, {MAX_WIRES}], got {n_wires}")
    amps = np.zeros(1 << n_wires, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(n_wires, amps)


def _check_wires(op: GateOp, n_wires: int):
    for w in op.wires:
        if not 0 <= w < n_wires:
            raise WireError(f"wire {w} out of range for {n_wires} wires")


def apply_gate(state: QuantumState, op: GateOp) -> QuantumState:
    """Return the state transformed by the gate's unitary."""
    _check_wires(op, state.n_wires)
    amps = state.amplitudes.copy()
    w1 = op.wires[1] if len(op.wires) == 2 else 0
    angle = op.param if op.param is not None else 0.0
    kernels.apply_gate_inplace(
        amps, state.n_wires, GATE_CODES[op.kind], op.wires[0], w1, angle
    )
    return QuantumState(state.n_wires, amps)


def expectation_z(state: QuantumState, wire: int) -> float:
    """Exact <Z> on ``wire``: sum of |a_i|^2 * (+1 if bit is 0 else -1)."""
    if not 0 <= wire < state.n_wires:
        raise WireError(f"wire {wire} out of range for {state.n_wires} wires")
    return kernels.expect_z(state.amplitudes, state.n_wires, wire)


class Circuit:
    """Ordered gate sequence with literal or slot-referenced angles.

    Build with the per-gate methods (``h``, ``rx``, ``cnot``, ...), mark
    measured wires with ``measure_z`` and evaluate with ``run_circuit``.
    Rotation angles may be floats (bound) or :class:`Slot` references into
    the parameter vector passed at evaluation time.
    """

    def __init__(self, n_wires: int):
        if not 1 <= n_wires <= MAX_WIRES:
            raise SizeError(f"n_wires must be in [1, {MAX_WIRES}], got {n_wires}")
        self.n_wires = n_wires
        self.ops: list[tuple[str, tuple[int, ...], float | Slot | None]] = []
        self.observables: list[int] = []
        self._compiled = None

    def _add(self, kind, wires, param=None):
        for w in wires:
            if not 0 <= w < self.n_wires:
                raise WireError(f"wire {w} out of range for {self.n_wires} wires")
        if kind in TWO_WIRE_KINDS and wires[0] == wires[1]:
            raise WireError(f"{kind} wires must be distinct: {wires}")
        if kind in PARAMETRIC_KINDS:
            if param is None:
                raise GateParamError(f"{kind} requires an angle or Slot")
            if not isinstance(param, Slot) and not np.isfinite(param):
                raise GateParamError(f"{kind} angle must be finite")
        elif param is not None:
            raise GateParamError(f"{kind} takes no angle")
        self.ops.append((kind, tuple(wires), param))
        self._compiled = None

    def h(self, wire):
        self._add("H", (wire,))

    def x(self, wire):
        self._add("X", (wire,))

    def rx(self, wire, angle):
        self._add("RX", (wire,), angle)

    def ry(self, wire, angle):
        self._add("RY", (wire,), angle)

    def rz(self, wire, angle):
        self._add("RZ", (wire,), angle)

    def cnot(self, control, target):
        self._add("CNOT", (control, target))

    def crz(self, control, target, angle):
        self._add("CRZ", (control, target), angle)

    def measure_z(self, wire):
        if not 0 <= wire < self.n_wires:
            raise WireError(f"wire {wire} out of range for {self.n_wires} wires")
        self.observables.append(wire)

    @property
    def n_slots(self) -> int:
        slots = [p.index for _, _, p in self.ops if isinstance(p, Slot)]
        return max(slots) + 1 if slots else 0

    def compiled(self) -> "CompiledCircuit":
        if self._compiled is None:
            self._compiled = CompiledCircuit(self)
        return self._compiled


class CompiledCircuit:
    """Array form of a circuit for tight-loop evaluation.

    Angles are kept in a reusable buffer: literals are baked in, slot
    references are refilled from the parameter vector on every evaluation.
    ``expectations`` optionally shifts the angle of one gate occurrence,
    which is what the parameter-shift rule needs.
    """

    def __init__(self, circuit: Circuit):
        n_ops = len(circuit.ops)
        self.n_wires = circuit.n_wires
        self.n_slots = circuit.n_slots
        self.kinds = np.zeros(n_ops, dtype=np.int8)
        self.w0 = np.zeros(n_ops, dtype=np.int32)
        self.w1 = np.zeros(n_ops, dtype=np.int32)
        self._angles = np.zeros(n_ops, dtype=np.float64)
        slot_pos, slot_ids = [], []
        for i, (kind, wires, param) in enumerate(circuit.ops):
            self.kinds[i] = GATE_CODES[kind]
            self.w0[i] = wires[0]
            if len(wires) == 2:
                self.w1[i] = wires[1]
            if isinstance(param, Slot):
                if param.index < 0:
                    raise ArityError(f"negative slot index {param.index}")
                slot_pos.append(i)
                slot_ids.append(param.index)
            elif param is not None:
                self._angles[i] = param
        self.slot_positions = np.array(slot_pos, dtype=np.int64)
        self.slot_ids = np.array(slot_ids, dtype=np.int64)
        self.obs = np.asarray(circuit.observables, dtype=np.int32)
        self._amps = np.zeros(1 << self.n_wires, dtype=np.complex128)

    def expectations(self, params, shift_op: int = -1, shift_delta: float = 0.0):
        """Evaluate from |0...0> and return one <Z> per observable."""
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_slots,):
            raise ArityError(
                f"expected {self.n_slots} parameters, got shape {params.shape}"
            )
        angles = self._angles
        if self.slot_positions.size:
            angles[self.slot_positions] = params[self.slot_ids]
        if shift_op >= 0:
            angles = angles.copy()
            angles[shift_op] += shift_delta
        out = np.empty(self.obs.shape[0], dtype=np.float64)
        kernels.run_compiled(
            self._amps, self.n_wires, self.kinds, self.w0, self.w1, angles, self.obs, out
        )
        return out

    def statevector(self, params):
        """Amplitudes after running the circuit (used by oracle checks)."""
        self.expectations(params)
        return self._amps.copy()


def run_circuit(circuit: Circuit, params=()) -> np.ndarray:
    """Apply ops in order from |0...0>; return <Z> per observable in order."""
    return circuit.compiled().expectations(params)
