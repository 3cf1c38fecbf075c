"""Self-check suites: fast path vs independent oracles.

Two suites back the ``hqml simcheck`` command: random circuits checked
against the dense Kronecker-product simulator, and parameter-shift
gradients checked against central finite differences.  Both are the same
checks the test suite runs, packaged for the CLI.
"""

import numpy as np

from . import autodiff as ad
from . import qsim
from .autodiff import Tensor, quantum_expectations
from .qsim import Circuit, Slot, oracle

GATE_POOL = ("H", "X", "RX", "RY", "RZ", "CNOT", "CRZ")


def random_circuit(rng, max_wires=4, max_gates=20, with_slots=False, max_slots=12):
    """Random circuit over the full gate pool; optionally slot-parameterized."""
    n_wires = int(rng.integers(1, max_wires + 1))
    n_gates = int(rng.integers(1, max_gates + 1))
    circuit = Circuit(n_wires)
    ops = []
    n_slots = 0
    for _ in range(n_gates):
        kind = str(rng.choice(GATE_POOL))
        if n_wires == 1 and kind in ("CNOT", "CRZ"):
            kind = "RX"
        wires = tuple(rng.choice(n_wires, size=2, replace=False).astype(int)) \
            if kind in ("CNOT", "CRZ") else (int(rng.integers(0, n_wires)),)
        param = None
        if kind in qsim.PARAMETRIC_KINDS:
            if with_slots and n_slots < max_slots and rng.random() < 0.7:
                param = Slot(n_slots)
                n_slots += 1
            else:
                param = float(rng.uniform(-2 * np.pi, 2 * np.pi))
        circuit._add(kind, wires, param)
        ops.append((kind, wires, param))
    for w in range(n_wires):
        circuit.measure_z(w)
    params = rng.uniform(-np.pi, np.pi, n_slots)
    return circuit, ops, params


def check_circuits_against_oracle(n_circuits=1000, seed=1234,
                                  amp_tol=1e-10, norm_tol=1e-12):
    """Per-amplitude agreement with the dense oracle plus norm preservation."""
    rng = np.random.default_rng(seed)
    worst_amp = 0.0
    worst_norm = 0.0
    for _ in range(n_circuits):
        circuit, ops, params = random_circuit(rng, with_slots=False)
        fast = circuit.compiled().statevector(params)
        dense = oracle.simulate(circuit.n_wires, ops, params)
        worst_amp = max(worst_amp, float(np.abs(fast - dense).max()))
        worst_norm = max(worst_norm,
                         abs(float(np.sum(np.abs(fast) ** 2)) - 1.0))
    return {"name": "statevector vs dense oracle", "n": n_circuits,
            "worst_amplitude_error": worst_amp, "worst_norm_error": worst_norm,
            "passed": worst_amp < amp_tol and worst_norm < norm_tol}


def finite_difference_gradient(circuit, params, epsilon=1e-4):
    """Central differences of sum(<Z>) with respect to every slot."""
    comp = circuit.compiled()
    grad = np.zeros_like(params)
    for k in range(params.size):
        shifted = params.copy()
        shifted[k] += epsilon
        up = comp.expectations(shifted).sum()
        shifted[k] -= 2 * epsilon
        down = comp.expectations(shifted).sum()
        grad[k] = (up - down) / (2 * epsilon)
    return grad


def check_parameter_shift(n_circuits=100, seed=4321, tol=1e-6):
    """Parameter-shift gradients vs central finite differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    while checked < n_circuits:
        circuit, _, params = random_circuit(rng, with_slots=True)
        if params.size == 0:
            continue
        checked += 1
        leaf = Tensor(params, requires_grad=True)
        out = quantum_expectations(circuit, leaf)
        loss = ad.matmul(out, Tensor(np.ones(out.data.shape[0])))
        loss.backward()
        analytic = leaf.grad
        numeric = finite_difference_gradient(circuit, params)
        worst = max(worst, float(np.abs(analytic - numeric).max()))
    return {"name": "parameter-shift vs finite differences", "n": n_circuits,
            "worst_gradient_error": worst, "passed": worst < tol}


def run_all(verbose=True) -> bool:
    results = [check_circuits_against_oracle(), check_parameter_shift()]
    all_passed = all(r["passed"] for r in results)
    if verbose:
        for r in results:
            status = "PASS" if r["passed"] else "FAIL"
            detail = ", ".join(f"{k}={v:.3e}" for k, v in r.items()
                               if k.startswith("worst"))
            print(f"[{status}] {r['name']} (n={r['n']}): {detail}")
    return all_passed
