"""Quantum model components: VQC gate layers, the QLSTM cell, the 2-qubit
QNN classifier, and a generic mini-batch training loop shared by every
model in the package.

The VQC layer is a squeeze -> circuit -> bloat sandwich: a trainable affine
map reduces the classical input to one angle per qubit, those angles are
RX-encoded, entangler layers (per-wire RX rotations plus a CNOT ring) act,
every wire is measured in Z, and a second affine map expands the
expectations back to the classical width.  Encoding angles participate in
the shift-rule backward pass, so the squeeze layer trains end to end.

The QNN encodes each feature as an RZ angle after a Hadamard: RZ alone on
|0> changes only an unobservable global phase, so the Hadamard is what
makes features visible to the measurement.  Feature angles are reduced
mod 2pi before encoding; this changes nothing observable (global phase)
and makes the aliasing identity f ~ f + 2pi hold exactly in floats.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import nn
from .autodiff import Tensor
from .qsim import Circuit, Slot

TWO_PI = 2.0 * math.pi


def _ring_edges(n_qubits):
    if n_qubits < 2:
        return []
    return [(i, (i + 1) % n_qubits) for i in range(n_qubits)]


class VQCLayer:
    """Trainable squeeze -> RX-encoded entangler circuit -> trainable bloat."""

    def __init__(self, in_dim: int, out_dim: int, n_qubits: int = 4,
                 n_layers: int = 1, rng=None):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.n_qubits = n_qubits
        self.n_layers = n_layers
        self.squeeze = nn.LinearLayer(in_dim, n_qubits, rng)
        self.theta = Tensor(rng.uniform(-math.pi, math.pi, n_layers * n_qubits),
                            requires_grad=True)
        self.bloat = nn.LinearLayer(n_qubits, out_dim, rng)
        self.circuit = self._build_circuit()

    def _build_circuit(self) -> Circuit:
        c = Circuit(self.n_qubits)
        for i in range(self.n_qubits):
            c.rx(i, Slot(i))
        k = self.n_qubits
        for _ in range(self.n_layers):
            for i in range(self.n_qubits):
                c.rx(i, Slot(k))
                k += 1
            for control, target in _ring_edges(self.n_qubits):
                c.cnot(control, target)
        for i in range(self.n_qubits):
            c.measure_z(i)
        return c

    def __call__(self, v: Tensor) -> Tensor:
        if v.data.shape != (self.in_dim,):
            raise ad.ShapeError(f"expected input of shape ({self.in_dim},), got {v.shape}")
        angles = self.squeeze(v)
        params = ad.concat([angles, self.theta])
        expectations = ad.quantum_expectations(self.circuit, params)
        return self.bloat(expectations)

    def parameters(self):
        return self.squeeze.parameters() + [self.theta] + self.bloat.parameters()

    def named_parameters(self):
        out = {f"squeeze.{k}": v for k, v in self.squeeze.named_parameters().items()}
        out["theta"] = self.theta
        out.update({f"bloat.{k}": v for k, v in self.bloat.named_parameters().items()})
        return out


def vqc_forward(layer: VQCLayer, v: Tensor) -> Tensor:
    return layer(v)


class QLSTMCell:
    """LSTM cell whose four gate preactivations come from VQC layers."""

    def __init__(self, embed_dim: int = 8, hidden_dim: int = 6,
                 n_qubits: int = 4, n_layers: int = 1, rng=None):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        in_dim = hidden_dim + embed_dim

        def make_vqc():
            return VQCLayer(in_dim, hidden_dim, n_qubits, n_layers, rng)

        self.forget_vqc = make_vqc()
        self.input_vqc = make_vqc()
        self.update_vqc = make_vqc()
        self.output_vqc = make_vqc()

    def step(self, x: Tensor, prev: nn.LSTMCellState) -> nn.LSTMCellState:
        if x.data.shape != (self.embed_dim,):
            raise ad.ShapeError(f"expected input of shape ({self.embed_dim},), got {x.shape}")
        v = ad.concat([prev.h, x])
        return nn.gated_cell_step(self.forget_vqc(v), self.input_vqc(v),
                                  self.update_vqc(v), self.output_vqc(v), prev.c)

    def parameters(self):
        return (self.forget_vqc.parameters() + self.input_vqc.parameters()
                + self.update_vqc.parameters() + self.output_vqc.parameters())

    def named_parameters(self):
        out = {}
        for name in ("forget_vqc", "input_vqc", "update_vqc", "output_vqc"):
            for key, value in getattr(self, name).named_parameters().items():
                out[f"{name}.{key}"] = value
        return out


def qlstm_cell(x: Tensor, prev: nn.LSTMCellState, cell: QLSTMCell) -> nn.LSTMCellState:
    return cell.step(x, prev)


class QNNModel:
    """2-qubit classifier: H + RZ(feature) encoding, RX/RZ/CRZ ansatz, <Z> logits."""

    def __init__(self, n_qubits: int = 2, n_layers: int = 2, rng=None):
        self.n_qubits = n_qubits
        self.n_layers = n_layers
        edges = _ring_edges(n_qubits)
        self.n_theta = n_layers * (2 * n_qubits + len(edges))
        self.theta = Tensor(rng.uniform(-math.pi, math.pi, self.n_theta),
                            requires_grad=True)
        self.circuit = self._build_circuit(edges)
        self._theta_slots = frozenset(range(n_qubits, n_qubits + self.n_theta))

    def _build_circuit(self, edges) -> Circuit:
        c = Circuit(self.n_qubits)
        for i in range(self.n_qubits):
            c.h(i)
        for i in range(self.n_qubits):
            c.rz(i, Slot(i))
        k = self.n_qubits
        for _ in range(self.n_layers):
            for i in range(self.n_qubits):
                c.rx(i, Slot(k))
                k += 1
            for i in range(self.n_qubits):
                c.rz(i, Slot(k))
                k += 1
            for control, target in edges:
                c.crz(control, target, Slot(k))
                k += 1
        for i in range(self.n_qubits):
            c.measure_z(i)
        return c

    def forward(self, features) -> Tensor:
        f = np.asarray(features, dtype=np.float64)
        if f.shape != (self.n_qubits,):
            raise ad.ShapeError(f"expected {self.n_qubits} features, got shape {f.shape}")
        encoded = Tensor(np.mod(f, TWO_PI))
        params = ad.concat([encoded, self.theta])
        return ad.quantum_expectations(self.circuit, params,
                                       grad_slots=self._theta_slots)

    def parameters(self):
        return [self.theta]

    def named_parameters(self):
        return {"theta": self.theta}


def qnn_forward(model: QNNModel, features) -> Tensor:
    return model.forward(features)


def describe_circuit(circuit: Circuit) -> dict:
    """JSON-ready topology echo for checkpoints."""
    ops = []
    for kind, wires, param in circuit.ops:
        entry = {"kind": kind, "wires": list(wires)}
        if isinstance(param, Slot):
            entry["slot"] = param.index
        elif param is not None:
            entry["angle"] = float(param)
        ops.append(entry)
    return {"n_wires": circuit.n_wires, "ops": ops,
            "observables": list(circuit.observables)}


# ---------------------------------------------------------------------------
# Generic training loop.
# ---------------------------------------------------------------------------

@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float | None = None
    val_acc: float | None = None
    wall_time_s: float = 0.0


@dataclass
class TrainLog:
    epochs: list = field(default_factory=list)
    diverged: bool = False

    @property
    def final(self):
        return self.epochs[-1] if self.epochs else None

    def best_train_acc(self):
        return max((m.train_acc for m in self.epochs), default=None)


@dataclass
class TrainConfig:
    epochs: int = 10
    lr: float = 0.1
    batch_size: int = 32
    optimizer: str = "adam"
    eval_interval: int = 1
    seed: int = 0


def _forward_rows(model, inputs, idx) -> Tensor:
    if hasattr(model, "forward_batch"):
        return model.forward_batch(np.asarray(inputs, dtype=np.float64)[idx])
    return ad.stack([model.forward(inputs[i]) for i in idx])


def evaluate(model, inputs, labels):
    """Mean cross-entropy loss and exact-match accuracy over a dataset."""
    labels = np.asarray(labels, dtype=np.int64)
    logits = _forward_rows(model, inputs, np.arange(len(labels))).data
    loss = float(ad.softmax_xent(Tensor(logits), labels).data)
    acc = float(np.mean(np.argmax(logits, axis=1) == labels))
    return loss, acc


def train_model(model, data, config: TrainConfig) -> TrainLog:
    """Seeded mini-batch training with per-epoch metrics.

    ``data`` maps "train" (and optionally "val") to (inputs, labels)
    pairs; inputs are token-id sequences for recurrent models or feature
    rows for the rest.  Returns a partial log if the loss or a gradient
    goes non-finite.
    """
    train_x, train_y = data["train"]
    train_y = np.asarray(train_y, dtype=np.int64)
    val = data.get("val")
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    opt = nn.make_optimizer(config.optimizer, model.parameters(), config.lr)
    log = TrainLog()
    n = len(train_y)
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(n)
        try:
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                loss = ad.softmax_xent(_forward_rows(model, train_x, idx), train_y[idx])
                if not np.isfinite(loss.data):
                    raise nn.DivergenceError(f"non-finite loss at epoch {epoch}")
                opt.zero_grad()
                loss.backward()
                opt.step()
        except nn.DivergenceError:
            log.diverged = True
            break
        train_loss, train_acc = evaluate(model, train_x, train_y)
        metrics = EpochMetrics(epoch, train_loss, train_acc,
                               wall_time_s=time.perf_counter() - started)
        if val is not None and epoch % config.eval_interval == 0:
            metrics.val_loss, metrics.val_acc = evaluate(model, val[0], val[1])
        log.epochs.append(metrics)
    return log
