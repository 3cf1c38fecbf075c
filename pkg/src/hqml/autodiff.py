"""Reverse-mode automatic differentiation over float64 arrays.

A :class:`Tensor` records the operation that produced it together with a
backward closure; ``Tensor.backward`` replays those closures in reverse
creation order, which is a valid topological order because node ids are
strictly increasing.  Gradients accumulate by addition wherever a value
fans out.

``quantum_expectations`` makes a compiled circuit a differentiable node:
the forward pass is an exact statevector evaluation, the backward pass
applies the two-point parameter-shift rule per gate occurrence (exact for
RX/RY/RZ/CRZ, whose generators have eigenvalue gap 1).

Convention: ``Tensor.data`` arrays are never mutated in place; optimizers
must rebind ``data`` to fresh arrays so backward closures stay valid.
"""

import itertools
import math

import numpy as np

from .qsim import Circuit, GATE_CODES, PARAMETRIC_KINDS, Slot


class ShapeError(ValueError):
    """Operand shapes incompatible for the requested op."""


class LabelError(ValueError):
    """Class label outside the logits range."""


class DifferentiationError(ValueError):
    """Circuit contains a parametric gate the shift rule does not cover."""


_ids = itertools.count()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn", "_id")

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = parents
        self._backward_fn = backward_fn
        self._id = next(_ids)

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def backward(self):
        """Populate ``grad`` on every reachable tensor that requires it."""
        if self.data.shape != ():
            raise ShapeError(f"backward needs a scalar loss, got shape {self.data.shape}")
        order = []
        seen = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            order.append(node)
            for parent in node._parents:
                if parent.requires_grad:
                    stack.append(parent)
        order.sort(key=lambda n: n._id, reverse=True)
        self.grad = np.ones((), dtype=np.float64)
        for node in order:
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, neg(other))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other):
        return scale(self, float(other))


def _accumulate(tensor, grad):
    if tensor.requires_grad:
        if tensor.grad is None:
            tensor.grad = np.zeros_like(tensor.data)
        tensor.grad = tensor.grad + grad


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverse of NumPy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _make(data, parents, backward_fn):
    req = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=req, parents=parents if req else (),
                  backward_fn=backward_fn if req else None)


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise ShapeError(f"add: {a.shape} vs {b.shape}") from exc

    def backward_fn(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _make(data, (a, b), backward_fn)


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: _accumulate(a, -g))


def scale(a: Tensor, c: float) -> Tensor:
    return _make(a.data * c, (a,), lambda g: _accumulate(a, g * c))


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise ShapeError(f"mul: {a.shape} vs {b.shape}") from exc
    a_data, b_data = a.data, b.data

    def backward_fn(g):
        _accumulate(a, _unbroadcast(g * b_data, a.shape))
        _accumulate(b, _unbroadcast(g * a_data, b.shape))

    return _make(data, (a, b), backward_fn)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a_data, b_data = a.data, b.data
    if a_data.ndim == 0 or b_data.ndim == 0 or a_data.shape[-1] != b_data.shape[0]:
        raise ShapeError(f"matmul: {a.shape} vs {b.shape}")
    data = a_data @ b_data

    def backward_fn(g):
        if a_data.ndim == 2 and b_data.ndim == 1:
            _accumulate(a, np.outer(g, b_data))
            _accumulate(b, a_data.T @ g)
        elif a_data.ndim == 1 and b_data.ndim == 2:
            _accumulate(a, g @ b_data.T)
            _accumulate(b, np.outer(a_data, g))
        elif a_data.ndim == 1 and b_data.ndim == 1:
            _accumulate(a, g * b_data)
            _accumulate(b, g * a_data)
        else:
            _accumulate(a, g @ b_data.T)
            _accumulate(b, a_data.T @ g)

    return _make(data, (a, b), backward_fn)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got shape {a.shape}")
    return _make(a.data.T.copy(), (a,), lambda g: _accumulate(a, g.T))


def concat(tensors) -> Tensor:
    tensors = list(tensors)
    if not tensors or any(t.data.ndim != 1 for t in tensors):
        raise ShapeError("concat expects a non-empty list of vectors")
    data = np.concatenate([t.data for t in tensors])
    sizes = [t.data.size for t in tensors]

    def backward_fn(g):
        offset = 0
        for t, size in zip(tensors, sizes):
            _accumulate(t, g[offset:offset + size])
            offset += size

    return _make(data, tuple(tensors), backward_fn)


def slice_vec(a: Tensor, start: int, stop: int) -> Tensor:
    if a.data.ndim != 1:
        raise ShapeError(f"slice_vec needs a vector, got shape {a.shape}")
    if not 0 <= start <= stop <= a.data.size:
        raise ShapeError(f"slice [{start}:{stop}] out of bounds for size {a.data.size}")
    data = a.data[start:stop].copy()

    def backward_fn(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        _accumulate(a, full)

    return _make(data, (a,), backward_fn)


def stack(tensors) -> Tensor:
    """Stack equal-length vectors into a matrix (one tensor per row)."""
    tensors = list(tensors)
    if not tensors or any(t.data.ndim != 1 for t in tensors):
        raise ShapeError("stack expects a non-empty list of vectors")
    data = np.stack([t.data for t in tensors])

    def backward_fn(g):
        for i, t in enumerate(tensors):
            _accumulate(t, g[i])

    return _make(data, tuple(tensors), backward_fn)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _make(a.data * mask, (a,), lambda g: _accumulate(a, g * mask))


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # two-branch form never exponentiates a positive argument
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                   np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def backward_fn(g):
        _accumulate(a, g * out * (1.0 - out))

    return _make(out, (a,), backward_fn)


def tanh_act(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: _accumulate(a, g * (1.0 - out * out)))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stabilized softmax (plain array helper, last axis)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: Tensor, label) -> Tensor:
    """Cross-entropy of softmax(logits) against integer label(s).

    Accepts 1-D logits with a scalar label, or a 2-D batch with one label
    per row (the batch loss is the mean).  Uses max-subtraction and
    log-sum-exp so large logits never overflow.
    """
    x = logits.data
    if x.ndim == 1:
        if x.size < 2:
            raise ShapeError("softmax_xent needs at least two logits")
        label = int(label)
        if not 0 <= label < x.size:
            raise LabelError(f"label {label} out of range for {x.size} classes")
        z = x - x.max()
        lse = math.log(np.exp(z).sum())
        loss = lse - z[label]
        probs = np.exp(z - lse)

        def backward_fn(g):
            grad = probs.copy()
            grad[label] -= 1.0
            _accumulate(logits, g * grad)

        return _make(np.float64(loss), (logits,), backward_fn)

    if x.ndim != 2 or x.shape[1] < 2:
        raise ShapeError(f"softmax_xent: bad logits shape {logits.shape}")
    labels = np.asarray(label, dtype=np.int64)
    if labels.shape != (x.shape[0],):
        raise ShapeError(f"labels shape {labels.shape} != batch {x.shape[0]}")
    if labels.min() < 0 or labels.max() >= x.shape[1]:
        raise LabelError(f"labels outside [0, {x.shape[1]})")
    z = x - x.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    losses = lse - z[np.arange(x.shape[0]), labels]
    probs = np.exp(z - lse[:, None])

    def backward_fn(g):
        grad = probs.copy()
        grad[np.arange(x.shape[0]), labels] -= 1.0
        _accumulate(logits, g * grad / x.shape[0])

    return _make(np.float64(losses.mean()), (logits,), backward_fn)


def embedding_row(table: Tensor, index: int) -> Tensor:
    if table.data.ndim != 2:
        raise ShapeError(f"embedding table must be a matrix, got {table.shape}")
    data = table.data[index].copy()

    def backward_fn(g):
        grad = np.zeros_like(table.data)
        grad[index] = g
        _accumulate(table, grad)

    return _make(data, (table,), backward_fn)


_SHIFT = math.pi / 2.0
# Controlled rotations carry generator eigenvalues {0, +1/2, -1/2}, so their
# expectation is a two-frequency trigonometric polynomial and needs the
# four-term rule; plain rotations are single-frequency and the two-point
# rule is exact.
_CRZ_C1 = (math.sqrt(2.0) + 1.0) / (4.0 * math.sqrt(2.0))
_CRZ_C2 = (math.sqrt(2.0) - 1.0) / (4.0 * math.sqrt(2.0))


def quantum_expectations(circuit: Circuit, params: Tensor, grad_slots=None) -> Tensor:
    """Differentiable circuit evaluation: <Z> per observable.

    Gradients use the exact parameter-shift rules, applied per gate
    occurrence so a slot feeding several gates still differentiates
    correctly.  ``grad_slots`` restricts the backward pass to a subset of
    slots (the others get zero gradient), which skips the shifted
    evaluations for inputs that are data rather than trainable weights.
    """
    comp = circuit.compiled()
    for pos in comp.slot_positions:
        kind = circuit.ops[pos][0]
        if kind not in PARAMETRIC_KINDS:
            raise DifferentiationError(f"cannot shift-differentiate {kind}")
    theta = params.data
    values = comp.expectations(theta)
    active = None if grad_slots is None else frozenset(grad_slots)
    crz_code = GATE_CODES["CRZ"]

    def backward_fn(g):
        jac_t_g = np.zeros(comp.n_slots, dtype=np.float64)
        for pos, sid in zip(comp.slot_positions, comp.slot_ids):
            if active is not None and sid not in active:
                continue
            pos = int(pos)
            e_plus = comp.expectations(theta, shift_op=pos, shift_delta=_SHIFT)
            e_minus = comp.expectations(theta, shift_op=pos, shift_delta=-_SHIFT)
            if comp.kinds[pos] == crz_code:
                e_plus3 = comp.expectations(theta, shift_op=pos,
                                            shift_delta=3 * _SHIFT)
                e_minus3 = comp.expectations(theta, shift_op=pos,
                                             shift_delta=-3 * _SHIFT)
                deriv = (_CRZ_C1 * (e_plus - e_minus)
                         - _CRZ_C2 * (e_plus3 - e_minus3))
            else:
                deriv = 0.5 * (e_plus - e_minus)
            jac_t_g[sid] += float(g @ deriv)
        _accumulate(params, jac_t_g)

    return _make(values, (params,), backward_fn)


def gradients(loss: Tensor, leaves) -> list[np.ndarray]:
    """Backward pass returning one gradient per leaf (zeros if unreachable)."""
    loss.backward()
    return [leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
            for leaf in leaves]


def zero_grads(tensors):
    for t in tensors:
        t.grad = None
