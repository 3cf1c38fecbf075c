"""Classical network components and the baseline classifiers.

Weight initialization is uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from
a caller-supplied seeded generator, so every model is reproducible from a
single seed.  The LSTM cell follows the standard gate equations with the
concatenation ordered hidden-state-first, input-appended.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class VocabError(ValueError):
    """Token id outside the embedding table."""


class InputError(ValueError):
    """Empty or otherwise unusable model input."""


class DivergenceError(RuntimeError):
    """Non-finite gradient or loss encountered during training."""


class DegenerateDataError(ValueError):
    """Training set lacks a second class."""


def _uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class LinearLayer:
    """Affine map [out_dim x in_dim]; accepts vectors or row-batches."""

    def __init__(self, in_dim: int, out_dim: int, rng):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weights = Tensor(_uniform_init(rng, (out_dim, in_dim), in_dim),
                              requires_grad=True)
        self.bias = Tensor(_uniform_init(rng, (out_dim,), in_dim), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim == 1:
            return ad.matmul(self.weights, x) + self.bias
        return ad.matmul(x, ad.transpose(self.weights)) + self.bias

    def parameters(self):
        return [self.weights, self.bias]

    def named_parameters(self):
        return {"weights": self.weights, "bias": self.bias}


class EmbeddingTable:
    """Dense token embeddings; gradient flows only into the selected row."""

    def __init__(self, vocab_size: int, embed_dim: int, rng):
        self.vocab_size = vocab_size
        self.embed_dim = embed_dim
        self.table = Tensor(_uniform_init(rng, (vocab_size, embed_dim), embed_dim),
                            requires_grad=True)

    def __call__(self, token_id: int) -> Tensor:
        if not 0 <= token_id < self.vocab_size:
            raise VocabError(f"token id {token_id} outside vocab of {self.vocab_size}")
        return ad.embedding_row(self.table, token_id)

    def parameters(self):
        return [self.table]

    def named_parameters(self):
        return {"table": self.table}


def embed(table: EmbeddingTable, token_id: int) -> Tensor:
    return table(token_id)


@dataclass
class LSTMCellState:
    h: Tensor
    c: Tensor


def zero_cell_state(hidden_dim: int) -> LSTMCellState:
    return LSTMCellState(Tensor(np.zeros(hidden_dim)), Tensor(np.zeros(hidden_dim)))


def gated_cell_step(f_pre, i_pre, g_pre, o_pre, c_prev) -> LSTMCellState:
    """Shared LSTM update: gates from preactivations, then state mixing."""
    f = ad.sigmoid(f_pre)
    i = ad.sigmoid(i_pre)
    g = ad.tanh_act(g_pre)
    o = ad.sigmoid(o_pre)
    c = f * c_prev + i * g
    h = o * ad.tanh_act(c)
    return LSTMCellState(h, c)


class LSTMCell:
    """Classical cell: four affine gate maps over concat(h_prev, x)."""

    def __init__(self, embed_dim: int, hidden_dim: int, rng):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        in_dim = hidden_dim + embed_dim
        self.forget_gate = LinearLayer(in_dim, hidden_dim, rng)
        self.input_gate = LinearLayer(in_dim, hidden_dim, rng)
        self.update_gate = LinearLayer(in_dim, hidden_dim, rng)
        self.output_gate = LinearLayer(in_dim, hidden_dim, rng)

    def step(self, x: Tensor, prev: LSTMCellState) -> LSTMCellState:
        if x.data.shape != (self.embed_dim,):
            raise ad.ShapeError(f"expected input of shape ({self.embed_dim},), got {x.shape}")
        v = ad.concat([prev.h, x])
        return gated_cell_step(self.forget_gate(v), self.input_gate(v),
                               self.update_gate(v), self.output_gate(v), prev.c)

    def parameters(self):
        return (self.forget_gate.parameters() + self.input_gate.parameters()
                + self.update_gate.parameters() + self.output_gate.parameters())

    def named_parameters(self):
        out = {}
        for name in ("forget_gate", "input_gate", "update_gate", "output_gate"):
            for key, value in getattr(self, name).named_parameters().items():
                out[f"{name}.{key}"] = value
        return out


def lstm_cell(x: Tensor, prev: LSTMCellState, cell: LSTMCell) -> LSTMCellState:
    return cell.step(x, prev)


class SequenceClassifier:
    """Embedding -> recurrent cell over tokens -> linear head on final h."""

    def __init__(self, embedding: EmbeddingTable, cell, head: LinearLayer):
        self.embedding = embedding
        self.cell = cell
        self.head = head

    def forward(self, token_ids) -> Tensor:
        if len(token_ids) == 0:
            raise InputError("cannot classify an empty token sequence")
        state = zero_cell_state(self.cell.hidden_dim)
        for tid in token_ids:
            state = self.cell.step(self.embedding(int(tid)), state)
        return self.head(state.h)

    def parameters(self):
        return (self.embedding.parameters() + self.cell.parameters()
                + self.head.parameters())

    def named_parameters(self):
        out = {}
        for name in ("embedding", "cell", "head"):
            for key, value in getattr(self, name).named_parameters().items():
                out[f"{name}.{key}"] = value
        return out


def sequence_classify(model: SequenceClassifier, token_ids) -> Tensor:
    return model.forward(token_ids)


class DenseClassifier:
    """Feed-forward ReLU network over feature rows (e.g. 2-64-256-64-2)."""

    def __init__(self, layer_dims, rng):
        if len(layer_dims) < 2:
            raise ad.ShapeError("need at least an input and an output dimension")
        self.layer_dims = tuple(layer_dims)
        self.layers = [LinearLayer(d_in, d_out, rng)
                       for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:])]

    def forward_batch(self, x: np.ndarray) -> Tensor:
        out = Tensor(np.atleast_2d(x))
        for layer in self.layers[:-1]:
            out = ad.relu(layer(out))
        return self.layers[-1](out)

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def named_parameters(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for key, value in layer.named_parameters().items():
                out[f"layers.{i}.{key}"] = value
        return out


# ---------------------------------------------------------------------------
# Optimizers.  Functional steps keep the update rules pure and testable; the
# class wrappers apply them to Tensor parameters in place (rebinding .data).
# ---------------------------------------------------------------------------

def sgd_step(params, grads, state, lr):
    return [p - lr * g for p, g in zip(params, grads)], state


def adagrad_step(params, grads, state, lr, eps=1e-10):
    if state is None:
        state = {"accum": [np.zeros_like(p) for p in params]}
    new_params = []
    for p, g, acc in zip(params, grads, state["accum"]):
        acc += g * g
        new_params.append(p - lr * g / (np.sqrt(acc) + eps))
    return new_params, state


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    if state is None:
        state = {"m": [np.zeros_like(p) for p in params],
                 "v": [np.zeros_like(p) for p in params], "t": 0}
    state["t"] += 1
    t = state["t"]
    new_params = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state["m"][i] = beta1 * state["m"][i] + (1 - beta1) * g
        state["v"][i] = beta2 * state["v"][i] + (1 - beta2) * g * g
        m_hat = state["m"][i] / (1 - beta1 ** t)
        v_hat = state["v"][i] / (1 - beta2 ** t)
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
    return new_params, state


_STEP_FNS = {"sgd": sgd_step, "adam": adam_step, "adagrad": adagrad_step}


class Optimizer:
    def __init__(self, params, lr: float, kind: str):
        if kind not in _STEP_FNS:
            raise ValueError(f"unknown optimizer {kind!r}")
        self.params = list(params)
        self.lr = lr
        self.kind = kind
        self.state = None

    def step(self):
        grads = []
        for p in self.params:
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise DivergenceError("non-finite gradient")
            grads.append(g)
        new_data, self.state = _STEP_FNS[self.kind](
            [p.data for p in self.params], grads, self.state, self.lr)
        for p, d in zip(self.params, new_data):
            p.data = d

    def zero_grad(self):
        ad.zero_grads(self.params)


def make_optimizer(name: str, params, lr: float) -> Optimizer:
    return Optimizer(params, lr, name.lower())


# ---------------------------------------------------------------------------
# Baseline classifiers (Trojan comparison table).  The linear/NB models are
# scikit-learn; the dense network runs on the autodiff stack above.
# ---------------------------------------------------------------------------

DENSE_NN_DIMS = (2, 64, 256, 64, 2)


def _accuracy(pred, y):
    return float(np.mean(pred == y))


def baseline_fit_predict(kind: str, train, test, seed: int = 0):
    """Train the named classifier; return (train_accuracy, test_accuracy)."""
    x_train, y_train = train
    x_test, y_test = test
    x_train = np.asarray(x_train, dtype=np.float64)
    x_test = np.asarray(x_test, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    y_test = np.asarray(y_test, dtype=np.int64)
    if np.unique(y_train).size < 2:
        raise DegenerateDataError("training set contains a single class")

    if kind == "dense_nn":
        return _dense_nn_fit_predict(x_train, y_train, x_test, y_test, seed)

    from sklearn.linear_model import LogisticRegression, Perceptron
    from sklearn.naive_bayes import GaussianNB

    if kind == "perceptron":
        clf = Perceptron(random_state=seed)
    elif kind == "logistic_regression":
        clf = LogisticRegression(random_state=seed)
    elif kind == "gaussian_nb":
        clf = GaussianNB()
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    clf.fit(x_train, y_train)
    return (_accuracy(clf.predict(x_train), y_train),
            _accuracy(clf.predict(x_test), y_test))


def _dense_nn_fit_predict(x_train, y_train, x_test, y_test, seed,
                          epochs=10, lr=0.01, batch_size=32):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    n_classes = int(y_train.max()) + 1
    dims = (x_train.shape[1],) + DENSE_NN_DIMS[1:-1] + (max(n_classes, 2),)
    model = DenseClassifier(dims, rng)
    opt = make_optimizer("adam", model.parameters(), lr)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    n = x_train.shape[0]
    for _ in range(epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss = ad.softmax_xent(model.forward_batch(x_train[idx]), y_train[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()

    def predict(x):
        return np.argmax(model.forward_batch(x).data, axis=1)

    return _accuracy(predict(x_train), y_train), _accuracy(predict(x_test), y_test)
