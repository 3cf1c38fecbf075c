"""Trojan-feature pipeline: exact t-SNE, max normalization, class
balancing by replication, and stratified splits.

The t-SNE here is the exact O(n^2) algorithm: per-point Gaussian
bandwidths found by bisection against the target perplexity, symmetrized
affinities, Student-t (1 dof) low-dimensional kernel, gradient descent
with momentum switching 0.5 -> 0.8 at the early-exaggeration boundary,
per-coordinate gain adaptation, and recentering every iteration.  No tree
approximation; a few thousand points is desk scale.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

_EPS = np.finfo(np.float64).eps


class ConfigError(ValueError):
    """Invalid t-SNE configuration."""


class SizeError(ValueError):
    """Too few samples."""


class NormalizationError(ValueError):
    """Row cannot be normalized (all zeros)."""


class SplitError(ValueError):
    """A requested split would leave a class empty."""


@dataclass
class FeatureMatrix:
    rows: np.ndarray
    labels: np.ndarray
    provenance: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {self.rows.shape}")
        if np.isnan(self.rows).any():
            raise ValueError("feature rows contain NaN")
        if self.labels.shape != (self.rows.shape[0],):
            raise ValueError("labels length must match row count")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be binary (0 = TF, 1 = TI)")
        if not self.provenance:
            self.provenance = [""] * self.rows.shape[0]
        if len(self.provenance) != self.rows.shape[0]:
            raise ValueError("provenance length must match row count")

    @property
    def n(self) -> int:
        return self.rows.shape[0]


@dataclass
class TSNEConfig:
    perplexity: float = 30.0
    learning_rate: float = 200.0
    n_iter: int = 1000
    early_exaggeration_factor: float = 12.0
    early_exaggeration_iters: int = 250
    seed: int = 0


def _conditional_affinities(sq_dists: np.ndarray, perplexity: float,
                            tol: float = 1e-5, max_steps: int = 50) -> np.ndarray:
    """Row-conditional Gaussians whose entropy matches log(perplexity).

    One bisection per point over the precision beta, at most ``max_steps``
    halvings, entropy tolerance ``tol`` in nats.
    """
    n = sq_dists.shape[0]
    target_entropy = np.log(perplexity)
    P = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        d = sq_dists[i]
        for _ in range(max_steps):
            p = np.exp(-d * beta)
            p[i] = 0.0
            total = max(p.sum(), _EPS)
            p /= total
            entropy = np.log(total) + beta * float(d @ p)
            diff = entropy - target_entropy
            if abs(diff) <= tol:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        P[i] = p
    return P


def _kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))


def tsne_reduce(x, cfg: TSNEConfig, return_info: bool = False):
    """Exact t-SNE embedding of the rows of ``x`` into 2 dimensions.

    Deterministic per ``cfg.seed``; the embedding is recentered every
    iteration.  With ``return_info`` the KL divergence before and after
    optimization (both against the unexaggerated affinities) is returned
    alongside.
    """
    rows = x.rows if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=np.float64)
    n = rows.shape[0]
    if n < 10:
        raise SizeError(f"t-SNE needs at least 10 samples, got {n}")
    if not cfg.perplexity < (n - 1) / 3:
        raise ConfigError(f"perplexity {cfg.perplexity} infeasible for n={n}")
    if cfg.n_iter < cfg.early_exaggeration_iters:
        raise ConfigError("n_iter must cover the early-exaggeration phase")

    sq_dists = squareform(pdist(rows, "sqeuclidean"))
    cond = _conditional_affinities(sq_dists, cfg.perplexity)
    P = cond + cond.T
    P = np.maximum(P / P.sum(), _EPS)
    np.fill_diagonal(P, 0.0)

    rng = np.random.default_rng(cfg.seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)

    # The n^2 iteration state is memory-bound; single precision halves the
    # traffic and, as in the reference exact implementation, costs nothing
    # observable.  The embedding itself stays float64.
    P32 = P.astype(np.float32)
    P32_exaggerated = P32 * np.float32(cfg.early_exaggeration_factor)
    kernel_buf = np.empty((n, n), dtype=np.float32)
    coeff_buf = np.empty((n, n), dtype=np.float32)

    def student_t_kernel(embedding, out):
        """w_ij = 1 / (1 + |y_i - y_j|^2), zero diagonal, written into out."""
        emb32 = embedding.astype(np.float32)
        sq = np.einsum("ij,ij->i", emb32, emb32)
        np.matmul(emb32, emb32.T, out=out)
        out *= -2.0
        out += sq[:, None]
        out += sq[None, :]
        np.maximum(out, 0.0, out=out)
        out += 1.0
        np.reciprocal(out, out=out)
        np.fill_diagonal(out, 0.0)
        return out

    w0 = student_t_kernel(Y, kernel_buf)
    kl_initial = _kl_divergence(P, np.maximum(w0.astype(np.float64) / w0.sum(), _EPS))

    for it in range(cfg.n_iter):
        exaggerating = it < cfg.early_exaggeration_iters
        p_eff = P32_exaggerated if exaggerating else P32
        momentum = 0.5 if exaggerating else 0.8
        w = student_t_kernel(Y, kernel_buf)
        inv_sum = np.float32(1.0) / w.sum(dtype=np.float64).astype(np.float32)
        # coeff = (p_eff - w / sum(w)) * w, assembled without a q matrix
        np.multiply(p_eff, w, out=coeff_buf)
        np.multiply(w, w, out=w)
        w *= inv_sum
        coeff_buf -= w
        y32 = Y.astype(np.float32)
        grad = 4.0 * (coeff_buf.sum(axis=1, dtype=np.float64)[:, None] * Y
                      - (coeff_buf @ y32).astype(np.float64))
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        velocity = momentum * velocity - cfg.learning_rate * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

    w_final = student_t_kernel(Y, kernel_buf)
    kl_final = _kl_divergence(P, np.maximum(w_final.astype(np.float64) / w_final.sum(),
                                            _EPS))
    if return_info:
        return Y, {"kl_initial": kl_initial, "kl_final": kl_final}
    return Y


def max_normalize(x: np.ndarray) -> np.ndarray:
    """Divide each row by its largest-magnitude entry.

    The row maximum by absolute value (not the signed maximum) keeps the
    output inside [-1, 1] even when a row is entirely negative.
    """
    x = np.asarray(x, dtype=np.float64)
    rows = np.atleast_2d(x)
    scale = np.abs(rows).max(axis=1)
    zero_rows = np.flatnonzero(scale == 0.0)
    if zero_rows.size:
        raise NormalizationError(f"row {int(zero_rows[0])} is all zeros")
    out = rows / scale[:, None]
    return out.reshape(x.shape)


def balance_by_replication(fm: FeatureMatrix) -> FeatureMatrix:
    """Replicate the minority class within each provenance category until
    class counts match.

    Output keeps the original rows first (original order), then replicas
    grouped per category in first-seen order.  Replicas cycle through the
    minority rows in row order, so no feature value is fabricated.
    """
    labels = fm.labels
    categories = list(dict.fromkeys(fm.provenance))
    replica_idx = []
    for cat in categories:
        members = np.flatnonzero(np.array([p == cat for p in fm.provenance]))
        class0 = members[labels[members] == 0]
        class1 = members[labels[members] == 1]
        if class0.size == 0 or class1.size == 0:
            warnings.warn(f"category {cat!r} has a single class; left unbalanced")
            continue
        minority, majority = (class0, class1) if class0.size < class1.size else (class1, class0)
        deficit = majority.size - minority.size
        for k in range(deficit):
            replica_idx.append(minority[k % minority.size])
    order = np.concatenate([np.arange(fm.n), np.array(replica_idx, dtype=np.int64)]) \
        if replica_idx else np.arange(fm.n)
    return FeatureMatrix(fm.rows[order], labels[order],
                         [fm.provenance[i] for i in order])


def stratified_split(x, labels, ratios, seed: int):
    """Per-class proportional assignment of shuffled indices.

    ``ratios`` are (train, val, test) fractions summing to 1.  Within each
    class, counts are floors plus largest-remainder top-ups, so totals
    land within one row per class of the exact proportions.  Returns three
    index arrays.
    """
    ratios = tuple(float(r) for r in ratios)
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must sum to 1, got {ratios}")
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(members.size)]
        exact = [r * members.size for r in ratios]
        counts = [int(np.floor(e)) for e in exact]
        remainders = [e - c for e, c in zip(exact, counts)]
        for _ in range(members.size - sum(counts)):
            k = int(np.argmax(remainders))
            counts[k] += 1
            remainders[k] = -1.0
        offset = 0
        for part, count, ratio in zip(parts, counts, ratios):
            if ratio > 0 and count == 0:
                raise SplitError(f"class {cls} would be empty in a requested split")
            part.append(members[offset:offset + count])
            offset += count
    return tuple(np.sort(np.concatenate(p)) if p else np.array([], dtype=np.int64)
                 for p in parts)


def load_feature_csv(path) -> FeatureMatrix:
    """Read the 50-feature schema: f1..fD, label, category (with header)."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header[-2:] != ["label", "category"]:
            raise ValueError(f"expected trailing label,category columns in {path}")
        n_features = len(header) - 2
        rows, labels, provenance = [], [], []
        for rec in reader:
            rows.append([float(v) for v in rec[:n_features]])
            labels.append(int(rec[n_features]))
            provenance.append(rec[n_features + 1])
    return FeatureMatrix(np.array(rows), np.array(labels), provenance)


def write_feature_csv(path, fm: FeatureMatrix):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"f{i + 1}" for i in range(fm.rows.shape[1])]
                        + ["label", "category"])
        for row, label, cat in zip(fm.rows, fm.labels, fm.provenance):
            writer.writerow([repr(float(v)) for v in row] + [int(label), cat])


def write_reduced_csv(path, embedding: np.ndarray, labels):
    """Write the reduced (f1, f2, label) schema."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["f1", "f2", "label"])
        for row, label in zip(np.asarray(embedding), labels):
            writer.writerow([repr(float(row[0])), repr(float(row[1])), int(label)])
