"""Seeded synthetic corpora.

The real datasets behind the two tasks are not redistributable, so these
generators emit stand-ins in the exact same file formats: a reaction
corpus of grammar-plausible (not chemically valid) token strings, and a
50-feature Trojan table of per-category class-conditional Gaussians.
Identical seeds produce identical files.
"""

import numpy as np

from .features import FeatureMatrix

_LOWER = ["c", "n", "o", "s"]
ACETIC_RUN = ["C", "C", "(", "=", "O", ")", "O"]
ACETONE_RUN = ["C", "C", "(", "=", "O", ")", "C"]


def _aromatic_ring(rng, digit):
    size = int(rng.integers(4, 7))
    body = [str(digit)] + [_LOWER[int(rng.integers(0, len(_LOWER)))] for _ in range(size)]
    return [_LOWER[int(rng.integers(0, 2))]] + body + [str(digit)]


def _aromatic_fragment(rng, n_rings=1):
    tokens = []
    for k in range(n_rings):
        tokens += _aromatic_ring(rng, k + 1)
    return tokens


def _branch(tokens):
    return ["("] + tokens + [")"]


def _carbon_tail(rng):
    return ["C"] * int(rng.integers(1, 4))


def _single_type_record(rng, index):
    """Distinct type-1 product/reactant pair; reactants stay chain-free."""
    product = _aromatic_fragment(rng, n_rings=1)
    product = product[:2] + _branch(["C"] * (index + 1)) + product[2:]
    reactant = _aromatic_fragment(rng, n_rings=1) + [str(index % 10)] \
        + _aromatic_fragment(rng, n_rings=1)
    return 1, product, reactant


def _chain_record(rng, chain_run):
    """Record whose reactant embeds the chain; the product carries the
    matching carbonyl motif so the label is learnable from the input."""
    rtype = int(rng.integers(2, 11))
    motif = chain_run[1:]
    product = _aromatic_fragment(rng) + motif + _carbon_tail(rng)
    reactant = (_carbon_tail(rng) + chain_run + _carbon_tail(rng)
                + ["."] + _aromatic_fragment(rng))
    return rtype, product, reactant


def _plain_record(rng):
    rtype = int(rng.integers(2, 11))
    product = _aromatic_fragment(rng, n_rings=int(rng.integers(1, 3)))
    reactant = _aromatic_fragment(rng) + ["."] + _aromatic_fragment(rng)
    return rtype, product, reactant


def gen_smiles_toy(n_single: int = 12, n_acetic: int = 110, n_acetone: int = 110,
                   n_other: int = 30, seed: int = 0) -> list[str]:
    """TSV corpus lines: ``<RX_k> product-tokens<TAB>reactant-tokens``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    records = []
    for i in range(n_single):
        records.append(_single_type_record(rng, i))
    for _ in range(n_acetic):
        records.append(_chain_record(rng, ACETIC_RUN))
    for _ in range(n_acetone):
        records.append(_chain_record(rng, ACETONE_RUN))
    for _ in range(n_other):
        records.append(_plain_record(rng))
    order = rng.permutation(len(records))
    lines = []
    for idx in order:
        rtype, product, reactant = records[idx]
        lines.append(f"<RX_{rtype}> " + " ".join(product) + "\t" + " ".join(reactant))
    return lines


def write_smiles_corpus(path, lines):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


# Category sizes chosen so cyclic balancing lands exactly on 3026 rows:
# ten categories of 138 TI plus one of 133, each with ceil(ti/40) TF rows.
_DEFAULT_TI_COUNTS = (138,) * 10 + (133,)


def gen_trojan_synth(ti_counts=_DEFAULT_TI_COUNTS, ratio: int = 40,
                     n_features: int = 50, separation: float = 18.0,
                     spread: float = 1.0, pattern: str = "clusters",
                     seed: int = 0) -> FeatureMatrix:
    """Raw (unbalanced) Trojan-style feature table.

    ``clusters`` puts the two classes on opposite sides of a shared axis
    with small per-category offsets, so the balanced corpus reduces to two
    separable clusters.  ``xor`` emits a 2-feature four-cluster parity
    layout that no linear classifier can separate.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    if pattern == "xor":
        return _gen_xor(rng, sum(ti_counts), separation, spread)
    if pattern != "clusters":
        raise ValueError(f"unknown pattern {pattern!r}")
    axis = rng.normal(size=n_features)
    axis /= np.linalg.norm(axis)
    rows, labels, provenance = [], [], []
    for cat_idx, n_ti in enumerate(ti_counts):
        category = f"bench{cat_idx:02d}"
        # offsets small against spread: categories shade one cluster per
        # class instead of fragmenting it
        offset = rng.normal(scale=0.1, size=n_features)
        n_tf = max(1, int(round(n_ti / ratio)))
        for label, count in ((0, n_tf), (1, n_ti)):
            center = offset + (separation / 2.0) * (1 if label else -1) * axis
            for _ in range(count):
                rows.append(center + rng.normal(scale=spread, size=n_features))
                labels.append(label)
                provenance.append(category)
    return FeatureMatrix(np.array(rows), np.array(labels), provenance)


def _gen_xor(rng, n_total, separation, spread):
    rows, labels = [], []
    per_cluster = max(1, n_total // 4)
    half = separation / 2.0
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            label = int(sx * sy > 0)
            center = np.array([sx * half, sy * half])
            for _ in range(per_cluster):
                rows.append(center + rng.normal(scale=spread, size=2))
                labels.append(label)
    return FeatureMatrix(np.array(rows), np.array(labels),
                         ["xor"] * len(labels))


def xor_clusters(n: int = 400, separation: float = 6.0, spread: float = 1.0,
                 seed: int = 0):
    """2-D four-cluster parity set: returns (features, labels)."""
    fm = _gen_xor(np.random.default_rng(np.random.SeedSequence([seed, 0])),
                  n, separation, spread)
    return fm.rows, fm.labels


def two_blobs(n: int = 200, separation: float = 8.0, spread: float = 1.0,
              seed: int = 0):
    """Two linearly separable 2-D Gaussian blobs: returns (features, labels)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    half = n // 2
    rows = np.concatenate([
        rng.normal(scale=spread, size=(half, 2)) - separation / 2.0,
        rng.normal(scale=spread, size=(n - half, 2)) + separation / 2.0,
    ])
    labels = np.concatenate([np.zeros(half, dtype=np.int64),
                             np.ones(n - half, dtype=np.int64)])
    return rows, labels
