import numpy as np
import pytest

import hqml.autodiff as ad


def finite_diff_grads(fn, leaves, eps=1e-4):
    """Central-difference gradients of the scalar fn() wrt each leaf.

    fn must rebuild the graph from the leaves' current .data on every call.
    """
    grads = []
    for leaf in leaves:
        flat_grad = np.zeros(leaf.data.size)
        original = leaf.data.copy()
        for k in range(original.size):
            bumped = original.copy()
            bumped.ravel()[k] += eps
            leaf.data = bumped
            up = float(fn().data)
            bumped = original.copy()
            bumped.ravel()[k] -= eps
            leaf.data = bumped
            down = float(fn().data)
            flat_grad[k] = (up - down) / (2 * eps)
        leaf.data = original
        grads.append(flat_grad.reshape(original.shape))
    return grads


def assert_matches_finite_diff(fn, leaves, rtol=1e-5, atol=1e-7, eps=1e-4,
                               sample=None, rng=None):
    """Backward pass vs central differences, optionally on a random subset
    of coordinates (for large parameter sets)."""
    ad.zero_grads(leaves)
    fn().backward()
    analytic = [leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
                for leaf in leaves]
    if sample is None:
        numeric = finite_diff_grads(fn, leaves, eps=eps)
        for a, n in zip(analytic, numeric):
            np.testing.assert_allclose(a, n, rtol=rtol, atol=atol)
        return
    rng = rng or np.random.default_rng(0)
    for leaf, a in zip(leaves, analytic):
        original = leaf.data.copy()
        size = original.size
        picks = rng.choice(size, size=min(sample, size), replace=False)
        for k in picks:
            bumped = original.copy()
            bumped.ravel()[k] += eps
            leaf.data = bumped
            up = float(fn().data)
            bumped = original.copy()
            bumped.ravel()[k] -= eps
            leaf.data = bumped
            down = float(fn().data)
            leaf.data = original
            numeric = (up - down) / (2 * eps)
            np.testing.assert_allclose(a.ravel()[k], numeric, rtol=rtol, atol=atol)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
