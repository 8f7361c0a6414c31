"""Independent numerical oracles shared by the tests (no jets involved)."""

import itertools

import numpy as np

# central stencils for the k-th derivative, error O(h^2)
STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


def central_partial(fn, point, multi_index, h):
    """Tensor-product central difference of ``fn(x, y, u, v)`` (vectorised)."""
    point = np.asarray(point, dtype=float)
    terms = [list(STENCILS[k].items()) for k in multi_index]
    offs, weights = [], []
    for combo in itertools.product(*terms):
        offs.append([o for o, _ in combo])
        weights.append(np.prod([w for _, w in combo]))
    offs = np.array(offs, dtype=float) * h
    pts = point[None, :] + offs
    vals = fn(pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3])
    vals = np.broadcast_to(vals, (len(pts),))
    return float(np.dot(weights, vals) / h ** sum(multi_index))


def richardson_partial(fn, point, multi_index, h=0.05):
    d1 = central_partial(fn, point, multi_index, h)
    d2 = central_partial(fn, point, multi_index, h / 2)
    return (4.0 * d2 - d1) / 3.0


def all_multi_indices(max_order=4, n=4):
    return [e for e in itertools.product(range(max_order + 1), repeat=n)
            if 0 < sum(e) <= max_order]
