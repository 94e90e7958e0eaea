"""Independent reference computations shared by the test modules."""

import numpy as np


def central_difference(f, params, coords, h=1e-6):
    """Numerical gradient of scalar ``f()`` at the given (array_index, flat_index) coords.

    ``params`` are perturbed in place and restored.
    """
    out = []
    for k, i in coords:
        p = params[k].reshape(-1)
        old = p[i]
        p[i] = old + h
        fp = f()
        p[i] = old - h
        fm = f()
        p[i] = old
        out.append((fp - fm) / (2 * h))
    return np.array(out)


def sample_coords(params, rng, per_array=20):
    coords = []
    for k, p in enumerate(params):
        n = p.size
        idx = rng.choice(n, size=min(per_array, n), replace=False)
        coords += [(k, int(i)) for i in idx]
    return coords


def relative_error(analytic, numeric):
    a, n = np.asarray(analytic), np.asarray(numeric)
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), 1e-300))


def hand_mlp(weights, biases, x, output="identity"):
    """Layer-by-layer evaluation with explicit Python loops, no matrix products."""
    h = list(x)
    for li, (w, b) in enumerate(zip(weights, biases)):
        z = []
        for r in range(w.shape[0]):
            s = b[r]
            for c in range(w.shape[1]):
                s += w[r, c] * h[c]
            z.append(s)
        if li < len(weights) - 1:
            h = [max(v, 0.0) for v in z]
        elif output == "tanh":
            h = [float(np.tanh(v)) for v in z]
        else:
            h = z
    return np.array(h)
