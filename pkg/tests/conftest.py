import os

import numpy as np
import pytest

from despeckle_foe.imageio import read_image

DATA = os.path.join(os.path.dirname(__file__), "data")
TEST_IMAGES = ("astronaut", "cameraman", "chelsea")


def brute_convolve(u, k):
    """Periodic convolution by explicit summation: out[p] = sum_q k[q] u[p - q]."""
    h, w = u.shape
    a, b = k.shape
    ra, rb = a // 2, b // 2
    out = np.zeros_like(u, dtype=np.float64)
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for di in range(-ra, ra + 1):
                for dj in range(-rb, rb + 1):
                    acc += k[di + ra, dj + rb] * u[(i - di) % h, (j - dj) % w]
            out[i, j] = acc
    return out


def central_diff_grad(fun, x, h):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (fun(xp) - fun(xm)) / (2 * h)
    return g


@pytest.fixture(scope="session")
def test_images():
    return {name: read_image(os.path.join(DATA, f"{name}.pgm"))[0] for name in TEST_IMAGES}
