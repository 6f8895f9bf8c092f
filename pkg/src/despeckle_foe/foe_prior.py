"""Fields-of-Experts energy with the Lorentzian potential.

    E(u) = sum_i theta_i sum_p rho((k_i * u)_p),   rho(x) = log(1 + x^2)

Convolutions use periodic boundaries and are evaluated in the Fourier
domain, which makes the transposed operator an exact adjoint.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .filter_bank import FilterBank

__all__ = [
    "MAX_LOG",
    "rho",
    "rho_prime",
    "convolve",
    "convolve_adjoint",
    "FoEPrior",
    "prior_energy",
    "prior_gradient_u",
    "prior_gradient_w",
]

# largest log-amplitude accepted before exponentiation
MAX_LOG = 700.0


def rho(x):
    return np.log1p(np.square(x))


def rho_prime(x):
    return 2.0 * x / (1.0 + np.square(x))


def _check_kernel(shape, kernel):
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 != 1 or kernel.shape[1] % 2 != 1:
        raise ValueError(f"kernel must be 2-D with odd sides, got {kernel.shape}")
    if kernel.shape[0] > shape[0] or kernel.shape[1] > shape[1]:
        raise ValueError(f"kernel {kernel.shape} larger than image {tuple(shape)}")
    return kernel


def _kernel_spectrum(kernels, shape):
    """rFFT of kernels zero-padded to ``shape`` with their centre at (0, 0)."""
    kernels = np.asarray(kernels, dtype=np.float64)
    a, b = kernels.shape[-2:]
    pad = np.zeros(kernels.shape[:-2] + tuple(shape))
    pad[..., :a, :b] = kernels
    pad = np.roll(pad, (-(a // 2), -(b // 2)), axis=(-2, -1))
    return sfft.rfft2(pad)


def convolve(image, kernel) -> np.ndarray:
    """Periodic 2-D convolution ``k * u`` (same size as ``image``)."""
    image = np.asarray(image, dtype=np.float64)
    kernel = _check_kernel(image.shape, kernel)
    spec = _kernel_spectrum(kernel, image.shape)
    return sfft.irfft2(sfft.rfft2(image) * spec, s=image.shape)


def convolve_adjoint(image, kernel) -> np.ndarray:
    """Adjoint of :func:`convolve`, i.e. convolution with the flipped kernel."""
    image = np.asarray(image, dtype=np.float64)
    kernel = _check_kernel(image.shape, kernel)
    spec = _kernel_spectrum(kernel, image.shape)
    return sfft.irfft2(sfft.rfft2(image) * spec.conj(), s=image.shape)


class FoEPrior:
    """FoE energy and gradients for a fixed bank and image shape.

    Kernel spectra are computed once. The filter responses of the most
    recent argument are cached, so calling :meth:`energy` and then
    :meth:`grad_u` on the same array costs one set of forward transforms.
    """

    def __init__(self, bank: FilterBank, shape):
        shape = tuple(int(n) for n in shape)
        _check_kernel(shape, bank.kernels[0])
        self.bank = bank
        self.shape = shape
        self.weights = bank.weights
        self._spec = _kernel_spectrum(bank.kernels, shape)
        self._key = None
        self._resp = None

    def responses(self, u) -> np.ndarray:
        """Stack of filter responses ``K_i u``, shape ``(N_f, H, W)``."""
        u = np.asarray(u, dtype=np.float64)
        if u.shape != self.shape:
            raise ValueError(f"expected image of shape {self.shape}, got {u.shape}")
        if self._key is not None and np.array_equal(self._key, u):
            return self._resp
        resp = sfft.irfft2(sfft.rfft2(u)[None] * self._spec, s=self.shape)
        self._key = u.copy()
        self._resp = resp
        return resp

    def energy(self, u) -> float:
        resp = self.responses(u)
        per_filter = rho(resp).sum(axis=(1, 2))
        return float(np.dot(self.weights, per_filter))

    def grad_u(self, u) -> np.ndarray:
        """sum_i theta_i K_i^T rho'(K_i u)."""
        resp = self.responses(u)
        act = rho_prime(resp) * self.weights[:, None, None]
        back = (sfft.rfft2(act) * self._spec.conj()).sum(axis=0)
        return sfft.irfft2(back, s=self.shape)

    def energy_w(self, w, max_log=MAX_LOG) -> float:
        return self.energy(_safe_exp(w, max_log))

    def grad_w(self, w, max_log=MAX_LOG) -> np.ndarray:
        """Gradient of ``E(exp(w))``: ``exp(w) * grad_u(exp(w))``."""
        u = _safe_exp(w, max_log)
        return u * self.grad_u(u)


def _safe_exp(w, max_log=MAX_LOG):
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise FloatingPointError("non-finite log-amplitude")
    if np.max(w) > max_log:
        raise OverflowError(f"log-amplitude {np.max(w):g} exceeds bound {max_log:g}")
    return np.exp(w)


def prior_energy(u, bank: FilterBank) -> float:
    return FoEPrior(bank, np.shape(u)).energy(u)


def prior_gradient_u(u, bank: FilterBank) -> np.ndarray:
    return FoEPrior(bank, np.shape(u)).grad_u(u)


def prior_gradient_w(w, bank: FilterBank, max_log: float = MAX_LOG) -> np.ndarray:
    return FoEPrior(bank, np.shape(w)).grad_w(w, max_log)
