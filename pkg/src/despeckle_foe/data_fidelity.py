"""Data-fidelity terms for multiplicative (Nakagami) noise and their prox maps.

Three models are supported:

``nakagami_log``
    Log-domain Nakagami MAP term, ``(lam/2) <2w + f^2 exp(-2w), 1>``.
``idiv``
    I-divergence on amplitudes, ``(lam/2) <u^2 - 2 f^2 log u, 1>``.
``combined``
    Weighted sum of both in the log domain,
    ``(lam1/2)(2w + f^2 e^{-2w}) + (lam2/2)(e^{2w} - 2 f^2 w)``.

All prox maps are pixelwise. The log-domain ones are solved with a
bracketed Newton iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


__all__ = [
    "F_FLOOR",
    "MODELS",
    "DataTermSpec",
    "ProxResult",
    "ProxError",
    "clamp_observation",
    "nakagami_energy",
    "nakagami_prox",
    "idiv_energy",
    "idiv_prox",
    "combined_energy",
    "combined_prox",
]

F_FLOOR = 1.0
MODELS = ("nakagami_log", "idiv", "combined")
PROX_TOL = 1e-12
NEWTON_MAX_ITER = 30


class ProxError(ArithmeticError):
    """Newton prox failed to converge.

    Attributes
    ----------
    pixel : tuple of int
        Index of the pixel with the largest residual.
    """

    def __init__(self, message, pixel):
        super().__init__(message)
        self.pixel = pixel


@dataclass(frozen=True)
class DataTermSpec:
    """Fidelity model and its weights.

    ``lam`` is used by the single-term models, ``lam1``/``lam2`` by
    ``combined``. ``looks`` is carried for bookkeeping; it only enters
    through the choice of weights.
    """

    model: str = "combined"
    lam: float = 1.0
    lam1: float = 550.0
    lam2: float = 0.02
    looks: float = 8

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}, expected one of {MODELS}")
        if not self.looks > 0:
            raise ValueError("looks must be positive")
        if self.model == "combined":
            if not (self.lam1 > 0 and self.lam2 > 0):
                raise ValueError("combined model needs lam1 > 0 and lam2 > 0")
        elif not self.lam > 0:
            raise ValueError(f"{self.model} model needs lam > 0")


@dataclass
class ProxResult:
    image: np.ndarray
    newton_iterations: int
    max_residual: float


def clamp_observation(f, floor=F_FLOOR) -> np.ndarray:
    """Clamp observed amplitudes from below so logs stay finite."""
    return np.maximum(np.asarray(f, dtype=np.float64), floor)


_EXP_LIMIT = float(np.log(np.finfo(np.float64).max))


def _exp(x):
    x = np.asarray(x, dtype=np.float64)
    if np.max(x) > _EXP_LIMIT:
        raise OverflowError(f"exponent {np.max(x):g} overflows float64")
    return np.exp(x)


def nakagami_energy(w, f, lam) -> float:
    w = np.asarray(w, dtype=np.float64)
    f2 = np.square(f)
    return float(0.5 * lam * np.sum(2.0 * w + f2 * _exp(-2.0 * w)))


def idiv_energy(u, f, lam) -> float:
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0):
        raise ValueError("I-divergence energy needs u > 0")
    return float(0.5 * lam * np.sum(np.square(u) - 2.0 * np.square(f) * np.log(u)))


def combined_energy(w, f, lam1, lam2) -> float:
    w = np.asarray(w, dtype=np.float64)
    f2 = np.square(f)
    t1 = 2.0 * w + f2 * _exp(-2.0 * w)
    t2 = _exp(2.0 * w) - 2.0 * f2 * w
    return float(np.sum(0.5 * lam1 * t1 + 0.5 * lam2 * t2))


def idiv_prox(u_hat, f, tau_lam) -> np.ndarray:
    """Closed-form prox of the I-divergence term (positive root of a quadratic)."""
    u_hat = np.asarray(u_hat, dtype=np.float64)
    f2 = np.square(np.asarray(f, dtype=np.float64))
    a = 1.0 + tau_lam
    c = tau_lam * f2
    disc = np.sqrt(np.square(u_hat) + 4.0 * a * c)
    # for u_hat < 0 use the product of the roots to avoid cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        neg = 2.0 * c / (disc - u_hat)
    return np.where(u_hat >= 0, (u_hat + disc) / (2.0 * a), neg)


def _newton_bracketed(phi, w_hat, log_f, curv, tol, max_iter):
    """Solve ``phi(w) = 0`` pixelwise for increasing ``phi``.

    ``phi`` returns ``(value, derivative)``. The root lies between ``w_hat``
    and ``log_f`` for every model here; the bracket is padded by 1 and
    widened if that ever fails. Newton starts from the prox of the data
    term's second-order expansion at ``log_f`` (``curv`` is its curvature
    there times the step), which lies inside the bracket.
    """
    lo = np.minimum(w_hat, log_f) - 1.0
    hi = np.maximum(w_hat, log_f) + 1.0
    for _ in range(64):
        bad_lo = phi(lo)[0] > 0
        bad_hi = phi(hi)[0] < 0
        if not (bad_lo.any() or bad_hi.any()):
            break
        width = hi - lo
        lo = np.where(bad_lo, lo - width, lo)
        hi = np.where(bad_hi, hi + width, hi)

    w = (w_hat + curv * log_f) / (1.0 + curv)
    val, der = phi(w)
    iters = np.zeros(w.shape, dtype=np.int64)
    active = np.abs(val) > tol
    n = 0
    while active.any():
        if n >= max_iter:
            worst = np.unravel_index(np.argmax(np.abs(val)), val.shape)
            raise ProxError(
                f"Newton prox did not converge in {max_iter} iterations "
                f"(|phi|={np.abs(val[worst]):.3g} at pixel {worst})",
                worst,
            )
        n += 1
        delta = val / der
        # Newton step at rounding level: |phi| cannot shrink further
        active &= np.abs(delta) > 4.0 * np.spacing(np.abs(w) + 1.0)
        lo = np.where(active & (val < 0), w, lo)
        hi = np.where(active & (val > 0), w, hi)
        step = w - delta
        outside = ~((step > lo) & (step < hi))
        w = np.where(active, np.where(outside, 0.5 * (lo + hi), step), w)
        iters += active
        val, der = phi(w)
        active &= np.abs(val) > tol
    return w, int(iters.max(initial=0)), float(np.abs(val).max(initial=0.0))


def nakagami_prox(w_hat, f, tau_lam, tol=PROX_TOL, max_iter=NEWTON_MAX_ITER) -> ProxResult:
    """Prox of ``tau_lam/2 <2w + f^2 e^{-2w}, 1>`` evaluated at ``w_hat``.

    Per pixel this is the root of ``w - w_hat + tau_lam (1 - f^2 e^{-2w})``.
    """
    w_hat = np.asarray(w_hat, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    f2 = np.square(f)

    def phi(w):
        e = f2 * _exp(-2.0 * w)
        return w - w_hat + tau_lam * (1.0 - e), 1.0 + 2.0 * tau_lam * e

    w, its, res = _newton_bracketed(
        phi, w_hat, np.log(f), 2.0 * tau_lam, tol, max_iter
    )
    return ProxResult(w, its, res)


def combined_prox(
    w_hat, f, tau, lam1, lam2, tol=PROX_TOL, max_iter=NEWTON_MAX_ITER
) -> ProxResult:
    """Prox of ``tau`` times the combined data term, evaluated at ``w_hat``.

    Per pixel this is the unique root of
    ``w - w_hat + tau [lam1 (1 - f^2 e^{-2w}) + lam2 (e^{2w} - f^2)]``.
    """
    if lam1 < 0 or lam2 < 0 or (lam1 == 0 and lam2 == 0):
        raise ValueError("need lam1, lam2 >= 0, not both zero")
    w_hat = np.asarray(w_hat, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    f2 = np.square(f)
    a, b = tau * lam1, tau * lam2

    def phi(w):
        em = f2 * _exp(-2.0 * w)
        ep = _exp(2.0 * w)
        val = w - w_hat + a * (1.0 - em) + b * (ep - f2)
        return val, 1.0 + 2.0 * (a * em + b * ep)

    curv = 2.0 * (a + b * f2)
    w, its, res = _newton_bracketed(phi, w_hat, np.log(f), curv, tol, max_iter)
    return ProxResult(w, its, res)
