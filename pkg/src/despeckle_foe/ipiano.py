"""iPiano: inertial proximal gradient for ``min F(x) + G(x)``.

``F`` is smooth and possibly non-convex, ``G`` convex with a computable
prox. The update is

    x+ = prox_{alpha G}(x - alpha grad F(x) + beta (x - x_prev))

with ``alpha = safety * 2 (1 - beta) / L`` and ``L`` a local Lipschitz
estimate found by backtracking on the descent lemma.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["SolverConfig", "SolveTrace", "SolverError", "CompositeProblem", "ipiano_solve"]

log = logging.getLogger(__name__)

MAX_DOUBLINGS = 60


class SolverError(RuntimeError):
    """Numerical failure inside the solver loop.

    Attributes
    ----------
    iteration : int
    """

    def __init__(self, message, iteration):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    beta: float = 0.8
    max_iters: int = 200
    rel_change_tol: float = 1e-5
    lipschitz_init: float = 1.0
    backtrack_factor: float = 2.0
    step_safety: float = 0.95

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not self.rel_change_tol > 0 or not self.lipschitz_init > 0:
            raise ValueError("tolerances and lipschitz_init must be positive")
        if not self.backtrack_factor > 1:
            raise ValueError("backtrack_factor must exceed 1")
        if not 0.0 < self.step_safety < 1.0:
            raise ValueError("step_safety must lie in (0, 1)")


@dataclass
class SolveTrace:
    energies: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False
    final_rel_change: float = float("nan")
    prox_iterations: int = 0


@dataclass
class CompositeProblem:
    """Oracles for ``H = F + G``.

    ``prox_G(v, step)`` returns ``argmin_x ||x - v||^2 / 2 + step * G(x)``,
    either as an array or as an object with ``image`` and
    ``newton_iterations`` attributes.
    """

    F: Callable[[np.ndarray], float]
    grad_F: Callable[[np.ndarray], np.ndarray]
    G: Callable[[np.ndarray], float]
    prox_G: Callable
    init: np.ndarray | None = None
    to_image: Callable[[np.ndarray], np.ndarray] = lambda x: x

    def energy_H(self, x) -> float:
        return self.F(x) + self.G(x)


def _unpack_prox(out):
    if isinstance(out, np.ndarray):
        return out, 0
    return out.image, out.newton_iterations


def ipiano_solve(problem: CompositeProblem, x0=None, config: SolverConfig = SolverConfig()):
    """Run iPiano from ``x0`` (defaults to ``problem.init``).

    The inertial term starts at zero (``x_prev = x0``). Each iteration starts
    its Lipschitz search at half the previously accepted estimate.

    Returns
    -------
    x : ndarray
        Last iterate.
    trace : SolveTrace

    Raises
    ------
    SolverError
        On a non-finite energy or gradient, or when backtracking needs more
        than 60 increases of the Lipschitz estimate.
    """
    x = np.array(problem.init if x0 is None else x0, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite starting point", 0)
    beta = config.beta
    x_prev = x
    F_x = problem.F(x)
    H_x = F_x + problem.G(x)
    if not np.isfinite(H_x):
        raise SolverError("non-finite initial energy", 0)
    trace = SolveTrace(energies=[H_x])
    L = config.lipschitz_init

    for n in range(config.max_iters):
        g = problem.grad_F(x)
        if not np.all(np.isfinite(g)):
            raise SolverError("non-finite gradient", n)
        if n > 0:
            L = L / config.backtrack_factor
        inertia = beta * (x - x_prev)
        for _ in range(MAX_DOUBLINGS + 1):
            alpha = config.step_safety * 2.0 * (1.0 - beta) / L
            try:
                x_new, prox_its = _unpack_prox(problem.prox_G(x - alpha * g + inertia, alpha))
                d = x_new - x
                F_new = problem.F(x_new)
            except (OverflowError, FloatingPointError, ArithmeticError) as exc:
                # steps that overflow exp() are treated as too long
                log.debug("iteration %d: rejected step (%s)", n, exc)
                L *= config.backtrack_factor
                continue
            bound = F_x + np.vdot(g, d) + 0.5 * L * np.vdot(d, d)
            if np.isfinite(F_new) and F_new <= bound + 1e-14 * abs(F_x):
                break
            L *= config.backtrack_factor
        else:
            raise SolverError(
                f"backtracking exceeded {MAX_DOUBLINGS} increases (L={L:.3g})", n
            )

        H_new = F_new + problem.G(x_new)
        if not np.isfinite(H_new):
            raise SolverError("non-finite energy", n + 1)
        rel = float(np.linalg.norm(d) / max(np.linalg.norm(x), 1.0))
        x_prev, x, F_x = x, x_new, F_new
        trace.energies.append(H_new)
        trace.step_sizes.append(alpha)
        trace.iterations_run = n + 1
        trace.final_rel_change = rel
        trace.prox_iterations = max(trace.prox_iterations, prox_its)
        if rel < config.rel_change_tol:
            trace.converged = True
            break
    return x, trace
