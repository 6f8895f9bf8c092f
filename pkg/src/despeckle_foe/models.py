"""Despeckling models: FoE prior plus one of the fidelity terms, ready for iPiano."""

from __future__ import annotations

import numpy as np

from . import data_fidelity as df
from .filter_bank import FilterBank
from .foe_prior import FoEPrior
from .ipiano import CompositeProblem, SolverConfig, ipiano_solve

__all__ = [
    "assemble_model",
    "despeckle",
    "preset_weights",
    "bank_weights",
    "LOOK_PRESETS",
    "NAMED_PRESETS",
    "SUBSTITUTE_LAMBDA_SCALE",
]


def assemble_model(spec: df.DataTermSpec, bank: FilterBank, f) -> CompositeProblem:
    """Bind prior, fidelity term and observation into a :class:`CompositeProblem`.

    ``nakagami_log`` and ``combined`` work on ``w = log u`` and start from
    ``log f``; ``idiv`` works on ``u`` and starts from ``f``. ``f`` is
    clamped to :data:`~despeckle_foe.data_fidelity.F_FLOOR` first.
    """
    f = df.clamp_observation(f)
    prior = FoEPrior(bank, f.shape)

    if spec.model == "idiv":
        lam = spec.lam
        return CompositeProblem(
            F=prior.energy,
            grad_F=prior.grad_u,
            G=lambda u: df.idiv_energy(u, f, lam),
            prox_G=lambda v, step: df.idiv_prox(v, f, step * lam),
            init=f.copy(),
        )

    if spec.model == "nakagami_log":
        lam = spec.lam
        G = lambda w: df.nakagami_energy(w, f, lam)
        prox = lambda v, step: df.nakagami_prox(v, f, step * lam)
    else:
        lam1, lam2 = spec.lam1, spec.lam2
        G = lambda w: df.combined_energy(w, f, lam1, lam2)
        prox = lambda v, step: df.combined_prox(v, f, step, lam1, lam2)
    return CompositeProblem(
        F=prior.energy_w,
        grad_F=prior.grad_w,
        G=G,
        prox_G=prox,
        init=np.log(f),
        to_image=np.exp,
    )


def despeckle(f, spec: df.DataTermSpec, bank: FilterBank, config: SolverConfig = SolverConfig()):
    """Restore amplitude image ``f``; returns ``(u, trace)``."""
    problem = assemble_model(spec, bank, f)
    x, trace = ipiano_solve(problem, config=config)
    return problem.to_image(x), trace


# (lam1, lam2) for the combined model, keyed by number of looks
LOOK_PRESETS = {
    8: (550.0, 0.02),
    3: (310.0, 0.008),
    1: (160.0, 0.004),
}
NAMED_PRESETS = {
    "real-sar-l5": (50.0, 0.15),
}


def preset_weights(looks=None, name=None):
    """Combined-model weights ``(lam1, lam2)`` for a look count or named preset."""
    if name is not None:
        try:
            return NAMED_PRESETS[name]
        except KeyError:
            raise KeyError(f"unknown preset {name!r}; known: {sorted(NAMED_PRESETS)}") from None
    try:
        return LOOK_PRESETS[int(looks)]
    except (KeyError, TypeError, ValueError):
        raise KeyError(
            f"no preset weights for L={looks}; known: {sorted(LOOK_PRESETS)}"
        ) from None


# The preset table was tuned for a learned 7x7 bank. The DCT substitute has
# unit-norm filters with weight 1 and regularises harder, so preset weights
# are multiplied by this factor when it is in use (calibrated on the bundled
# test images, see demos/tune_weights.py).
SUBSTITUTE_LAMBDA_SCALE = 4.0


def bank_weights(bank: FilterBank, looks=None, name=None):
    """Preset ``(lam1, lam2)`` adjusted for the bank that will be used."""
    lam1, lam2 = preset_weights(looks, name)
    if bank.source == "substitute":
        return lam1 * SUBSTITUTE_LAMBDA_SCALE, lam2 * SUBSTITUTE_LAMBDA_SCALE
    return lam1, lam2
