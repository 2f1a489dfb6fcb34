"""
Seeded low-discrepancy initial conditions on the energy level
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.stats import norm, qmc

from ..averaging.sigma import level_parametrize
from ..dynamics.trajectory import PhasePoint
from ..geometry.model import MagneticModel
from ..geometry.trig_poly import TWO_PI


@dataclass(frozen=True)
class InitialConditions:
    q: np.ndarray            # (K, n) in [0, 2pi)^n
    directions: np.ndarray   # (K, n) unit vectors
    p: np.ndarray            # (K, n) gauged momenta on {H~ = 1/2}

    def __len__(self) -> int:
        return len(self.q)

    def points(self) -> List[PhasePoint]:
        return [PhasePoint(q, p) for q, p in zip(self.q, self.p)]


def halton_directions(count: int, dim: int, seed: int) -> np.ndarray:
    """Points of T^n x S^{n-1} from a scrambled Halton sequence in dimension 2n"""
    sampler = qmc.Halton(d=2 * dim, scramble=True, seed=seed)
    return sampler.random(count)


def sample_initial_conditions(model: MagneticModel, count: int, seed: int) -> InitialConditions:
    n = model.dim
    u = halton_directions(count, n, seed)
    q = TWO_PI * u[:, :n]
    gaussian = norm.ppf(np.clip(u[:, n:], 1e-12, 1.0 - 1e-12))
    lengths = np.linalg.norm(gaussian, axis=1, keepdims=True)
    directions = np.where(lengths > 0, gaussian / np.where(lengths > 0, lengths, 1.0), np.eye(n)[0])
    level = level_parametrize(model, q, directions, "H_tilde")
    return InitialConditions(q, directions, level.p)
