"""Most-cooperative subgame perfect equilibria across the relatedness axis.

Players for whom cooperation is single-round dominant play AllC; everyone
else plays GRIM when full cooperation can be sustained and AllD otherwise.
A GRIM player ``i`` keeps cooperating iff its one-round deviation gain is
covered by the discounted loss of every other GRIM player's punishment::

    omega >= gain_i / sum_{j in GRIM, j != i} loss_ij

where ``gain_i`` is minus the own-action coefficient of the inclusive payoff
and ``loss_ij`` the coefficient on ``j``'s action.  AllC players never punish.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .games import (
    TOL,
    Dominance,
    Family,
    GameSpec,
    Strategy,
    check_relatedness,
    cross_coefficient,
    dominant_action,
    inclusive_payoff,
    own_coefficient,
    thresholds,
)

FULL_COOP_IMPOSSIBLE = math.inf


class OutOfDomainError(ValueError):
    """Raised when a punisher's loss is not positive (some threshold is >= 1)."""


class Regime(str, enum.Enum):
    LOW = "Low"
    INTERMEDIATE = "Intermediate"
    INTERMEDIATE_IMPOSSIBLE = "IntermediateImpossible"
    HIGH = "High"


@dataclass(frozen=True)
class SpeReport:
    r: float
    omega: float
    gammas: tuple[float, ...]
    m: int
    per_player_omega_star: tuple[Optional[float], ...]
    omega_star: float
    profile: tuple[Strategy, ...]
    payoffs: tuple[float, ...]
    regime: Regime

    @property
    def full_cooperation(self) -> bool:
        return all(s is not Strategy.ALLD for s in self.profile)


def cooperator_mask(spec: GameSpec, r: float) -> np.ndarray:
    """Players that play AllC; a player exactly at its threshold counts as one."""
    return np.array(
        [dominant_action(spec, i, r) is not Dominance.DEFECT for i in range(spec.n)]
    )


def _critical_omegas(spec: GameSpec, r: float, allc: np.ndarray) -> list[Optional[float]]:
    grim = [j for j in range(spec.n) if not allc[j]]
    out: list[Optional[float]] = [None] * spec.n
    for i in grim:
        punishers = [j for j in grim if j != i]
        if not punishers:
            continue
        losses = [cross_coefficient(spec, i, j, r) for j in punishers]
        for j, loss in zip(punishers, losses):
            if loss <= 0.0:
                raise OutOfDomainError(
                    f"punishment by player {j} does not hurt player {i} "
                    f"(loss {loss:.6g} at r={r}); parameters outside the admissible domain"
                )
        out[i] = float(-own_coefficient(spec, i, r) / math.fsum(losses))
    return out


def _per_player(spec: GameSpec, r: float) -> list[Optional[float]]:
    r = check_relatedness(r)
    gammas = thresholds(spec)
    return _critical_omegas(spec, r, r > gammas + TOL)


def per_player_critical_omega_pdn(spec: GameSpec, r: float) -> list[Optional[float]]:
    """Critical continuation probability of each GRIM candidate (``r <= gamma_i``).

    ``None`` marks an AllC player or a lone GRIM candidate with nobody left to
    punish it, for whom full cooperation is out of reach.
    """
    if not spec.is_pd:
        raise ValueError("expected a PD2 or PDN game")
    return _per_player(spec, r)


def per_player_critical_omega_pgg(spec: GameSpec, r: float) -> list[Optional[float]]:
    if spec.family is not Family.PGG:
        raise ValueError("expected a PGG game")
    return _per_player(spec, r)


def critical_omega_pd2(spec: GameSpec, r: float) -> float:
    """Smallest omega sustaining mutual cooperation in the 2-person game.

    Returns ``inf`` (:data:`FULL_COOP_IMPOSSIBLE`) between the two thresholds
    and ``0.0`` once both players cooperate unconditionally.
    """
    if spec.family is not Family.PD2:
        raise ValueError("expected a PD2 game")
    r = check_relatedness(r)
    allc = cooperator_mask(spec, r)
    m = int(allc.sum())
    if m == 2:
        return 0.0
    if m == 1:
        return FULL_COOP_IMPOSSIBLE
    b, c, _ = spec.arrays()
    return float(max((c[0] - r * b[0]) / (b[1] - r * c[1]), (c[1] - r * b[1]) / (b[0] - r * c[0])))


def _regime(m: int, n: int) -> Regime:
    if m == 0:
        return Regime.LOW
    if m == n:
        return Regime.HIGH
    if m == n - 1:
        return Regime.INTERMEDIATE_IMPOSSIBLE
    return Regime.INTERMEDIATE


def classify(spec: GameSpec, r: float, omega: float) -> SpeReport:
    r = check_relatedness(r)
    omega = float(omega)
    if not 0.0 <= omega < 1.0:
        raise ValueError(f"omega must lie in [0, 1), got {omega}")
    n = spec.n
    allc = cooperator_mask(spec, r)
    m = int(allc.sum())
    per_player = _critical_omegas(spec, r, allc)
    if m == n:
        omega_star = 0.0
    elif m == n - 1:
        omega_star = FULL_COOP_IMPOSSIBLE
    else:
        omega_star = max(w for w in per_player if w is not None)

    sustained = omega >= omega_star
    rest = Strategy.GRIM if sustained else Strategy.ALLD
    profile = tuple(Strategy.ALLC if allc[i] else rest for i in range(n))
    actions = np.ones(n) if sustained else allc.astype(float)
    payoffs = inclusive_payoff(spec, actions, r)
    return SpeReport(
        r=r,
        omega=omega,
        gammas=tuple(float(g) for g in thresholds(spec)),
        m=m,
        per_player_omega_star=tuple(per_player),
        omega_star=float(omega_star),
        profile=profile,
        payoffs=tuple(float(p) for p in payoffs),
        regime=_regime(m, n),
    )


def sweep(spec: GameSpec, omega: float, r_grid: Sequence[float]) -> list[SpeReport]:
    grid = np.asarray(r_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("r grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("r grid must be strictly increasing")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ValueError("r grid must lie within [0, 1]")
    return [classify(spec, float(r), omega) for r in grid]
