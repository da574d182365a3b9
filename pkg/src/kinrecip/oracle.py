"""Brute-force ground truth for the repeated games.

Strategies are deterministic finite automata observing the full joint action
of the previous round.  Discounted payoffs are computed by following the
play path, and subgame perfection is checked with the one-shot deviation
principle over every joint automaton state reachable under arbitrary play.
Payoffs come from :func:`kinrecip.games.inclusive_payoff` only, never from the
closed-form coefficients used by :mod:`kinrecip.spe`.

Contributions are treated as all-or-nothing.  For the public goods game this
loses nothing: payoffs are linear in a player's own contribution and any
partial contribution triggers the same punishment as a full defection.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .games import (
    Dominance,
    Family,
    GameSpec,
    Strategy,
    check_relatedness,
    dominant_action,
    inclusive_payoff,
    thresholds,
)
from . import spe

C, D = 1, 0
GAIN_TOL = 1e-9

Transition = Callable[[int, tuple], int]


@dataclass(frozen=True)
class StrategyAutomaton:
    """Deterministic strategy: ``actions[state]`` is 1 for C and 0 for D."""

    name: str
    actions: tuple[int, ...]
    transition: Transition
    start: int = 0

    @property
    def n_states(self) -> int:
        return len(self.actions)


def _stay(state, observed):
    return state


def _grim_step(state, observed):
    return 1 if state == 1 or D in observed else 0


ALLC = StrategyAutomaton("AllC", (C,), _stay)
ALLD = StrategyAutomaton("AllD", (D,), _stay)
# state 0 = cooperate, state 1 = punish (absorbing)
GRIM = StrategyAutomaton("GRIM", (C, D), _grim_step)

_BY_STRATEGY = {Strategy.ALLC: ALLC, Strategy.ALLD: ALLD, Strategy.GRIM: GRIM}


def automaton(strategy) -> StrategyAutomaton:
    if isinstance(strategy, StrategyAutomaton):
        return strategy
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    return _BY_STRATEGY[Strategy(strategy)]


def table_automaton(name: str, actions: Sequence[int], table: dict) -> StrategyAutomaton:
    """Automaton from an explicit ``{(state, joint_action): next_state}`` table."""
    lookup = dict(table)
    return StrategyAutomaton(name, tuple(actions), lambda s, obs: lookup[(s, tuple(obs))])


def _automata(spec: GameSpec, profile) -> list[StrategyAutomaton]:
    autos = [automaton(s) for s in profile]
    if len(autos) != spec.n:
        raise ValueError(f"need {spec.n} strategies, got {len(autos)}")
    return autos


def _play(autos, state) -> tuple[int, ...]:
    return tuple(a.actions[s] for a, s in zip(autos, state))


def _advance(autos, state, joint) -> tuple[int, ...]:
    return tuple(a.transition(s, joint) for a, s in zip(autos, state))


def _path_payoffs(spec, autos, r, steps=None):
    """Walk the play path; return per-round payoffs and the cycle start index."""
    cache: dict[tuple, np.ndarray] = {}
    state = tuple(a.start for a in autos)
    seen: dict[tuple, int] = {}
    rows = []
    t = 0
    while (steps is None and state not in seen) or (steps is not None and t < steps):
        seen.setdefault(state, t)
        joint = _play(autos, state)
        if joint not in cache:
            cache[joint] = inclusive_payoff(spec, joint, r)
        rows.append(cache[joint])
        state = _advance(autos, state, joint)
        t += 1
    return np.array(rows), seen.get(state)


def discounted_average_payoff(
    spec: GameSpec, profile, r: float, omega: float, method: str = "cycle"
) -> np.ndarray:
    """Normalised discounted payoff ``(1 - omega) * sum_t omega**(t-1) * u_t``.

    ``method="cycle"`` sums the finite prefix and the geometric tail of the
    eventually periodic play path exactly; ``method="truncate"`` steps the
    automata until ``omega**T < 1e-12``.
    """
    r = check_relatedness(r)
    if not 0.0 <= omega < 1.0:
        raise ValueError(f"omega must lie in [0, 1), got {omega}")
    autos = _automata(spec, profile)
    if method == "truncate":
        steps = 1 if omega == 0.0 else math.ceil(math.log(1e-12) / math.log(omega))
        u, _ = _path_payoffs(spec, autos, r, steps=steps)
        weights = omega ** np.arange(len(u))
        return (1.0 - omega) * weights @ u
    if method != "cycle":
        raise ValueError(f"unknown method {method!r}")
    u, k0 = _path_payoffs(spec, autos, r)
    weights = omega ** np.arange(len(u))
    prefix = weights[:k0] @ u[:k0]
    period = len(u) - k0
    tail = weights[k0:] @ u[k0:] / (1.0 - omega**period)
    return (1.0 - omega) * (prefix + tail)


@dataclass(frozen=True)
class DeviationWitness:
    state: tuple[int, ...]
    player: int
    action: int
    gain: float


@dataclass(frozen=True)
class DeviationResult:
    passed: bool
    witness: Optional[DeviationWitness] = None

    def __bool__(self) -> bool:
        return self.passed


class _ProfileGame:
    """Reachable joint states of an automaton profile and every one-shot deviation.

    The graph depends on neither ``r`` nor ``omega``; payoffs are attached per
    ``r`` and values are solved per ``omega``.
    """

    def __init__(self, spec: GameSpec, autos: Sequence[StrategyAutomaton]):
        self.spec = spec
        self.autos = list(autos)
        n = spec.n
        joints = list(itertools.product((D, C), repeat=n))
        start = tuple(a.start for a in self.autos)
        index = {start: 0}
        order = [start]
        frontier = [start]
        while frontier:
            nxt = []
            for state in frontier:
                for joint in joints:
                    succ = _advance(self.autos, state, joint)
                    if succ not in index:
                        index[succ] = len(order)
                        order.append(succ)
                        nxt.append(succ)
            frontier = nxt
        self.states = order
        S = len(order)
        self.play = np.array([_play(self.autos, s) for s in order])
        self.next = np.array(
            [index[_advance(self.autos, s, tuple(self.play[k]))] for k, s in enumerate(order)]
        )
        # deviation by player i at state k: flipped joint action and successor
        self.dev_joint = np.empty((S, n, n), dtype=int)
        self.dev_next = np.empty((S, n), dtype=int)
        for k, state in enumerate(order):
            for i in range(n):
                joint = self.play[k].copy()
                joint[i] = 1 - joint[i]
                self.dev_joint[k, i] = joint
                self.dev_next[k, i] = index[_advance(self.autos, state, tuple(joint))]
        self.r: Optional[float] = None

    def set_relatedness(self, r: float) -> None:
        cache: dict[tuple, np.ndarray] = {}

        def payoff(joint):
            key = tuple(int(x) for x in joint)
            if key not in cache:
                cache[key] = inclusive_payoff(self.spec, key, r)
            return cache[key]

        S, n = self.dev_next.shape
        self.u = np.array([payoff(j) for j in self.play])
        self.u_dev = np.array(
            [[payoff(self.dev_joint[k, i])[i] for i in range(n)] for k in range(S)]
        )
        self.r = r

    def values(self, omega: float) -> np.ndarray:
        S = len(self.states)
        P = np.zeros((S, S))
        P[np.arange(S), self.next] = 1.0
        return np.linalg.solve(np.eye(S) - omega * P, (1.0 - omega) * self.u)

    def gains(self, omega: float) -> np.ndarray:
        """Improvement from each one-shot deviation, shape ``(states, players)``."""
        V = self.values(omega)
        n = self.spec.n
        cont = V[self.dev_next, np.arange(n)]
        return (1.0 - omega) * self.u_dev + omega * cont - V

    def check(self, omega: float, players=None) -> DeviationResult:
        g = self.gains(omega)
        if players is not None:
            mask = np.zeros(g.shape[1], dtype=bool)
            mask[list(players)] = True
            g = np.where(mask, g, -np.inf)
        k, i = np.unravel_index(np.argmax(g), g.shape)
        if g[k, i] > GAIN_TOL:
            witness = DeviationWitness(
                self.states[k], int(i), int(self.dev_joint[k, i, i]), float(g[k, i])
            )
            return DeviationResult(False, witness)
        return DeviationResult(True)


def one_shot_deviation_check(
    spec: GameSpec, profile, r: float, omega: float, players=None
) -> DeviationResult:
    """Test subgame perfection of a deterministic automaton profile.

    Every joint state reachable under any history is visited, and each player
    (or only those in ``players``) tries the opposite action for one round
    before returning to its automaton.  Fails when some deviation gains more
    than ``1e-9``; the witness names the state, player and deviating action.
    """
    r = check_relatedness(r)
    if not 0.0 <= omega < 1.0:
        raise ValueError(f"omega must lie in [0, 1), got {omega}")
    game = _ProfileGame(spec, _automata(spec, profile))
    game.set_relatedness(r)
    return game.check(omega, players)


def grim_template(spec: GameSpec, r: float) -> tuple[Strategy, ...]:
    """AllC for players strictly above their threshold, GRIM for the rest."""
    return tuple(
        Strategy.ALLC if dominant_action(spec, i, r) is Dominance.COOPERATE else Strategy.GRIM
        for i in range(spec.n)
    )


def one_shot_deviation_search(
    spec: GameSpec,
    profile=None,
    r: float = 0.0,
    resolution: float = 1e-6,
    players=None,
) -> Optional[float]:
    """Bisect for the smallest omega at which the profile passes the deviation check.

    ``profile`` defaults to :func:`grim_template`.  Returns ``None`` when the
    check still fails at ``omega = 1 - 1e-9``.  Restricting ``players`` gives
    the critical omega of those players' constraints alone.
    """
    r = check_relatedness(r)
    if profile is None:
        profile = grim_template(spec, r)
    game = _ProfileGame(spec, _automata(spec, profile))
    game.set_relatedness(r)
    hi = 1.0 - 1e-9
    if not game.check(hi, players):
        return None
    if game.check(0.0, players):
        return 0.0
    lo = 0.0
    while hi - lo > resolution / 2:
        mid = 0.5 * (lo + hi)
        if game.check(mid, players):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class InvasionReport:
    r: float
    omega: float
    in_domain: bool
    spe_grim: bool
    alld_cannot_invade: tuple[bool, bool]
    grim_dominates_allc: tuple[bool, bool]

    @property
    def invasion_grim(self) -> bool:
        return all(self.alld_cannot_invade) and all(self.grim_dominates_allc)

    @property
    def agree(self) -> bool:
        return self.spe_grim == self.invasion_grim


def role_payoff_tables(spec: GameSpec, r: float, omega: float) -> np.ndarray:
    """Kin-weighted repeated-game payoffs, ``W[rank, own, partner]``.

    ``W[0, s, t]`` is the rank-1 player's own payoff plus ``r`` times its
    partner's when it plays ``s`` against a rank-2 partner playing ``t``;
    ``W[1]`` is the same from the rank-2 side.
    """
    W = np.empty((2, 3, 3))
    for s1, s2 in itertools.product(Strategy, repeat=2):
        p = discounted_average_payoff(spec, (s1, s2), r, omega)
        W[0, s1, s2] = p[0]
        W[1, s2, s1] = p[1]
    return W


def genotype_payoff_table(spec: GameSpec, r: float, omega: float) -> np.ndarray:
    """Role-averaged payoffs of two-locus genotypes, ``A[g1, g2, h1, h2]``.

    A ``(g1, g2)`` individual is rank 1 or rank 2 with probability 1/2 and
    meets an ``(h1, h2)`` partner in the complementary rank.
    """
    W = role_payoff_tables(spec, r, omega)
    return 0.5 * (W[0][:, None, None, :] + W[1][None, :, :, None])


def invasion_equivalence_check(
    spec: GameSpec, r: float, omega: float, tol: float = 1e-9
) -> InvasionReport:
    """Compare the SPE verdict on (GRIM, GRIM) with an invasion analysis.

    The invasion side works on the role-averaged genotype table: at each
    locus, an AllD mutant must not out-earn GRIM against a (GRIM, GRIM)
    resident, and GRIM must weakly dominate AllC against every partner.  Both
    comparisons are reported per locus.  Draws with a threshold at or above 1,
    or within ``tol`` of a threshold or of the critical omega, are flagged
    out of domain.
    """
    if spec.family is not Family.PD2:
        raise ValueError("invasion check is defined for the 2-person game only")
    r = check_relatedness(r)
    if np.max(thresholds(spec)) >= 1.0:
        false2 = (False, False)
        return InvasionReport(r, float(omega), False, False, false2, false2)
    report = spe.classify(spec, r, omega)
    spe_grim = all(s is Strategy.GRIM for s in report.profile)

    A = genotype_payoff_table(spec, r, omega)
    G, X, Y = Strategy.GRIM, Strategy.ALLD, Strategy.ALLC
    res = A[G, G, G, G]
    alld = (
        bool(res >= A[X, G, G, G] - tol),
        bool(res >= A[G, X, G, G] - tol),
    )
    allc = (
        bool(np.all(A[G, G] >= A[Y, G] - tol)),
        bool(np.all(A[G, G] >= A[G, Y] - tol)),
    )

    gammas = report.gammas
    near = any(abs(r - g) <= tol for g in gammas)
    if math.isfinite(report.omega_star) and report.omega_star > 0:
        near = near or abs(omega - report.omega_star) <= tol
    in_domain = max(gammas) < 1.0 and not near
    return InvasionReport(r, float(omega), in_domain, spe_grim, alld, allc)
