"""Payoff arithmetic for the asymmetric PD and public goods games with kinship.

Three families are supported: the 2-person donation game (``PD2``), its
n-person "others only" generalisation (``PDN``) and the linear public goods
game with benefit shares (``PGG``).  Every function is pure.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

TOL = 1e-12


class Family(str, enum.Enum):
    PD2 = "PD2"
    PDN = "PDN"
    PGG = "PGG"


class Strategy(enum.IntEnum):
    """Repeated-game strategies; the integer codes index payoff tables."""

    ALLC = 0
    ALLD = 1
    GRIM = 2

    @property
    def label(self) -> str:
        return {0: "AllC", 1: "AllD", 2: "GRIM"}[int(self)]

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        key = text.strip().upper()
        if key not in cls.__members__:
            raise ValueError(f"unknown strategy {text!r}")
        return cls[key]


class Dominance(str, enum.Enum):
    DEFECT = "DefectDominant"
    COOPERATE = "CooperateDominant"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class GameSpec:
    """One game instance: family, benefits ``b``, costs ``c`` and shares ``v``.

    Use the :meth:`pd2`, :meth:`pdn` and :meth:`pgg` constructors rather than
    building the dataclass by hand; they fill ``n`` and default shares.
    """

    family: Family
    b: tuple[float, ...]
    c: tuple[float, ...]
    v: tuple[float, ...] = ()
    n: int = field(init=False)

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        b = tuple(float(x) for x in self.b)
        c = tuple(float(x) for x in self.c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        n = len(b)
        object.__setattr__(self, "n", n)
        if len(c) != n:
            raise ValueError(f"b has {n} entries but c has {len(c)}")
        if n < 2:
            raise ValueError("a game needs at least two players")
        if family is Family.PD2 and n != 2:
            raise ValueError("PD2 is a 2-person game")
        if min(b) <= 0 or min(c) <= 0:
            raise ValueError("benefits and costs must be positive")
        if family is Family.PGG:
            v = tuple(float(x) for x in self.v) if self.v else (1.0 / n,) * n
            if len(v) != n:
                raise ValueError(f"v has {len(v)} entries, expected {n}")
            if abs(sum(v) - 1.0) > TOL:
                raise ValueError(f"benefit shares must sum to 1, got {sum(v)!r}")
            for i, (vi, bi, ci) in enumerate(zip(v, b, c)):
                if not 0.0 <= vi < ci / bi < 1.0:
                    raise ValueError(
                        f"player {i}: need 0 <= v < c/b < 1, got v={vi}, c/b={ci / bi}"
                    )
            object.__setattr__(self, "v", v)
        else:
            object.__setattr__(self, "v", ())

    @classmethod
    def pd2(cls, b, c) -> "GameSpec":
        return cls(Family.PD2, tuple(b), tuple(c))

    @classmethod
    def pdn(cls, b, c) -> "GameSpec":
        return cls(Family.PDN, tuple(b), tuple(c))

    @classmethod
    def pgg(cls, b, c, v=None) -> "GameSpec":
        return cls(Family.PGG, tuple(b), tuple(c), tuple(v) if v is not None else ())

    @property
    def is_pd(self) -> bool:
        return self.family is not Family.PGG

    def arrays(self):
        """Return ``(b, c, v)`` as float arrays (``v`` is None for PD families)."""
        v = np.asarray(self.v) if self.family is Family.PGG else None
        return np.asarray(self.b), np.asarray(self.c), v


def check_relatedness(r: float) -> float:
    r = float(r)
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"relatedness must lie in [0, 1], got {r}")
    return r


def _profile(spec: GameSpec, profile) -> np.ndarray:
    x = np.asarray(profile, dtype=float)
    if x.shape != (spec.n,):
        raise ValueError(f"profile must have length {spec.n}, got shape {x.shape}")
    if spec.is_pd:
        if not np.all((x == 0.0) | (x == 1.0)):
            raise ValueError("PD actions must be 0 or 1")
    elif np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("PGG contributions must lie in [0, 1]")
    return x


def net_payoff(spec: GameSpec, profile) -> np.ndarray:
    """Direct (kin-free) payoff of every player for one round."""
    x = _profile(spec, profile)
    b, c, v = spec.arrays()
    given = b * x
    if spec.is_pd:
        received = (given.sum() - given) / (spec.n - 1)
        return received - c * x
    return (v * b - c) * x + v * (given.sum() - given)


def net_payoff_pdn(spec: GameSpec, profile) -> np.ndarray:
    if not spec.is_pd:
        raise ValueError("net_payoff_pdn needs a PD2 or PDN game")
    return net_payoff(spec, profile)


def total_payoff(spec: GameSpec, profile) -> float:
    x = _profile(spec, profile)
    b, c, _ = spec.arrays()
    return float(np.dot(b - c, x))


def inclusive_payoff(spec: GameSpec, profile, r: float) -> np.ndarray:
    """Own payoff plus ``r`` times the summed payoffs of all co-players."""
    r = check_relatedness(r)
    f = net_payoff(spec, profile)
    return f + r * (f.sum() - f)


def inclusive_payoff_expanded(spec: GameSpec, profile, r: float) -> np.ndarray:
    """Closed-form expansion of :func:`inclusive_payoff`, coefficient by coefficient.

    Kept separate so the two routes can be checked against each other.  For the
    PD families the kin coefficient on a co-player's action is
    ``(n-2)/(n-1) * b_j - c_j``; for the PGG it is ``(1 - v_i) * b_j - c_j``.
    """
    r = check_relatedness(r)
    x = _profile(spec, profile)
    b, c, v = spec.arrays()
    n = spec.n
    out = np.empty(n)
    for i in range(n):
        others = np.arange(n) != i
        if spec.is_pd:
            own = r * b[i] - c[i]
            direct = np.sum(b[others] * x[others]) / (n - 1)
            kin = r * np.sum(((n - 2) / (n - 1) * b[others] - c[others]) * x[others])
        else:
            own = v[i] * b[i] - c[i] + r * (1 - v[i]) * b[i]
            direct = v[i] * np.sum(b[others] * x[others])
            kin = r * np.sum(((1 - v[i]) * b[others] - c[others]) * x[others])
        out[i] = own * x[i] + direct + kin
    return out


def own_coefficient(spec: GameSpec, i: int, r: float) -> float:
    """Marginal inclusive payoff to player ``i`` of its own cooperation."""
    b, c, v = spec.arrays()
    if spec.is_pd:
        return r * b[i] - c[i]
    return v[i] * b[i] - c[i] + r * (1 - v[i]) * b[i]


def cross_coefficient(spec: GameSpec, i: int, j: int, r: float) -> float:
    """Marginal inclusive payoff to player ``i`` of player ``j`` cooperating (j != i)."""
    b, c, v = spec.arrays()
    n = spec.n
    if spec.is_pd:
        return b[j] / (n - 1) + r * ((n - 2) / (n - 1) * b[j] - c[j])
    return v[i] * b[j] + r * ((1 - v[i]) * b[j] - c[j])


def dominance_threshold(spec: GameSpec, i: int) -> float:
    """Relatedness above which cooperating is the single-round dominant action."""
    b, c, v = spec.arrays()
    if spec.is_pd:
        return float(c[i] / b[i])
    return float((c[i] / b[i] - v[i]) / (1 - v[i]))


def thresholds(spec: GameSpec) -> np.ndarray:
    return np.array([dominance_threshold(spec, i) for i in range(spec.n)])


def dominant_action(spec: GameSpec, i: int, r: float) -> Dominance:
    r = check_relatedness(r)
    gamma = dominance_threshold(spec, i)
    if abs(r - gamma) <= TOL:
        return Dominance.BOUNDARY
    return Dominance.COOPERATE if r > gamma else Dominance.DEFECT
