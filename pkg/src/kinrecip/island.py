"""Wright's island model for the asymmetric repeated donation game.

``G`` islands hold ``N`` haploid individuals each.  A genotype carries two
loci: the strategy used when drawn as rank 1 (cost ``c1``, gives ``b1``) and
the strategy used as rank 2.  Each generation, individuals pair up at random
within their island, play the repeated game once, and the next generation is
drawn by fecundity ``exp(lambda * payoff)``.

Two migration schemes are available.  ``"backward"`` (the default) fixes the
immigrant share: each slot takes a parent from home with probability
``1 - d`` and from a uniformly chosen other island otherwise, the parent being
drawn within that island in proportion to fecundity.  Every island therefore
exports ``N`` offspring on average and competition stays local even at
``d = 1``.  ``"pool"`` lets every adult release offspring in proportion to its
fecundity; a fraction ``d`` scatters uniformly over the other islands and each
island's ``N`` slots are then filled at random from the offspring present
there, so productive islands export more.
Each offspring locus then mutates with probability ``mu``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .games import Strategy

N_STRATEGIES = 3


def relatedness_from_dispersal(d: float, N: int) -> float:
    """Probability that two islanders are identical by descent (infinite-island limit)."""
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"dispersal must lie in [0, 1], got {d}")
    if N < 1:
        raise ValueError("island size must be positive")
    stay = (1.0 - d) ** 2
    return stay / (N - (N - 1) * stay)


def dispersal_from_relatedness(r: float, N: int) -> float:
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"relatedness must lie in [0, 1], got {r}")
    if N < 1:
        raise ValueError("island size must be positive")
    return 1.0 - math.sqrt(r * N / (1.0 + (N - 1) * r))


@dataclass(frozen=True)
class SimConfig:
    G: int = 200
    N: int = 10
    omega: float = 0.9
    b1: float = 3.0
    b2: float = 3.0
    c1: float = 0.5
    c2: float = 1.0
    lam: float = 1.0
    d: float = 1.0
    mu: float = 0.0
    T: int = 10_000
    runs: int = 100
    seed: int = 0
    # None draws every locus uniformly; otherwise (AllC, AllD, GRIM) frequencies
    init: Optional[tuple[float, float, float]] = None
    report_window: int = 100
    mutate_to_other: bool = False
    sampled_rounds: bool = False
    migration: str = "backward"

    def __post_init__(self):
        if self.init is not None:
            object.__setattr__(self, "init", tuple(float(x) for x in self.init))
        self.validate()

    def validate(self) -> None:
        if self.G < 1 or self.N < 2:
            raise ValueError("need at least one island of two individuals")
        if self.N % 2:
            raise ValueError(f"island size must be even to form pairs, got N={self.N}")
        if not 0.0 <= self.d <= 1.0 or not 0.0 <= self.mu <= 1.0:
            raise ValueError("d and mu must lie in [0, 1]")
        if self.migration not in ("pool", "backward"):
            raise ValueError(f"migration must be 'pool' or 'backward', got {self.migration!r}")
        if self.G == 1 and self.d > 0.0:
            raise ValueError("dispersal needs at least two islands")
        if not 0.0 <= self.omega < 1.0:
            raise ValueError(f"omega must lie in [0, 1), got {self.omega}")
        if min(self.b1, self.b2, self.c1, self.c2) <= 0:
            raise ValueError("benefits and costs must be positive")
        if self.T < 1 or self.runs < 1:
            raise ValueError("T and runs must be positive")
        if not 1 <= self.report_window <= self.T:
            raise ValueError("report_window must lie in [1, T]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.init is not None:
            p = np.asarray(self.init)
            if p.shape != (3,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("init must be three non-negative frequencies summing to 1")

    @property
    def r(self) -> float:
        return relatedness_from_dispersal(self.d, self.N)


def _round_tables(cfg: SimConfig):
    """Actions in round 1 and in every later round, indexed ``[rank, s1, s2]``."""
    first = np.empty((2, 3, 3))
    later = np.empty((2, 3, 3))
    opening = {Strategy.ALLC: 1.0, Strategy.ALLD: 0.0, Strategy.GRIM: 1.0}
    for s1 in Strategy:
        for s2 in Strategy:
            x1, x2 = opening[s1], opening[s2]
            first[:, s1, s2] = x1, x2

            def after(s, partner_opening):
                if s is Strategy.GRIM:
                    return partner_opening
                return opening[s]

            later[:, s1, s2] = after(s1, x2), after(s2, x1)
    return first, later


def _payoffs_from_actions(x, cfg: SimConfig):
    x1, x2 = x
    return cfg.b2 * x2 - cfg.c1 * x1, cfg.b1 * x1 - cfg.c2 * x2, 0.5 * (x1 + x2)


def pair_tables(cfg: SimConfig) -> np.ndarray:
    """Expected discounted-average payoffs, ``T[k, s1, s2]`` for k = payoff1, payoff2, coop."""
    first, later = _round_tables(cfg)
    w = cfg.omega
    return (1 - w) * np.array(_payoffs_from_actions(first, cfg)) + w * np.array(
        _payoffs_from_actions(later, cfg)
    )


def pair_payoff(s1, s2, cfg: SimConfig) -> tuple[float, float, float]:
    """Rank-1 payoff, rank-2 payoff and cooperation rate of one repeated game.

    Payoffs are direct (no kin weighting) and normalised by ``1 - omega``.
    """
    t = pair_tables(cfg)
    i, j = (Strategy.parse(s) if isinstance(s, str) else Strategy(s) for s in (s1, s2))
    return float(t[0, i, j]), float(t[1, i, j]), float(t[2, i, j])


@dataclass
class Population:
    genotypes: np.ndarray  # (G, N, 2) strategy codes; [..., 0] is the rank-1 locus
    rng: np.random.Generator
    generation: int = 0

    @classmethod
    def initial(cls, cfg: SimConfig, rng: np.random.Generator) -> "Population":
        shape = (cfg.G, cfg.N, 2)
        if cfg.init is None:
            geno = rng.integers(0, N_STRATEGIES, size=shape, dtype=np.int8)
        else:
            geno = rng.choice(N_STRATEGIES, size=shape, p=cfg.init).astype(np.int8)
        return cls(geno, rng)

    def frequencies(self) -> np.ndarray:
        """Strategy frequencies per rank locus, shape ``(2, 3)``."""
        flat = self.genotypes.reshape(-1, 2)
        counts = np.stack([np.bincount(flat[:, k], minlength=N_STRATEGIES) for k in (0, 1)])
        return counts / flat.shape[0]


class _Stepper:
    """Per-config constants reused by every generation of a replicate."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        G, N = cfg.G, cfg.N
        self.rows = np.arange(G)[:, None]
        self.slots = np.broadcast_to(np.arange(N), (G, N))
        self.tables = pair_tables(cfg)
        first, later = _round_tables(cfg)
        self.first = np.array(_payoffs_from_actions(first, cfg))
        self.later = np.array(_payoffs_from_actions(later, cfg))

    def play(self, geno, rng):
        """Pair up, play, and return per-individual payoffs and the mean cooperation rate."""
        cfg = self.cfg
        perm = rng.permuted(self.slots, axis=1)
        # position within a uniformly random permutation settles rank by a fair coin
        a, b = perm[:, 0::2], perm[:, 1::2]
        s1 = geno[self.rows, a, 0]
        s2 = geno[self.rows, b, 1]
        if cfg.sampled_rounds:
            extra = rng.geometric(1.0 - cfg.omega, size=s1.shape) - 1
            per_game = (1.0 - cfg.omega) * (
                self.first[:, s1, s2] + extra * self.later[:, s1, s2]
            )
            p1, p2, coop = per_game
        else:
            p1, p2, coop = self.tables[:, s1, s2]
        pay = np.empty(geno.shape[:2])
        pay[self.rows, a] = p1
        pay[self.rows, b] = p2
        return pay, float(coop.mean())

    def reproduce(self, geno, pay, rng):
        cfg = self.cfg
        fit = np.exp(cfg.lam * pay)
        if cfg.migration == "pool":
            parent = self._pool_parents(fit, rng)
        else:
            parent = self._backward_parents(fit, rng)
        child = geno.reshape(-1, 2)[parent]
        if cfg.mu > 0.0:
            hit = rng.random(child.shape) < cfg.mu
            k = int(hit.sum())
            if k:
                if cfg.mutate_to_other:
                    child[hit] = (child[hit] + rng.integers(1, N_STRATEGIES, size=k)) % 3
                else:
                    child[hit] = rng.integers(0, N_STRATEGIES, size=k)
        return child

    def _home_parents(self, fit, src, rng):
        """Parent index within island ``src`` (per slot) drawn in proportion to fitness."""
        G, N = fit.shape
        cum = np.cumsum(fit, axis=1)
        cum /= cum[:, -1:]
        cum += np.arange(G)[:, None]
        target = src + rng.random((G, N))
        parent = np.searchsorted(cum.ravel(), target.ravel(), side="right").reshape(G, N)
        lo = src * N
        return np.clip(parent, lo, lo + N - 1)

    def _backward_parents(self, fit, rng):
        cfg = self.cfg
        G, N = fit.shape
        src = np.broadcast_to(np.arange(G)[:, None], (G, N))
        if cfg.d > 0.0:
            away = rng.random((G, N)) < cfg.d
            other = (src + rng.integers(1, G, size=(G, N))) % G
            src = np.where(away, other, src)
        return self._home_parents(fit, src, rng)

    def _pool_parents(self, fit, rng):
        cfg = self.cfg
        G, N = fit.shape
        home_src = np.broadcast_to(np.arange(G)[:, None], (G, N))
        parent = self._home_parents(fit, home_src, rng)
        if cfg.d == 0.0:
            return parent
        cum = np.cumsum(fit.ravel())
        end = cum[N - 1 :: N]
        start = np.concatenate(([0.0], end[:-1]))
        own = end - start
        elsewhere = start + (cum[-1] - end)
        home_weight = (1.0 - cfg.d) * own
        immigrant_weight = cfg.d / (G - 1) * elsewhere
        p_home = home_weight / (home_weight + immigrant_weight)
        away = rng.random((G, N)) >= p_home[:, None]
        # fecundity-weighted position among all adults outside the slot's island
        t = rng.random((G, N)) * elsewhere[:, None]
        pos = np.where(t < start[:, None], t, t - start[:, None] + end[:, None])
        migrant = np.minimum(np.searchsorted(cum, pos.ravel(), side="right"), G * N - 1)
        return np.where(away, migrant.reshape(G, N), parent)


def step_generation(pop: Population, cfg: SimConfig) -> Population:
    """Advance one non-overlapping generation; the population's RNG is consumed."""
    stepper = _Stepper(cfg)
    pay, _ = stepper.play(pop.genotypes, pop.rng)
    child = stepper.reproduce(pop.genotypes, pay, pop.rng)
    return Population(child, pop.rng, pop.generation + 1)


def run_replicate(cfg: SimConfig, seed) -> tuple[np.ndarray, np.ndarray]:
    """One run: per-generation frequencies ``(T, 2, 3)`` and cooperation rates ``(T,)``."""
    rng = np.random.default_rng(seed)
    pop = Population.initial(cfg, rng)
    stepper = _Stepper(cfg)
    freqs = np.empty((cfg.T, 2, N_STRATEGIES))
    coop = np.empty(cfg.T)
    geno = pop.genotypes
    for t in range(cfg.T):
        flat = geno.reshape(-1, 2)
        freqs[t, 0] = np.bincount(flat[:, 0], minlength=N_STRATEGIES)
        freqs[t, 1] = np.bincount(flat[:, 1], minlength=N_STRATEGIES)
        pay, coop[t] = stepper.play(geno, rng)
        geno = stepper.reproduce(geno, pay, rng)
    freqs /= cfg.G * cfg.N
    return freqs, coop


@dataclass
class SimMetrics:
    config: SimConfig
    freqs: np.ndarray  # (runs, T, 2, 3)
    coop: np.ndarray  # (runs, T)
    window_freqs: np.ndarray = field(init=False)  # (runs, 2, 3)
    window_coop: np.ndarray = field(init=False)  # (runs,)

    def __post_init__(self):
        w = self.config.report_window
        self.window_freqs = self.freqs[:, -w:].mean(axis=1)
        self.window_coop = self.coop[:, -w:].mean(axis=1)

    @property
    def runs(self) -> int:
        return self.coop.shape[0]

    @property
    def mean_freqs(self) -> np.ndarray:
        return self.window_freqs.mean(axis=0)

    @property
    def se_freqs(self) -> np.ndarray:
        return _stderr(self.window_freqs)

    @property
    def cooperation_rate(self) -> float:
        return float(self.window_coop.mean())

    @property
    def cooperation_se(self) -> float:
        return float(_stderr(self.window_coop))


def _stderr(x: np.ndarray):
    if x.shape[0] < 2:
        return np.zeros(x.shape[1:]) if x.ndim > 1 else 0.0
    return x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])


def replicate_seeds(seed, runs: int) -> list[np.random.SeedSequence]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(runs)


def run(cfg: SimConfig, threads: int = 1, seed=None) -> SimMetrics:
    """Run ``cfg.runs`` independent replicates and aggregate them in run order.

    ``seed`` overrides ``cfg.seed`` and may be a :class:`numpy.random.SeedSequence`;
    each replicate gets its own spawned child stream, so the result does not
    depend on ``threads``.
    """
    seeds = replicate_seeds(cfg.seed if seed is None else seed, cfg.runs)
    if threads > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_replicate, [cfg] * cfg.runs, seeds))
    else:
        results = [run_replicate(cfg, s) for s in seeds]
    freqs = np.stack([f for f, _ in results])
    coop = np.stack([c for _, c in results])
    return SimMetrics(cfg, freqs, coop)


def run_grid(
    cfg: SimConfig, dispersals: Sequence[float], threads: int = 1
) -> list[SimMetrics]:
    """One :func:`run` per dispersal rate; grid point ``k`` uses child ``k`` of the seed."""
    points = np.random.SeedSequence(cfg.seed).spawn(len(dispersals))
    return [run(replace(cfg, d=float(d)), threads, seed=s) for d, s in zip(dispersals, points)]
