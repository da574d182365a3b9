"""Randomised agreement checks between the closed forms and the oracle.

Each check draws random games, skips draws outside the admissible domain
(some threshold at or above 1, or a draw sitting on a regime boundary), and
reports how many in-domain draws agree together with the worst discrepancy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .games import GameSpec, thresholds
from .oracle import invasion_equivalence_check, one_shot_deviation_search
from .spe import OutOfDomainError, classify, per_player_critical_omega_pdn, per_player_critical_omega_pgg

SEARCH_RESOLUTION = 1e-7
OMEGA_TOL = 1e-6


@dataclass
class PropertyResult:
    name: str
    checked: int = 0
    out_of_domain: int = 0
    failures: int = 0
    worst: float = 0.0
    examples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.checked > 0

    def record(self, ok: bool, discrepancy: float = 0.0, example=None) -> None:
        self.checked += 1
        self.worst = max(self.worst, discrepancy)
        if not ok:
            self.failures += 1
            if example is not None and len(self.examples) < 5:
                self.examples.append(example)

    def as_dict(self) -> dict:
        return {
            "property": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "out_of_domain": self.out_of_domain,
            "failures": self.failures,
            "worst_discrepancy": self.worst,
        }


def random_pd(rng: np.random.Generator, n: int, max_ratio: float = 0.95) -> GameSpec:
    b = rng.uniform(0.5, 4.0, n)
    c = b * rng.uniform(0.05, max_ratio, n)
    return GameSpec.pd2(b, c) if n == 2 else GameSpec.pdn(b, c)


def random_pgg(rng: np.random.Generator, n: int, max_ratio: float = 0.95) -> GameSpec:
    b = rng.uniform(0.5, 4.0, n)
    v = rng.dirichlet(np.ones(n))
    # the game itself rejects c/b >= 1, so PGG draws always stay in domain
    c = b * (v + (1.0 - v) * rng.uniform(0.05, min(max_ratio, 0.98), n))
    return GameSpec.pgg(b, c, v)


def stratified_r(rng: np.random.Generator, gammas: np.ndarray, margin: float = 1e-6) -> float:
    """Pick a regime uniformly, then ``r`` uniformly inside it (away from its edges)."""
    edges = np.concatenate(([0.0], np.sort(gammas), [1.0]))
    k = int(rng.integers(0, len(edges) - 1))
    lo, hi = edges[k], edges[k + 1]
    if hi - lo <= 4 * margin:
        return float(0.5 * (lo + hi))
    return float(rng.uniform(lo + margin, hi - margin))


def oracle_agreement(
    family: str,
    draws: int,
    rng: np.random.Generator,
    sizes=(2, 3, 4, 5),
    max_ratio: float = 0.95,
    tol: float = OMEGA_TOL,
) -> tuple[PropertyResult, PropertyResult]:
    """Closed-form per-player critical omega against per-player bisection.

    Returns the per-player comparison and the aggregate check that full
    cooperation is reported impossible exactly when the search finds nothing.
    """
    family = family.upper()
    make = random_pgg if family == "PGG" else random_pd
    closed_form = per_player_critical_omega_pgg if family == "PGG" else per_player_critical_omega_pdn
    per_player = PropertyResult(f"{family.lower()}-oracle-omega")
    impossible = PropertyResult(f"{family.lower()}-impossible-iff-not-found")
    for _ in range(draws):
        n = int(rng.choice(sizes))
        spec = make(rng, n, max_ratio)
        if family != "PGG" and n == 2:
            spec = GameSpec.pdn(spec.b, spec.c)
        gammas = thresholds(spec)
        r = stratified_r(rng, gammas)
        try:
            if np.max(gammas) >= 1.0:
                raise OutOfDomainError("threshold at or above one")
            closed = closed_form(spec, r)
        except OutOfDomainError:
            per_player.out_of_domain += 1
            impossible.out_of_domain += 1
            continue

        for i, w in enumerate(closed):
            found = one_shot_deviation_search(spec, r=r, resolution=SEARCH_RESOLUTION, players=[i])
            if w is None:
                # AllC players pass at any omega; a lone candidate never does
                expected: Optional[float] = 0.0 if r > gammas[i] else None
                ok = found == expected
                delta = 0.0 if ok else math.inf
            elif w >= 1.0:
                ok, delta = found is None, (0.0 if found is None else math.inf)
            else:
                delta = math.inf if found is None else abs(found - max(w, 0.0))
                ok = delta <= tol
            per_player.record(ok, delta, (n, r, i, w, found))

        aggregate = classify(spec, r, 0.5).omega_star
        found = one_shot_deviation_search(spec, r=r, resolution=SEARCH_RESOLUTION)
        not_found = found is None
        infeasible = math.isinf(aggregate) or aggregate >= 1.0
        impossible.record(not_found == infeasible, 0.0 if not_found == infeasible else 1.0, (n, r))
    return per_player, impossible


def invasion_agreement(
    draws: int, rng: np.random.Generator, max_ratio: float = 0.95, tol: float = 1e-9
) -> PropertyResult:
    """SPE verdict on (GRIM, GRIM) against the weak-dominance invasion verdict."""
    result = PropertyResult("pd2-invasion-equivalence")
    for _ in range(draws):
        spec = random_pd(rng, 2, max_ratio)
        r = float(rng.uniform(0.0, 1.0))
        omega = float(rng.uniform(0.0, 0.999))
        rep = invasion_equivalence_check(spec, r, omega, tol=tol)
        if not rep.in_domain:
            result.out_of_domain += 1
            continue
        result.record(rep.agree, 0.0 if rep.agree else 1.0, (tuple(spec.b), tuple(spec.c), r, omega))
    return result


def run_all(draws: int, seed, families=("pd2", "pdn", "pgg"), max_ratio: float = 0.95):
    """Run every requested suite from independent child streams of ``seed``."""
    streams = np.random.SeedSequence(seed).spawn(3)
    out: list[PropertyResult] = []
    if "pd2" in families:
        out.append(invasion_agreement(draws, np.random.default_rng(streams[0]), max_ratio))
    if "pdn" in families:
        out.extend(oracle_agreement("PDN", draws, np.random.default_rng(streams[1]), max_ratio=max_ratio))
    if "pgg" in families:
        out.extend(oracle_agreement("PGG", draws, np.random.default_rng(streams[2]), max_ratio=max_ratio))
    return out
