"""Order-by-order analysis of torsion units.

For a unit order k the proper powers u^d are themselves torsion units whose
admissible augmentation families were computed first (recursively).  Every
compatible choice of families for the maximal proper divisors gives one
case; each case is a constraint system for the augmentations of u itself.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from sympy import divisors

from .engine import AugmentationTuple, PowerProfile, SystemBuilder
from .solver import DEFAULT_BUDGET, SearchBudgetExceeded, SolutionSet, Unbounded, enumerate_solutions
from .tables import TableBundle, prime_set

__all__ = [
    "Status",
    "Family",
    "Case",
    "OrderReport",
    "PrimeGraph",
    "KCVerdict",
    "Analyzer",
    "candidate_orders",
    "solutions_for_order",
    "is_trivial",
    "prime_graph_of_group",
    "kc_orders",
    "kc_check",
    "analyze_orders",
    "DEFAULT_CASE_CAP",
]

DEFAULT_CASE_CAP = 10**6


class Status(str, Enum):
    ELIMINATED = "ELIMINATED"
    RATIONALLY_CONJUGATE = "RATIONALLY_CONJUGATE"
    OPEN = "OPEN"
    UNDECIDED_BY_METHOD = "UNDECIDED_BY_METHOD"

    def __str__(self):
        return self.value


@dataclass(frozen=True, slots=True)
class Family:
    """A full solution: augmentation tuples of u^(k/m) for every divisor m > 1 of k."""

    tuples: tuple[tuple[int, AugmentationTuple], ...]

    @property
    def order(self) -> int:
        return self.tuples[-1][0]

    def get(self, m: int) -> AugmentationTuple:
        for key, t in self.tuples:
            if key == m:
                return t
        raise KeyError(m)

    @property
    def top(self) -> AugmentationTuple:
        return self.tuples[-1][1]

    def as_dict(self) -> dict[int, AugmentationTuple]:
        return dict(self.tuples)


@dataclass(slots=True)
class Case:
    profile: PowerProfile
    solutions: SolutionSet


@dataclass
class OrderReport:
    order: int
    status: Status
    cases: list[Case] = field(default_factory=list)
    families: list[Family] = field(default_factory=list)
    tables_used: list[str] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)
    reason: str = ""
    elapsed_ms: int = 0

    @property
    def solutions(self) -> list[AugmentationTuple]:
        """Distinct tuples for u itself, in bundle class order."""
        seen = {}
        for fam in self.families:
            seen.setdefault(fam.top, None)
        return sorted(seen, key=lambda t: tuple(v for _, v in t.entries))


def is_trivial(family: Family | Iterable[AugmentationTuple]) -> bool:
    """Exactly one non-zero partial augmentation at every power level."""
    tuples = [t for _, t in family.tuples] if isinstance(family, Family) else list(family)
    return all(t.is_trivial() for t in tuples)


def candidate_orders(b: TableBundle) -> list[int]:
    return [d for d in divisors(b.exponent) if d > 1]


def _maximal_proper_divisors(k: int) -> list[int]:
    props = [d for d in divisors(k) if 1 < d < k]
    return [m for m in props if not any(o != m and o % m == 0 for o in props)]


class Analyzer:
    """Memoised per-order analysis for one bundle and one table selection."""

    def __init__(
        self,
        bundle: TableBundle,
        selection: str = "all",
        case_cap: int = DEFAULT_CASE_CAP,
        budget: int = DEFAULT_BUDGET,
        screen: bool = True,
    ):
        self.bundle = bundle
        self.screen = screen
        self.selection = selection
        self.case_cap = case_cap
        self.budget = budget
        self._memo: dict[int, OrderReport] = {}
        self._lock = threading.RLock()

    def report(self, k: int) -> OrderReport:
        with self._lock:
            if k not in self._memo:
                self._memo[k] = self._compute(k)
            return self._memo[k]

    def seed(self, reports: Iterable[OrderReport]) -> None:
        with self._lock:
            for r in reports:
                self._memo.setdefault(r.order, r)

    def _compute(self, k: int) -> OrderReport:
        start = time.perf_counter()
        rep = self._analyse(k)
        rep.elapsed_ms = int((time.perf_counter() - start) * 1000)
        return rep

    def _analyse(self, k: int) -> OrderReport:
        if self.bundle.exponent % k:
            return OrderReport(k, Status.ELIMINATED, reason=f"{k} does not divide the exponent {self.bundle.exponent}")
        proper = [d for d in divisors(k) if 1 < d < k]
        for m in proper:
            sub = self.report(m)
            if sub.status is Status.ELIMINATED:
                return OrderReport(k, Status.ELIMINATED, reason=f"no units of order {m}")
        for m in proper:
            sub = self.report(m)
            if sub.status is Status.UNDECIDED_BY_METHOD:
                return OrderReport(k, Status.UNDECIDED_BY_METHOD, reason=f"order {m} undecided")

        builder = SystemBuilder(k, self.bundle, self.selection)
        rep = OrderReport(k, Status.OPEN, tables_used=[t.key for t in builder.tables], notices=list(builder.notices))

        try:
            profiles = self._profiles(k, builder)
        except SearchBudgetExceeded as exc:
            rep.status = Status.UNDECIDED_BY_METHOD
            rep.reason = str(exc)
            return rep

        empty = SolutionSet(k, builder.unknowns, ())
        solved: dict[tuple, SolutionSet] = {}
        for profile, dead in profiles:
            if dead:
                rep.cases.append(Case(profile, empty))
                continue
            system = builder.instantiate(profile)
            key = tuple((f.constant, f.coeffs, f.degree) for f in system.forms)
            sols = solved.get(key)
            if sols is None:
                try:
                    sols = enumerate_solutions(system, budget=self.budget)
                except (Unbounded, SearchBudgetExceeded) as exc:
                    rep.status = Status.UNDECIDED_BY_METHOD
                    rep.reason = str(exc)
                    return rep
                solved[key] = sols
            rep.cases.append(Case(profile, sols))
            for sol in sols:
                rep.families.append(Family(profile.tuples + ((k, sol),)))

        if not rep.families:
            rep.status = Status.ELIMINATED
        elif all(is_trivial(f) for f in rep.families):
            rep.status = Status.RATIONALLY_CONJUGATE
        else:
            rep.status = Status.OPEN
        return rep

    def _screen(self, builder: SystemBuilder, m: int, families: Sequence[Family]) -> list[bool]:
        """Flag families of order m that already contradict the rows they alone determine.

        A row whose constant depends only on levels fixed by the family is the
        same in every case using that family; if those rows admit no solution,
        neither does any such case.
        """
        if not self.screen:
            return [False] * len(families)
        levels = {d for d in divisors(m) if d > 1}
        rows = [i for i, dep in enumerate(builder.dependence) if dep <= levels]
        if not rows:
            return [False] * len(families)
        verdicts: dict[tuple, bool] = {}
        out = []
        for fam in families:
            consts = builder.constants(fam.as_dict())
            key = tuple(consts[i] for i in rows)
            dead = verdicts.get(key)
            if dead is None:
                system = builder.instantiate(fam.as_dict(), rows=rows)
                try:
                    dead = not enumerate_solutions(system, budget=self.budget).solutions
                except (Unbounded, SearchBudgetExceeded):
                    dead = False
                verdicts[key] = dead
            out.append(dead)
        return out

    def _profiles(self, k: int, builder: SystemBuilder) -> list[tuple[PowerProfile, bool]]:
        maximal = _maximal_proper_divisors(k)
        pools = [self.report(m).families for m in maximal]
        dead = [self._screen(builder, m, pool) for m, pool in zip(maximal, pools)]
        out: list[tuple[PowerProfile, bool]] = []

        def walk(i: int, merged: dict[int, AugmentationTuple], is_dead: bool):
            if i == len(pools):
                if len(out) >= self.case_cap:
                    raise SearchBudgetExceeded(f"more than {self.case_cap} power-profile cases for order {k}")
                out.append((PowerProfile.of(k, merged), is_dead))
                return
            for fam, d in zip(pools[i], dead[i]):
                if all(merged.get(m, t) == t for m, t in fam.tuples):
                    walk(i + 1, {**merged, **fam.as_dict()}, is_dead or d)

        walk(0, {}, False)
        return out


def solutions_for_order(
    k: int,
    b: TableBundle,
    selection: str = "all",
    case_cap: int = DEFAULT_CASE_CAP,
) -> OrderReport:
    return Analyzer(b, selection, case_cap).report(k)


def _worker(args):
    bundle, selection, case_cap, budget, screen, k = args
    an = Analyzer(bundle, selection, case_cap, budget, screen)
    an.report(k)
    return list(an._memo.values())


def analyze_orders(analyzer: Analyzer, orders: Sequence[int], jobs: int = 1) -> list[OrderReport]:
    """Reports for ``orders`` (ascending); ``jobs`` > 1 spreads orders over processes."""
    orders = sorted(set(orders))
    if jobs > 1 and len(orders) > 1:
        args = [(analyzer.bundle, analyzer.selection, analyzer.case_cap, analyzer.budget, analyzer.screen, k) for k in orders]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for reports in pool.map(_worker, args):
                analyzer.seed(reports)
    return [analyzer.report(k) for k in orders]


# -- prime graphs ----------------------------------------------------------------


@dataclass(frozen=True)
class PrimeGraph:
    vertices: frozenset[int]
    edges: frozenset[frozenset[int]]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.edges)


def prime_graph_of_group(b: TableBundle) -> PrimeGraph:
    primes = prime_set(b)
    edges = set()
    for p, q in combinations(sorted(primes), 2):
        if any(c.element_order % (p * q) == 0 for c in b.classes):
            edges.add(frozenset((p, q)))
    return PrimeGraph(frozenset(primes), frozenset(edges))


def kc_orders(b: TableBundle) -> list[int]:
    """Orders pq whose absence from V(ZG) the prime graph condition requires."""
    g = prime_graph_of_group(b)
    return sorted(p * q for p, q in combinations(sorted(g.vertices), 2) if frozenset((p, q)) not in g.edges)


@dataclass(frozen=True)
class KCVerdict:
    holds: bool
    checked: tuple[tuple[int, Status], ...]
    witnesses: tuple[int, ...]


def kc_check(b: TableBundle, reports: Mapping[int, OrderReport] | Iterable[OrderReport]) -> KCVerdict:
    if not isinstance(reports, Mapping):
        reports = {r.order: r for r in reports}
    needed = kc_orders(b)
    missing = [k for k in needed if k not in reports]
    if missing:
        raise ValueError(f"no reports for orders {missing}")
    checked = tuple((k, reports[k].status) for k in needed)
    witnesses = tuple(k for k, s in checked if s is not Status.ELIMINATED)
    return KCVerdict(not witnesses, checked, witnesses)
