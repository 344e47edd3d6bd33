"""Exact enumeration of the integer points of a constraint system.

The equality sum(nu) = 1 is used to eliminate the last unknown, leaving f free
integer coordinates y.  Every form then reads ``a . y + b`` and has to lie in
[0, k * degree] and be divisible by k.  Forms whose coefficient vectors are
parallel constrain the same integer ``t = dir . y`` (dir primitive), so they
are merged into one interval plus one congruence for t.

The interval relaxation is projected onto each unknown by Fourier-Motzkin
elimination, giving the search box.  The search itself is a depth-first walk
over the free coordinates (narrowest first); the last coordinate is never
looped over blindly but solved from the merged congruences and intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, gcd, lcm
from typing import Mapping, Sequence

from .engine import AugmentationTuple, ConstraintSystem

__all__ = [
    "Unbounded",
    "SearchBudgetExceeded",
    "Box",
    "SolutionSet",
    "derive_box",
    "enumerate_solutions",
    "check_solution",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 5_000_000
FM_ROW_LIMIT = 5_000_000


class Unbounded(Exception):
    def __init__(self, unknowns: Sequence[str]):
        super().__init__(f"relaxation does not bound {', '.join(unknowns)}")
        self.unknowns = list(unknowns)


class SearchBudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Box:
    bounds: tuple[tuple[str, int, int], ...]
    empty: bool = False

    def __getitem__(self, name: str) -> tuple[int, int]:
        for c, lo, hi in self.bounds:
            if c == name:
                return lo, hi
        raise KeyError(name)

    @property
    def volume(self) -> int:
        if self.empty:
            return 0
        v = 1
        for _, lo, hi in self.bounds:
            v *= hi - lo + 1
        return v

    def enlarged(self, delta: int) -> "Box":
        return Box(tuple((c, lo - delta, hi + delta) for c, lo, hi in self.bounds), self.empty)


@dataclass(frozen=True)
class SolutionSet:
    order: int
    unknowns: tuple[str, ...]
    solutions: tuple[AugmentationTuple, ...]

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def as_vectors(self) -> list[tuple[int, ...]]:
        return [tuple(s[c] for c in self.unknowns) for s in self.solutions]


def check_solution(system: ConstraintSystem, nu: Mapping[str, int]) -> bool:
    """Direct evaluation of every form; independent of the search's bookkeeping."""
    return system.satisfied_by(nu)


# -- congruence helpers ----------------------------------------------------------


def _merge(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int] | None:
    g = gcd(m1, m2)
    if (r2 - r1) % g:
        return None
    if m1 == 1:
        return r2 % m2, m2
    if m2 == 1:
        return r1 % m1, m1
    m2g = m2 // g
    k = ((r2 - r1) // g * pow(m1 // g, -1, m2g)) % m2g if m2g > 1 else 0
    m = lcm(m1, m2)
    return (r1 + m1 * k) % m, m


def _solve_linear(c: int, rhs: int, m: int) -> tuple[int, int] | None:
    """Solutions of c*x = rhs (mod m) as x = r (mod m')."""
    if m == 1:
        return 0, 1
    g = gcd(c, m)
    if rhs % g:
        return None
    mg = m // g
    if mg == 1:
        return 0, 1
    return (rhs // g * pow(c // g, -1, mg)) % mg, mg


@dataclass
class _Dir:
    vec: tuple[int, ...]
    lo: int | None = None
    hi: int | None = None
    res: int = 0
    mod: int = 1


class _Reduced:
    """The system in free coordinates with forms merged by direction."""

    def __init__(self, system: ConstraintSystem, eliminate: int | None = None):
        self.system = system
        names = list(system.unknowns)
        n = len(names)
        if n == 0:
            raise ValueError("system has no unknowns")
        e = n - 1 if eliminate is None else eliminate
        self.eliminated = names[e]
        self.free = names[:e] + names[e + 1 :]
        self.feasible = True
        dirs: dict[tuple[int, ...], _Dir] = {}
        for form in system.forms:
            a = dict(form.coeffs)
            ae = a.get(self.eliminated, 0)
            row = [a.get(c, 0) - ae for c in self.free]
            b = form.constant + ae
            k = form.order
            cap = k * form.degree
            g = 0
            for x in row:
                g = gcd(g, x)
            if g == 0:
                if not (0 <= b <= cap and b % k == 0):
                    self.feasible = False
                continue
            sign = 1
            for x in row:
                if x:
                    sign = 1 if x > 0 else -1
                    break
            vec = tuple(sign * x // g for x in row)
            sg = sign * g
            # 0 <= sg*t + b <= cap
            if sg > 0:
                lo, hi = -(b // sg), (cap - b) // sg
            else:
                lo, hi = -((b - cap) // sg), b // -sg
            cong = _solve_linear(sg, -b, k)
            d = dirs.get(vec)
            if d is None:
                d = dirs[vec] = _Dir(vec)
            d.lo = lo if d.lo is None else max(d.lo, lo)
            d.hi = hi if d.hi is None else min(d.hi, hi)
            if cong is None:
                self.feasible = False
                continue
            merged = _merge(d.res, d.mod, cong[0], cong[1])
            if merged is None:
                self.feasible = False
                continue
            d.res, d.mod = merged
        for d in dirs.values():
            d.lo += (d.res - d.lo) % d.mod
            d.hi -= (d.hi - d.res) % d.mod
            if d.lo > d.hi:
                self.feasible = False
        self.dirs = list(dirs.values())


# -- Fourier-Motzkin -------------------------------------------------------------


def _norm(coeffs: tuple[int, ...], rhs: int) -> tuple[tuple[int, ...], int]:
    # valid for integer points only: divide by the content and round the bound up
    g = 0
    for c in coeffs:
        g = gcd(g, c)
    if g == 1:
        return coeffs, rhs
    return tuple(c // g for c in coeffs), -((-rhs) // g)


def _fm_bounds(rows: list[tuple[tuple[int, ...], int]], target: int, f: int) -> tuple[Fraction | None, Fraction | None] | None:
    """Project the integer points of {y : c . y >= r for all rows} onto ``target``.

    Rows are integral and every derived row is divided by its content with the
    bound rounded up, which keeps all integer points.  Each row remembers the
    set of input rows it was built from; after s eliminations a row built from
    more than s + 1 inputs is implied by the others and is dropped (Chernikov's
    rule).  Returns (lo, hi) with None for an unbounded side, or None if no
    point survives.
    """
    # key -> (bound, history bitmask)
    current: dict[tuple[int, ...], tuple[int, int]] = {}
    for i, (c, r) in enumerate(rows):
        if any(c):
            key, rr = _norm(c, r)
            if key not in current or current[key][0] < rr:
                current[key] = (rr, 1 << i)
        elif r > 0:
            return None
    remaining = [j for j in range(f) if j != target]
    step = 0
    while remaining:
        # eliminate the coordinate that creates the fewest rows
        def cost(j):
            p = sum(1 for c in current if c[j] > 0)
            return p * (len(current) - p - sum(1 for c in current if c[j] == 0))

        j = min(remaining, key=cost)
        remaining.remove(j)
        step += 1
        pos = [(c, rh) for c, rh in current.items() if c[j] > 0]
        neg = [(c, rh) for c, rh in current.items() if c[j] < 0]
        nxt = {c: rh for c, rh in current.items() if c[j] == 0}
        if len(pos) * len(neg) > FM_ROW_LIMIT:
            raise SearchBudgetExceeded(f"Fourier-Motzkin step would combine {len(pos) * len(neg)} row pairs")
        for cp, (rp, hp) in pos:
            for cn, (rn, hn) in neg:
                h = hp | hn
                if h.bit_count() > step + 1:
                    continue
                wp, wn = -cn[j], cp[j]
                g = gcd(wp, wn)
                wp //= g
                wn //= g
                c = tuple(wp * x + wn * y for x, y in zip(cp, cn))
                r = wp * rp + wn * rn
                if any(c):
                    key, rr = _norm(c, r)
                    old = nxt.get(key)
                    if old is None or old[0] < rr:
                        nxt[key] = (rr, h)
                elif r > 0:
                    return None
        current = nxt
    lo = hi = None
    for c, (r, _) in current.items():
        a = c[target]
        if a > 0:
            v = Fraction(r, a)
            lo = v if lo is None else max(lo, v)
        elif a < 0:
            v = Fraction(r, a)
            hi = v if hi is None else min(hi, v)
    if lo is not None and hi is not None and lo > hi:
        return None
    return lo, hi


def _dir_rows(red: _Reduced) -> list[tuple[tuple[int, ...], int]]:
    rows = []
    for d in red.dirs:
        rows.append((d.vec, d.lo))
        rows.append((tuple(-x for x in d.vec), -d.hi))
    return rows


PROPAGATION_ROUNDS = 200


def _propagate(red: _Reduced) -> list[list[int | None]] | None:
    """Integer interval propagation over the merged directions.

    Returns per free coordinate [lo, hi] (None = unbounded), or None if some
    direction cannot be met.  Every bound is valid for all integer solutions.
    """
    f = len(red.free)
    lo: list[int | None] = [None] * f
    hi: list[int | None] = [None] * f
    for _ in range(PROPAGATION_ROUNDS):
        changed = False
        for d in red.dirs:
            support = [i for i, v in enumerate(d.vec) if v]
            # min and max of each term; None when unbounded
            mins, maxs = [], []
            for i in support:
                v = d.vec[i]
                a = None if (lo[i] if v > 0 else hi[i]) is None else v * (lo[i] if v > 0 else hi[i])
                b = None if (hi[i] if v > 0 else lo[i]) is None else v * (hi[i] if v > 0 else lo[i])
                mins.append(a)
                maxs.append(b)
            n_min_inf = sum(x is None for x in mins)
            n_max_inf = sum(x is None for x in maxs)
            smin = sum(x for x in mins if x is not None)
            smax = sum(x for x in maxs if x is not None)
            if n_min_inf == 0 and smin > d.hi or n_max_inf == 0 and smax < d.lo:
                return None
            for pos, i in enumerate(support):
                v = d.vec[i]
                # v*y_i <= d.hi - (sum of the other minima)
                if n_min_inf == 0 or (n_min_inf == 1 and mins[pos] is None):
                    rest = smin - (mins[pos] or 0)
                    bound = d.hi - rest
                    if v > 0:
                        nb = bound // v
                        if hi[i] is None or nb < hi[i]:
                            hi[i] = nb
                            changed = True
                    else:
                        nb = -((-bound) // v)
                        if lo[i] is None or nb > lo[i]:
                            lo[i] = nb
                            changed = True
                # v*y_i >= d.lo - (sum of the other maxima)
                if n_max_inf == 0 or (n_max_inf == 1 and maxs[pos] is None):
                    rest = smax - (maxs[pos] or 0)
                    bound = d.lo - rest
                    if v > 0:
                        nb = -((-bound) // v)
                        if lo[i] is None or nb > lo[i]:
                            lo[i] = nb
                            changed = True
                    else:
                        nb = bound // v
                        if hi[i] is None or nb < hi[i]:
                            hi[i] = nb
                            changed = True
                if lo[i] is not None and hi[i] is not None and lo[i] > hi[i]:
                    return None
        if not changed:
            break
    return [[a, b] for a, b in zip(lo, hi)]


def _project(red: _Reduced, targets: Sequence[int]) -> dict[int, tuple[Fraction | None, Fraction | None]] | None:
    """Bounds of the given free coordinates; None if no integer point exists."""
    f = len(red.free)
    pb = _propagate(red)
    if pb is None:
        return None
    fixed = {i: lo for i, (lo, hi) in enumerate(pb) if lo is not None and lo == hi}
    live = [i for i in range(f) if i not in fixed]
    rows = []
    for c, r in _dir_rows(red):
        r2 = r - sum(c[i] * v for i, v in fixed.items())
        rows.append((tuple(c[i] for i in live), r2))
    for j, i in enumerate(live):
        unit = tuple(1 if jj == j else 0 for jj in range(len(live)))
        if pb[i][0] is not None:
            rows.append((unit, pb[i][0]))
        if pb[i][1] is not None:
            rows.append((tuple(-x for x in unit), -pb[i][1]))
    out = {}
    for t in targets:
        if t in fixed:
            out[t] = (Fraction(fixed[t]), Fraction(fixed[t]))
            continue
        res = _fm_bounds(rows, live.index(t), len(live))
        if res is None:
            return None
        out[t] = res
    return out


def derive_box(system: ConstraintSystem) -> Box:
    """Integer box containing every solution of ``system``.

    Raises :class:`Unbounded` if the linear relaxation leaves some unknown
    unbounded; returns an empty box if the relaxation is already infeasible.
    """
    names = list(system.unknowns)
    n = len(names)
    empty = Box(tuple((c, 1, 0) for c in names), True)
    if n == 1:
        red = _Reduced(system)
        return Box(((names[0], 1, 1),)) if red.feasible else empty
    bounds: dict[str, tuple[Fraction | None, Fraction | None]] = {}
    # eliminating the last unknown bounds all the others; eliminating the
    # first one bounds the last
    for eliminate, wanted in ((n - 1, names[:-1]), (0, names[-1:])):
        red = _Reduced(system, eliminate=eliminate)
        if not red.feasible:
            return empty
        proj = _project(red, [red.free.index(c) for c in wanted])
        if proj is None:
            return empty
        for c in wanted:
            bounds[c] = proj[red.free.index(c)]
    unbounded = [c for c in names if bounds[c][0] is None or bounds[c][1] is None]
    if unbounded:
        raise Unbounded(unbounded)
    out = []
    for c in names:
        lo_i, hi_i = ceil(bounds[c][0]), floor(bounds[c][1])
        if lo_i > hi_i:
            return empty
        out.append((c, lo_i, hi_i))
    return Box(tuple(out))


def enumerate_solutions(system: ConstraintSystem, box: Box | None = None, budget: int = DEFAULT_BUDGET) -> SolutionSet:
    """All integer tuples satisfying ``system``, sorted in unknown order."""
    names = list(system.unknowns)
    k = system.order

    def done(found):
        sols = sorted(set(found))
        return SolutionSet(k, tuple(names), tuple(AugmentationTuple(k, tuple(zip(names, s))) for s in sols))

    red = _Reduced(system)
    if not red.feasible:
        return done([])
    if len(names) == 1:
        nu = {names[0]: 1}
        return done([(1,)] if check_solution(system, nu) else [])
    if box is None:
        box = derive_box(system)
    if box.empty:
        return done([])

    free = red.free
    f = len(free)
    order = sorted(range(f), key=lambda i: (box[free[i]][1] - box[free[i]][0], i))
    ranges = [box[free[i]] for i in order]
    dirs = red.dirs
    vecs = [[d.vec[i] for i in order] for d in dirs]
    # last level at which each direction still has a non-zero coefficient
    last_level = [max((lv for lv in range(f) if v[lv]), default=-1) for v in vecs]
    # optimistic remaining contribution of levels >= lv
    rem_min = [[0] * len(dirs) for _ in range(f + 1)]
    rem_max = [[0] * len(dirs) for _ in range(f + 1)]
    for lv in range(f - 1, -1, -1):
        lo, hi = ranges[lv]
        for j, v in enumerate(vecs):
            a, b = v[lv] * lo, v[lv] * hi
            rem_min[lv][j] = rem_min[lv + 1][j] + min(a, b)
            rem_max[lv][j] = rem_max[lv + 1][j] + max(a, b)
    by_last = [[j for j in range(len(dirs)) if last_level[j] == lv] for lv in range(f)]
    eliminated_lo, eliminated_hi = box[red.eliminated]

    found: list[tuple[int, ...]] = []
    values = [0] * f
    nodes = 0

    def finish():
        full = dict(zip(free, (values[order.index(i)] for i in range(f))))
        full[red.eliminated] = 1 - sum(full.values())
        if not eliminated_lo <= full[red.eliminated] <= eliminated_hi:
            return
        if check_solution(system, full):
            found.append(tuple(full[c] for c in names))

    def dfs(lv: int, partial: list[int]):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise SearchBudgetExceeded(f"search exceeded {budget} nodes for order {k}")
        lo, hi = ranges[lv]
        if lv == f - 1:
            res, mod = 0, 1
            for j in by_last[lv]:
                d, c, p = dirs[j], vecs[j][lv], partial[j]
                # d.lo <= p + c*x <= d.hi
                if c > 0:
                    lo = max(lo, -((p - d.lo) // c))
                    hi = min(hi, (d.hi - p) // c)
                else:
                    lo = max(lo, -((p - d.hi) // c))
                    hi = min(hi, (d.lo - p) // c)
                if lo > hi:
                    return
                sol = _solve_linear(c, d.res - p, d.mod)
                if sol is None:
                    return
                merged = _merge(res, mod, *sol)
                if merged is None:
                    return
                res, mod = merged
            x = lo + (res - lo) % mod
            while x <= hi:
                values[lv] = x
                finish()
                x += mod
            return
        for x in range(lo, hi + 1):
            values[lv] = x
            nxt = [p + v[lv] * x for p, v in zip(partial, vecs)]
            ok = True
            for j, d in enumerate(dirs):
                p = nxt[j]
                if p + rem_min[lv + 1][j] > d.hi or p + rem_max[lv + 1][j] < d.lo:
                    ok = False
                    break
            if ok:
                for j in by_last[lv]:
                    if (nxt[j] - dirs[j].res) % dirs[j].mod:
                        ok = False
                        break
            if ok:
                dfs(lv + 1, nxt)

    dfs(0, [0] * len(dirs))
    return done(found)
