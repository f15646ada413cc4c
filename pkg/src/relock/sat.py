"""A small, deterministic CDCL SAT solver.

Two-watched-literal propagation, first-UIP conflict analysis with clause
learning, exponentially decayed variable activities, phase saving, and Luby
restarts.  There is no randomization anywhere, so a formula always produces
the same run, the same model, and the same statistics.

``solve`` accepts an optional conflict budget; exceeding it aborts the search
with status ``UNKNOWN`` and the statistics gathered so far, which is how
callers meter attack effort.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

SAT = "SAT"
UNSAT = "UNSAT"
UNKNOWN = "UNKNOWN"

_RESTART_BASE = 128
_ACT_DECAY = 0.95
_ACT_LIMIT = 1e100


@dataclass
class SolveResult:
    status: str
    model: dict[int, bool] | None
    conflicts: int
    decisions: int
    propagations: int
    restarts: int
    learned: int

    def __bool__(self) -> bool:
        return self.status == SAT


def _luby(i: int) -> int:
    # Luby restart sequence: 1 1 2 1 1 2 4 1 1 2 1 1 2 4 8 ...
    size = 1
    seq = 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class Solver:
    """One-shot CDCL search over a fixed clause set."""

    def __init__(self, n_vars: int, clauses) -> None:
        self.n_vars = n_vars
        self.assign: list[int] = [-1] * (n_vars + 1)  # -1 free, else 0/1
        self.level: list[int] = [0] * (n_vars + 1)
        self.reason: list[list[int] | None] = [None] * (n_vars + 1)
        self.watches: dict[int, list[list[int]]] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.activity: list[float] = [0.0] * (n_vars + 1)
        self.var_inc = 1.0
        self.phase: list[int] = [0] * (n_vars + 1)
        self.heap: list[tuple[float, int]] = [(0.0, v) for v in range(1, n_vars + 1)]
        heapq.heapify(self.heap)
        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        self.restarts = 0
        self.learned = 0
        self.unsat = False
        self._units: list[int] = []
        for cl in clauses:
            self._add_clause(list(cl))

    # -- construction -------------------------------------------------------

    def _add_clause(self, lits: list[int]) -> None:
        seen = set()
        cl = []
        for lit in lits:
            if lit == 0 or abs(lit) > self.n_vars:
                raise ValueError(f"bad literal {lit}")
            if -lit in seen:
                return  # tautology
            if lit not in seen:
                seen.add(lit)
                cl.append(lit)
        if not cl:
            self.unsat = True
            return
        if len(cl) == 1:
            self._units.append(cl[0])
            return
        self._watch(cl)

    def _watch(self, cl: list[int]) -> None:
        self.watches.setdefault(cl[0], []).append(cl)
        self.watches.setdefault(cl[1], []).append(cl)

    # -- assignment ---------------------------------------------------------

    def _value(self, lit: int) -> int:
        a = self.assign[abs(lit)]
        if a < 0:
            return -1
        return a if lit > 0 else a ^ 1

    def _enqueue(self, lit: int, reason: list[int] | None) -> bool:
        v = abs(lit)
        val = 1 if lit > 0 else 0
        if self.assign[v] >= 0:
            return self.assign[v] == val
        self.assign[v] = val
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)
        return True

    def _propagate(self) -> list[int] | None:
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            falsified = -lit
            wl = self.watches.get(falsified)
            if not wl:
                continue
            keep: list[list[int]] = []
            for idx, cl in enumerate(wl):
                if cl[0] == falsified:
                    cl[0], cl[1] = cl[1], cl[0]
                first = cl[0]
                if self._value(first) == 1:
                    keep.append(cl)
                    continue
                moved = False
                for k in range(2, len(cl)):
                    if self._value(cl[k]) != 0:
                        cl[1], cl[k] = cl[k], cl[1]
                        self.watches.setdefault(cl[1], []).append(cl)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(cl)
                if self._value(first) == 0:
                    keep.extend(wl[idx + 1 :])
                    self.watches[falsified] = keep
                    return cl
                self._enqueue(first, cl)
            self.watches[falsified] = keep
        return None

    # -- learning -----------------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > _ACT_LIMIT:
            scale = 1.0 / _ACT_LIMIT
            for u in range(1, self.n_vars + 1):
                self.activity[u] *= scale
            self.var_inc *= scale

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        learnt = [0]
        seen = [False] * (self.n_vars + 1)
        counter = 0
        lit = None
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        reason = confl
        while True:
            for q in reason if lit is None else reason[1:]:
                v = abs(q)
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            lit = self.trail[idx]
            v = abs(lit)
            seen[v] = False
            counter -= 1
            idx -= 1
            if counter == 0:
                learnt[0] = -lit
                break
            reason = self.reason[v]
            # reason clauses store the implied literal first
            if reason[0] != lit:
                reason = [lit] + [q for q in reason if q != lit]
        if len(learnt) == 1:
            return learnt, 0
        back = max(self.level[abs(q)] for q in learnt[1:])
        # move one literal of the backtrack level into watch position
        for k in range(1, len(learnt)):
            if self.level[abs(learnt[k])] == back:
                learnt[1], learnt[k] = learnt[k], learnt[1]
                break
        return learnt, back

    def _cancel_until(self, lvl: int) -> None:
        while len(self.trail_lim) > lvl:
            mark = self.trail_lim.pop()
            for lit in reversed(self.trail[mark:]):
                v = abs(lit)
                self.phase[v] = self.assign[v]
                self.assign[v] = -1
                self.reason[v] = None
                heapq.heappush(self.heap, (-self.activity[v], v))
            del self.trail[mark:]
        self.qhead = min(self.qhead, len(self.trail))

    def _decide(self) -> int:
        while self.heap:
            act, v = heapq.heappop(self.heap)
            if self.assign[v] < 0 and -act <= self.activity[v]:
                return v if self.phase[v] else -v
            if self.assign[v] < 0:
                heapq.heappush(self.heap, (-self.activity[v], v))
        for v in range(1, self.n_vars + 1):
            if self.assign[v] < 0:
                return v if self.phase[v] else -v
        return 0

    # -- search -------------------------------------------------------------

    def solve(self, conflict_budget: int | None = None) -> SolveResult:
        if self.unsat:
            return self._result(UNSAT)
        for lit in self._units:
            if not self._enqueue(lit, None):
                return self._result(UNSAT)
        if self._propagate() is not None:
            return self._result(UNSAT)
        limit = _RESTART_BASE * _luby(self.restarts)
        conflicts_here = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                conflicts_here += 1
                if conflict_budget is not None and self.conflicts > conflict_budget:
                    return self._result(UNKNOWN)
                if not self.trail_lim:
                    return self._result(UNSAT)
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    if not self._enqueue(learnt[0], None):
                        return self._result(UNSAT)
                else:
                    self.learned += 1
                    self._watch(learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc /= _ACT_DECAY
                continue
            if conflicts_here >= limit:
                conflicts_here = 0
                self.restarts += 1
                limit = _RESTART_BASE * _luby(self.restarts)
                self._cancel_until(0)
                continue
            lit = self._decide()
            if lit == 0:
                return self._result(SAT)
            self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    def _result(self, status: str) -> SolveResult:
        model = None
        if status == SAT:
            model = {v: bool(self.assign[v]) for v in range(1, self.n_vars + 1)}
        elif status == UNSAT and self.conflicts == 0:
            # deriving the empty clause at the root still counts as one
            self.conflicts = 1
        return SolveResult(
            status=status,
            model=model,
            conflicts=self.conflicts,
            decisions=self.decisions,
            propagations=self.propagations,
            restarts=self.restarts,
            learned=self.learned,
        )


def solve(cnf_or_clauses, n_vars: int | None = None, conflict_budget: int | None = None) -> SolveResult:
    """Solve a :class:`~relock.unroll.Cnf` or a raw clause list.

    Deterministic: equal formulas give equal results and statistics.
    """
    clauses = getattr(cnf_or_clauses, "clauses", cnf_or_clauses)
    if n_vars is None:
        n_vars = getattr(cnf_or_clauses, "n_vars", None)
        if n_vars is None:
            n_vars = max((abs(v) for cl in clauses for v in cl), default=0)
    return Solver(n_vars, clauses).solve(conflict_budget)
