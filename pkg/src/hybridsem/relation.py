"""Timed state relations and their lifts to configurations, trajectories,
and semantics.

A timed relation is a finite list of clauses.  A clause has an optional
time window, optional mode guards, and a conjunction of affine
constraints over the symbols

    t                       current time
    c_<v>                   concrete variable v
    a_<v>                   abstract variable v
    B_c, E_c, B_a, E_a      interval endpoints of the enclosing
                            concrete/abstract configuration

A state pair is related at time t iff some clause whose window contains
t and whose guards match has all constraints satisfied.

All for-all-over-an-interval verdicts are decided exactly: with affine
flows substituted, every constraint is affine in t, so the time axis is
refined at all constraint roots and window/piece boundaries; between
consecutive breakpoints every constraint has a constant truth value, so
checking each breakpoint and one interior rational point per cell is a
complete decision procedure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .affine import ENDPOINT_SYMBOLS, AffineConstraint, LinExpr, parse_constraint
from .errors import EndpointSymbolsUnbound, NonOverlappingPair
from .flow_config import Configuration, PiecewiseConfiguration, State
from .time_core import INF, Q, TimeInterval, interval_intersect, is_finite

__all__ = [
    "Clause",
    "TimedStateRelation",
    "ConfigRelation",
    "state_related",
    "config_related",
    "relation_project",
    "traj_related_timewise",
    "traj_related_rankwise",
    "sem_related",
    "compose_relations",
    "relation_from_json",
]


@dataclass(frozen=True)
class Clause:
    constraints: tuple  # AffineConstraint
    window: Optional[TimeInterval] = None  # None = all of time
    concrete_mode: Optional[str] = None  # None = wildcard
    abstract_mode: Optional[str] = None
    # endpoint env -> extra constraints, or None when the clause cannot
    # apply for those endpoints (e.g. a coefficient would divide by zero)
    dynamic: Optional[Callable] = None

    def uses_endpoints(self) -> bool:
        if self.dynamic is not None:
            return True
        syms = set()
        for c in self.constraints:
            syms |= c.symbols()
        return any(s in syms for s in ENDPOINT_SYMBOLS)

    def effective_constraints(self, endpoints) -> Optional[tuple]:
        """Static plus dynamically built constraints; None = inapplicable."""
        if self.dynamic is None:
            return self.constraints
        extra = self.dynamic(endpoints or {})
        if extra is None:
            return None
        return self.constraints + tuple(extra)

    def guards_match(self, cmode: str, amode: str) -> bool:
        if self.concrete_mode is not None and self.concrete_mode != cmode:
            return False
        if self.abstract_mode is not None and self.abstract_mode != amode:
            return False
        return True


@dataclass(frozen=True)
class TimedStateRelation:
    clauses: tuple
    domain: Optional[tuple] = None  # time windows; None = total

    def in_domain(self, t) -> bool:
        if self.domain is None:
            return True
        return any(w.contains(t) for w in self.domain)

    def domain_boundaries(self) -> list:
        if self.domain is None:
            return []
        out = []
        for w in self.domain:
            out.append(w.lo)
            if is_finite(w.hi):
                out.append(w.hi)
        return out


@dataclass(frozen=True)
class ConfigRelation:
    pairs: tuple  # (Configuration, Configuration), overlapping

    def __post_init__(self):
        for c, d in self.pairs:
            if interval_intersect(c.interval, d.interval) is None:
                raise NonOverlappingPair(f"{c!r} and {d!r} do not overlap")


def _state_env(t, s: State, sbar: State, endpoints: Optional[dict]) -> dict:
    env = {"t": Q(t)}
    for k, v in s.vars:
        env["c_" + k] = v
    for k, v in sbar.vars:
        env["a_" + k] = v
    if endpoints:
        env.update(endpoints)
    return env


def state_related(
    r: TimedStateRelation,
    t,
    s: State,
    sbar: State,
    endpoints: Optional[dict] = None,
    catalog: Optional[Iterable] = None,
) -> bool:
    """Membership of a state pair in r(t).

    Clauses with endpoint symbols need configuration context: either an
    explicit `endpoints` binding, or a `catalog` of configuration pairs
    from which any pair containing t with matching states may bind them
    (the existential reading).
    """
    if not r.in_domain(t):
        return False
    for clause in r.clauses:
        if clause.window is not None and not clause.window.contains(t):
            continue
        if not clause.guards_match(s.mode, sbar.mode):
            continue
        if clause.uses_endpoints() and endpoints is None:
            if catalog is None:
                raise EndpointSymbolsUnbound(
                    "clause uses B/E symbols; supply endpoints or a catalog"
                )
            for c, d in catalog:
                if not (c.interval.contains(t) and d.interval.contains(t)):
                    continue
                if c.state_at(t) != s or d.state_at(t) != sbar:
                    continue
                if not (is_finite(c.e) and is_finite(d.e)):
                    continue
                eps = _endpoint_env(c, d)
                cons = clause.effective_constraints(eps)
                if cons is None:
                    continue
                env = _state_env(t, s, sbar, eps)
                if all(con.holds(env) for con in cons):
                    return True
            continue
        cons = clause.effective_constraints(endpoints)
        if cons is None:
            continue
        env = _state_env(t, s, sbar, endpoints)
        try:
            if all(con.holds(env) for con in cons):
                return True
        except KeyError:
            continue  # clause mentions a symbol this pair cannot bind
    return False


def _endpoint_env(c, d) -> dict:
    env = {}
    for name, cfg in (("c", c), ("a", d)):
        env["B_" + name] = cfg.b
        env["E_" + name] = cfg.e  # may be INF; constraints using it then fail
    return env


def _pieces(c):
    if isinstance(c, PiecewiseConfiguration):
        return c.pieces
    return (c,)


def _clause_holds_at(clause: Clause, t, cp: Configuration, dp: Configuration, endpoints) -> bool:
    if clause.window is not None and not clause.window.contains(t):
        return False
    s, sbar = cp.flow.state_at(t), dp.flow.state_at(t)
    if not clause.guards_match(s.mode, sbar.mode):
        return False
    cons = clause.effective_constraints(endpoints)
    if cons is None:
        return False
    env = _state_env(t, s, sbar, endpoints)
    try:
        return all(con.holds(env) for con in cons)
    except KeyError:
        return False


def _flow_exprs(cp: Configuration, prefix: str) -> dict:
    """Variable symbols of one side as affine expressions of t."""
    out = {}
    rates = dict(cp.flow.rate)
    for name, init in cp.flow.initial:
        rate = rates[name]
        out[prefix + name] = LinExpr.make({"t": rate}, init - rate * cp.flow.anchor)
    return out


def _constraint_roots(clause: Clause, cp, dp, endpoints, lo, hi) -> list:
    """Roots in (lo, hi) of the clause's constraints as functions of t."""
    subst = {}
    subst.update(_flow_exprs(cp, "c_"))
    subst.update(_flow_exprs(dp, "a_"))
    if endpoints:
        subst.update({k: v for k, v in endpoints.items() if is_finite(v)})
    cons = clause.effective_constraints(endpoints)
    if cons is None:
        return []
    roots = []
    for con in cons:
        g = con.lhs.subst(subst)
        extra = g.symbols() - {"t"}
        if extra:
            continue  # unbound symbol; clause will fail pointwise anyway
        coef = dict(g.coefs).get("t", Q(0))
        if coef == 0:
            continue
        root = -g.const / coef
        if lo < root < hi:
            roots.append(root)
    return roots


def _forall_window_related(
    r: TimedStateRelation, cp, dp, window: TimeInterval, endpoints
) -> bool:
    """Exact decision of: for all t in window, states of cp/dp related by r.

    cp and dp must be plain affine configurations whose intervals cover
    the window.
    """
    lo, hi = window.lo, window.hi
    cuts = {lo}
    if is_finite(hi):
        cuts.add(hi)
    for clause in r.clauses:
        if clause.window is not None:
            for bnd in (clause.window.lo, clause.window.hi):
                if is_finite(bnd) and lo < bnd < hi:
                    cuts.add(bnd)
        cuts.update(_constraint_roots(clause, cp, dp, endpoints, lo, hi))
    for bnd in r.domain_boundaries():
        if lo < bnd < hi:
            cuts.add(bnd)
    if not is_finite(hi):
        # unbounded window: add one far point past every cut; beyond the
        # last breakpoint all truth values are constant
        far = max(cuts) + 1
        cuts.add(far)
    points = sorted(cuts)

    def ok_at(t) -> bool:
        if not r.in_domain(t):
            return True  # outside dom(r) nothing is required
        return any(_clause_holds_at(cl, t, cp, dp, endpoints) for cl in r.clauses)

    for idx, t in enumerate(points):
        include = window.contains(t)
        if include and not ok_at(t):
            return False
        if idx + 1 < len(points):
            mid = (t + points[idx + 1]) / 2
            if window.contains(mid) and not ok_at(mid):
                return False
    if not is_finite(hi) and not ok_at(points[-1]):
        return False
    return True


def config_related(r: TimedStateRelation, c, d) -> bool:
    """Lift of r to configurations: overlapping intervals with related
    states throughout the overlap (intersected with dom(r))."""
    overlap = interval_intersect(c.interval, d.interval)
    if overlap is None:
        return False
    endpoints = _endpoint_env(c, d)
    for cp in _pieces(c):
        for dp in _pieces(d):
            w = interval_intersect(cp.interval, dp.interval)
            if w is None:
                continue
            if not _forall_window_related(r, cp, dp, w, endpoints):
                return False
    return True


def relation_project(R: ConfigRelation) -> Callable:
    """alpha(R): the time-indexed state relation induced by config pairs."""

    def at(t):
        t = Q(t)
        out = set()
        for c, d in R.pairs:
            if c.interval.contains(t) and d.interval.contains(t):
                out.add((c.state_at(t), d.state_at(t)))
        return frozenset(out)

    return at


def _min_duration(s, sb):
    a, b = s.duration, sb.duration
    return a if a <= b else b


def traj_related_timewise(r: TimedStateRelation, s, sb) -> bool:
    """(for all t below both durations, the states are related) decided
    exactly over the refinement of both timelines."""
    m = _min_duration(s, sb)
    if is_finite(m) and m == 0:
        return True
    bound = TimeInterval(Q(0), m, False) if is_finite(m) else TimeInterval(Q(0), INF, False)
    for c in s.configs:
        if c.b >= m:
            break
        for d in sb.configs:
            if d.b >= m:
                break
            endpoints = _endpoint_env(c, d)
            for cp in _pieces(c):
                for dp in _pieces(d):
                    w = interval_intersect(cp.interval, dp.interval)
                    if w is None:
                        continue
                    window = interval_intersect(w, bound)
                    if window is None:
                        continue
                    if not _forall_window_related(r, cp, dp, window, endpoints):
                        return False
    return True


def traj_related_rankwise(r: TimedStateRelation, s, sb) -> bool:
    """Equivalent rank-based definition: every configuration ending
    within the other side's duration has a related counterpart."""
    dur_s, dur_sb = s.duration, sb.duration
    for c in s.configs:
        if c.e <= dur_sb and not any(config_related(r, c, d) for d in sb.configs):
            return False
    for d in sb.configs:
        if d.e <= dur_s and not any(config_related(r, c, d) for c in s.configs):
            return False
    return True


def sem_related(related: Callable, T: Iterable, Tb: Iterable):
    """(37): every member of T has a related member of Tb.

    Returns (verdict, witness map, unmatched list)."""
    Tb = list(Tb)
    witnesses = {}
    unmatched = []
    for s in T:
        found = None
        for sb in Tb:
            if related(s, sb):
                found = sb
                break
        if found is None:
            unmatched.append(s)
        else:
            witnesses[s] = found
    return (not unmatched, witnesses, unmatched)


def compose_relations(r1: TimedStateRelation, r2: TimedStateRelation):
    """Pointwise relational composition as a membership predicate.

    (r1 o r2)(t) relates s to s'' iff some intermediate state s'
    satisfies r1(t)(s, s') and r2(t)(s', s'').  The intermediate is
    supplied by the caller (a witness trajectory), so the result is a
    function of (t, s, mid, s'') rather than a clause list.
    """

    def member(t, s, mid, sbb, endpoints1=None, endpoints2=None):
        return state_related(r1, t, s, mid, endpoints=endpoints1) and state_related(
            r2, t, mid, sbb, endpoints=endpoints2
        )

    return member


def relation_from_json(doc: dict) -> TimedStateRelation:
    clauses = []
    for cl in doc["clauses"]:
        window = None
        if "window" in cl:
            w = cl["window"]
            hi = w.get("hi", "inf")
            window = TimeInterval(
                Q(w["lo"]),
                INF if hi in ("inf", None) else Q(hi),
                bool(w.get("closed_hi", False)),
            )
        clauses.append(
            Clause(
                tuple(parse_constraint(c) for c in cl.get("constraints", [])),
                window,
                cl.get("concrete_mode"),
                cl.get("abstract_mode"),
            )
        )
    domain = None
    if "domain" in doc:
        domain = tuple(
            TimeInterval(
                Q(w["lo"]),
                INF if w.get("hi", "inf") in ("inf", None) else Q(w["hi"]),
                bool(w.get("closed_hi", False)),
            )
            for w in doc["domain"]
        )
    return TimedStateRelation(tuple(clauses), domain)
