"""Exact solvers for the placement program.

``solve_exact`` is a depth-first branch and bound over the structural
decisions (content server per request, placement per instance, assignment
per request chain slot); routes are derived, never branched, because every
route coefficient is non-negative and the current routes only contribute a
constant credit. ``brute_force`` is the independent oracle: it enumerates
the same decision space exhaustively and filters with the model module's
constraint checker instead of the incremental bookkeeping used here.

Both solvers break instance-permutation symmetry the same way: instances of
one type that are absent from the snapshot are activated in identifier
order. Snapshot instances are never restricted (they are distinguishable
through their migration sources), so no optimum is excluded.
"""

from __future__ import annotations

import itertools
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from . import costs as _costs
from .errors import TooLargeError, ValidationFailedError
from .ilp import enumerate_variables, plan_vector
from .model import (
    Link,
    PlacementPlan,
    ProblemInstance,
    STATUS_NEW,
    check_feasibility,
    validate_instance,
)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_TIME_LIMIT = "time_limit"

DEFAULT_ENUMERATION_CAP = 10_000_000


@dataclass(frozen=True)
class SolveOptions:
    time_limit: float = 600.0
    no_reuse: bool = False
    parallel_workers: int = 1
    clamp_instantiation: bool = False  # price removals at zero instead of a
    # license refund; the evaluation harness turns this on
    tie_break: str = "lexicographic"  # fixed; equal-cost optima resolve on
    # the canonical variable vector

    def __post_init__(self):
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.parallel_workers < 1:
            raise ValueError("parallel_workers must be at least 1")


@dataclass
class SolveStats:
    nodes: int = 0
    incumbent_updates: int = 0
    wall_time: float = 0.0
    gap: int | None = None  # micro-money; set on time-limited runs


@dataclass(frozen=True)
class SolveResult:
    status: str
    plan: PlacementPlan | None
    breakdown: _costs.CostBreakdown | None
    stats: SolveStats


def derive_routes(
    instance: ProblemInstance,
    content_server: Mapping[str, str],
    assignment: Mapping[tuple[str, str], tuple[str, int]],
) -> dict[str, frozenset[Link]]:
    """Minimal link set forced by a content-server choice and a chain
    assignment: entry link, consecutive-host links, user link, with
    self-links standing in for co-located hops."""
    net = instance.network
    routes: dict[str, frozenset[Link]] = {}
    for f, cs in content_server.items():
        r = instance.request(f)
        hosts = [assignment[(f, k)][0] for k in r.chain]
        links = {net.link(cs, hosts[0])}
        for a, b in zip(hosts, hosts[1:]):
            links.add(net.link(a, b))
        links.add(net.link(hosts[-1], r.user))
        routes[f] = frozenset(links)
    return routes


@dataclass(frozen=True)
class _Decision:
    vnf_name: str
    instance_id: int
    snap_server: str | None
    fresh_rank: int | None  # position among the type's fresh instances
    contrib: dict  # option (server or None) -> exact micro-money
    min_contrib: int


class _Problem:
    """Immutable data shared by both solvers and all workers."""

    def __init__(self, instance: ProblemInstance, options: SolveOptions):
        report = validate_instance(instance)
        if not report.ok:
            raise ValidationFailedError(report)
        self.instance = instance
        self.options = options
        net = instance.network
        self.net = net
        self.servers = net.servers
        self.requests = instance.requests
        self.mu_is_one = instance.usage_threshold == 1
        mu = Fraction(instance.usage_threshold)

        def limit(cap):
            return cap if self.mu_is_one else mu * cap

        self.server_limit = {s: limit(net.server_capacity[s]) for s in net.servers}
        self.vnf_limit = {
            t.name: limit(t.capacity) for t in instance.catalog.types
        }
        self.link_limit = {}
        nodes = net.nodes
        for ai in range(len(nodes)):
            for bi in range(ai + 1, len(nodes)):
                a, b = nodes[ai], nodes[bi]
                self.link_limit[(a, b)] = limit(net.bandwidth_between(a, b))

        required = set(instance.required_types())
        snap_ids = {(k, i) for k, i, _s in instance.snapshot.deployed}
        self.snapshot_ids = snap_ids

        # snapshot entries of types no request needs stay untouched: they are
        # outside the decision space but still occupy server capacity
        self.frozen = tuple(
            sorted(
                (k, i, s)
                for k, i, s in instance.snapshot.deployed
                if k not in required
            )
        )
        self.base_server_load = {s: 0 for s in net.servers}
        for k, _i, s in self.frozen:
            self.base_server_load[s] += instance.catalog.get(k).resource_req

        self.decisions: list[_Decision] = []
        self.required_by_new: set[str] = {
            k for r in self.requests if r.status == STATUS_NEW for k in r.chain
        }
        for vnf in instance.catalog.types:
            if vnf.name not in required:
                continue
            fresh_rank = 0
            for i in vnf.instances:
                snap_server = instance.snapshot.server_of(vnf.name, i)
                rank = None
                if snap_server is None:
                    rank = fresh_rank
                    fresh_rank += 1
                contrib = {}
                if snap_server is None:
                    contrib[None] = 0
                    for s in net.servers:
                        contrib[s] = (
                            vnf.resource_req * net.server_unit_cost[s]
                            + vnf.license_cost
                        )
                else:
                    back = vnf.resource_req * net.server_unit_cost[snap_server]
                    if not options.clamp_instantiation:
                        back += vnf.license_cost
                    contrib[None] = -back
                    for s in net.servers:
                        contrib[s] = (
                            vnf.resource_req * net.server_unit_cost[s]
                            - vnf.resource_req * net.server_unit_cost[snap_server]
                            + vnf.migration(snap_server, s)
                        )
                self.decisions.append(
                    _Decision(
                        vnf_name=vnf.name,
                        instance_id=i,
                        snap_server=snap_server,
                        fresh_rank=rank,
                        contrib=contrib,
                        min_contrib=min(contrib.values()),
                    )
                )

        # admissible tails: undecided instances take their cheapest option,
        # unrouted requests keep only the credit for their current links
        self.suffix_min = [0] * (len(self.decisions) + 1)
        for di in range(len(self.decisions) - 1, -1, -1):
            self.suffix_min[di] = self.suffix_min[di + 1] + self.decisions[di].min_contrib

        # once the last instance of a type is decided, the deployed capacity
        # must already cover the type's demand; checking at the boundary
        # keeps the placement stage from wading through dead subtrees
        self.type_end: dict[int, str] = {}
        prev = None
        for idx, d in enumerate(self.decisions):
            if prev is not None and d.vnf_name != prev:
                self.type_end[idx] = prev
            prev = d.vnf_name
        if prev is not None:
            self.type_end[len(self.decisions)] = prev
        self.demand_all = {
            t.name: sum(r.traffic for r in self.requests if t.name in r.chain)
            for t in instance.catalog.types
        }
        self.demand_new = {
            t.name: sum(
                r.traffic
                for r in self.requests
                if r.status == STATUS_NEW and t.name in r.chain
            )
            for t in instance.catalog.types
        }

        self.credit = {}
        for r in self.requests:
            total = 0
            for a, b in {net.link(x, y) for x, y in r.current_route}:
                if a != b:
                    total += net.cost_between(a, b) * r.traffic
            self.credit[r.id] = total
        self.suffix_credit = [0] * (len(self.requests) + 1)
        for ri in range(len(self.requests) - 1, -1, -1):
            self.suffix_credit[ri] = (
                self.suffix_credit[ri + 1] - self.credit[self.requests[ri].id]
            )

        self.candidates = {
            r.id: tuple(s for s in net.servers if s in r.candidate_servers)
            for r in self.requests
        }
        self.gtlp_vars = tuple(
            v for v in enumerate_variables(instance) if v.family in "gtlp"
        )

    def tau_options(self, decision: _Decision) -> tuple:
        if decision.snap_server is not None:
            keep = decision.snap_server
            return (keep, None) + tuple(s for s in self.servers if s != keep)
        return (None,) + tuple(self.servers)


class _Incumbent:
    def __init__(self):
        self.lock = threading.Lock()
        self.total: int | None = None
        self.key: tuple | None = None
        self.plan: PlacementPlan | None = None
        self.updates = 0

    def offer(self, total: int, plan_factory, key_factory) -> None:
        with self.lock:
            if self.total is not None and total > self.total:
                return
            if self.total is None or total < self.total:
                self.total = total
                self.plan = plan_factory()
                self.key = key_factory(self.plan)
                self.updates += 1
                return
            key_plan = plan_factory()
            key = key_factory(key_plan)
            if key < self.key:
                self.key = key
                self.plan = key_plan
                self.updates += 1

    def current_total(self) -> int | None:
        return self.total


class _Worker:
    """One depth-first exploration of the search tree. State is mutated in
    place along the path and restored on backtrack."""

    def __init__(self, problem: _Problem, incumbent: _Incumbent, deadline: float):
        self.p = problem
        self.incumbent = incumbent
        self.deadline = deadline
        self.aborted = False
        self.abort_lb = math.inf
        self.nodes = 0

        self.gamma: list[str | None] = [None] * len(problem.requests)
        self.tau: dict[tuple[str, int], str] = {}
        self.deployed: dict[str, list[tuple[int, str]]] = {}
        self.server_load = dict(problem.base_server_load)
        self.fresh_open: dict[str, bool] = {}
        self.assign: dict[tuple[str, str], tuple[str, int]] = {}
        self.inst_load: dict[tuple[str, int], int] = {}
        self.link_load: dict[Link, int] = {}
        self.routes: dict[str, frozenset[Link]] = {}
        self.committed = 0

    def _expired(self) -> bool:
        if self.aborted:
            return True
        self.nodes += 1
        if self.nodes % 256 == 0 and time.monotonic() > self.deadline:
            self.aborted = True
        return self.aborted

    def run(self, pinned_first: str | None) -> None:
        if self.p.requests:
            if pinned_first is not None:
                self.gamma[0] = pinned_first
                self._branch_gamma(1)
                self.gamma[0] = None
            else:
                self._branch_gamma(0)
        else:
            self._branch_tau(0)

    # stage (a): content servers
    def _branch_gamma(self, ri: int) -> None:
        bound = self.committed + self.p.suffix_min[0] + self.p.suffix_credit[0]
        if self._expired():
            self.abort_lb = min(self.abort_lb, bound)
            return
        inc = self.incumbent.current_total()
        if inc is not None and bound > inc:
            return
        if ri == len(self.p.requests):
            self._branch_tau(0)
            return
        for s in self.p.candidates[self.p.requests[ri].id]:
            self.gamma[ri] = s
            self._branch_gamma(ri + 1)
            self.gamma[ri] = None

    def _type_demand_covered(self, k: str) -> bool:
        pool = self.deployed.get(k, ())
        if not pool:  # decision types are required by some request
            return False
        if len(pool) * self.p.vnf_limit[k] < self.p.demand_all[k]:
            return False
        if self.p.options.no_reuse and k in self.p.required_by_new:
            fresh = sum(1 for i, _s in pool if (k, i) not in self.p.snapshot_ids)
            if not fresh or fresh * self.p.vnf_limit[k] < self.p.demand_new[k]:
                return False
        return True

    # stage (b): instance placements
    def _branch_tau(self, di: int) -> None:
        ended = self.p.type_end.get(di)
        if ended is not None and not self._type_demand_covered(ended):
            return
        bound = self.committed + self.p.suffix_min[di] + self.p.suffix_credit[0]
        if self._expired():
            self.abort_lb = min(self.abort_lb, bound)
            return
        inc = self.incumbent.current_total()
        if inc is not None and bound > inc:
            return
        if di == len(self.p.decisions):
            if self._deployments_complete():
                self._branch_lambda(0, 0)
            return

        d = self.p.decisions[di]
        fresh_blocked = (
            d.fresh_rank is not None
            and d.fresh_rank > 0
            and not self.fresh_open.get((d.vnf_name, d.fresh_rank - 1), False)
        )
        vnf = self.p.instance.catalog.get(d.vnf_name)
        for target in self.p.tau_options(d):
            delta = d.contrib[target]
            if target is None:
                self._commit_tau(d, None, delta)
                self._branch_tau(di + 1)
                self._undo_tau(d, None, delta)
                continue
            if fresh_blocked:
                continue  # fresh instances activate in identifier order
            if self.server_load[target] + vnf.resource_req > self.p.server_limit[target]:
                continue
            self._commit_tau(d, target, delta)
            self._branch_tau(di + 1)
            self._undo_tau(d, target, delta)

    def _commit_tau(self, d: _Decision, target, delta: int) -> None:
        self.committed += delta
        if target is not None:
            key = (d.vnf_name, d.instance_id)
            self.tau[key] = target
            self.deployed.setdefault(d.vnf_name, []).append((d.instance_id, target))
            self.server_load[target] += self.p.instance.catalog.get(d.vnf_name).resource_req
            if d.fresh_rank is not None:
                self.fresh_open[(d.vnf_name, d.fresh_rank)] = True

    def _undo_tau(self, d: _Decision, target, delta: int) -> None:
        self.committed -= delta
        if target is not None:
            del self.tau[(d.vnf_name, d.instance_id)]
            self.deployed[d.vnf_name].pop()
            self.server_load[target] -= self.p.instance.catalog.get(d.vnf_name).resource_req
            if d.fresh_rank is not None:
                self.fresh_open[(d.vnf_name, d.fresh_rank)] = False

    def _deployments_complete(self) -> bool:
        for k in self.p.instance.required_types():
            if not self.deployed.get(k):
                return False
        if self.p.options.no_reuse:
            for k in self.p.required_by_new:
                if not any(
                    (k, i) not in self.p.snapshot_ids for i, _s in self.deployed[k]
                ):
                    return False
        return True

    # stage (c): chain assignments, then routing of the finished request
    def _branch_lambda(self, ri: int, pos: int) -> None:
        bound = self.committed + self.p.suffix_credit[ri]
        if self._expired():
            self.abort_lb = min(self.abort_lb, bound)
            return
        inc = self.incumbent.current_total()
        if inc is not None and bound > inc:
            return
        if ri == len(self.p.requests):
            self._offer_leaf()
            return
        r = self.p.requests[ri]
        if pos == len(r.chain):
            self._route_and_descend(ri)
            return
        k = r.chain[pos]
        no_reuse_blocked = self.p.options.no_reuse and r.status == STATUS_NEW
        for i, s in self.deployed.get(k, ()):
            if no_reuse_blocked and (k, i) in self.p.snapshot_ids:
                continue
            if self.inst_load.get((k, i), 0) + r.traffic > self.p.vnf_limit[k]:
                continue
            self.assign[(r.id, k)] = (s, i)
            self.inst_load[(k, i)] = self.inst_load.get((k, i), 0) + r.traffic
            self._branch_lambda(ri, pos + 1)
            self.inst_load[(k, i)] -= r.traffic
            del self.assign[(r.id, k)]

    def _route_and_descend(self, ri: int) -> None:
        p = self.p
        r = p.requests[ri]
        net = p.net
        cs = self.gamma[ri]
        hosts = [self.assign[(r.id, k)][0] for k in r.chain]
        links = {net.link(cs, hosts[0])}
        for a, b in zip(hosts, hosts[1:]):
            links.add(net.link(a, b))
        links.add(net.link(hosts[-1], r.user))

        delay = 0
        route_cost = 0
        for a, b in links:
            if a == b:
                continue
            if self.link_load.get((a, b), 0) + r.traffic > p.link_limit[(a, b)]:
                return
            delay += r.traffic * net.delay_between(a, b)
            route_cost += r.traffic * net.cost_between(a, b)
        for k in r.chain:
            s, _i = self.assign[(r.id, k)]
            delay += r.traffic * p.instance.catalog.get(k).processing_delay[s]
        if delay > r.delay_budget:
            return

        for a, b in links:
            if a != b:
                self.link_load[(a, b)] = self.link_load.get((a, b), 0) + r.traffic
        self.routes[r.id] = frozenset(links)
        delta = route_cost - p.credit[r.id]
        self.committed += delta

        self._branch_lambda(ri + 1, 0)

        self.committed -= delta
        del self.routes[r.id]
        for a, b in links:
            if a != b:
                self.link_load[(a, b)] -= r.traffic

    def _offer_leaf(self) -> None:
        total = self.committed
        p = self.p

        def plan_factory() -> PlacementPlan:
            deployment = {(k, i, s) for (k, i), s in self.tau.items()} | set(p.frozen)
            return PlacementPlan(
                content_server=frozenset(
                    (r.id, self.gamma[ri]) for ri, r in enumerate(p.requests)
                ),
                deployment=frozenset(deployment),
                assignment=frozenset(
                    (f, s, k, i) for (f, k), (s, i) in self.assign.items()
                ),
                routes=dict(self.routes),
            )

        def key_factory(plan: PlacementPlan) -> tuple:
            return plan_vector(p.instance, plan, p.gtlp_vars)

        self.incumbent.offer(total, plan_factory, key_factory)


def solve_exact(instance: ProblemInstance, options: SolveOptions | None = None) -> SolveResult:
    """Provably optimal plan, or infeasible, or the best incumbent when the
    time limit strikes. Equal-cost optima resolve to the lexicographically
    smallest canonical variable vector, so results are unique and identical
    for any worker count."""
    options = options or SolveOptions()
    problem = _Problem(instance, options)
    incumbent = _Incumbent()
    start = time.monotonic()
    deadline = start + options.time_limit

    if problem.requests and options.parallel_workers > 1:
        firsts = problem.candidates[problem.requests[0].id]
        workers = [_Worker(problem, incumbent, deadline) for _ in firsts]
        with ThreadPoolExecutor(max_workers=options.parallel_workers) as pool:
            futures = [
                pool.submit(w.run, first) for w, first in zip(workers, firsts)
            ]
            for fut in futures:
                fut.result()
    else:
        workers = [_Worker(problem, incumbent, deadline)]
        workers[0].run(None)

    wall = time.monotonic() - start
    nodes = sum(w.nodes for w in workers)
    aborted = any(w.aborted for w in workers)
    abort_lb = min((w.abort_lb for w in workers), default=math.inf)

    stats = SolveStats(nodes=nodes, incumbent_updates=incumbent.updates, wall_time=wall)
    if incumbent.plan is None:
        if aborted:
            return SolveResult(STATUS_TIME_LIMIT, None, None, stats)
        return SolveResult(STATUS_INFEASIBLE, None, None, stats)

    breakdown = _costs.total_objective(
        instance, incumbent.plan, clamp_instantiation=options.clamp_instantiation
    )
    if aborted:
        lb = min(abort_lb, incumbent.total)
        stats.gap = incumbent.total - lb if lb != math.inf else None
        return SolveResult(STATUS_TIME_LIMIT, incumbent.plan, breakdown, stats)
    return SolveResult(STATUS_OPTIMAL, incumbent.plan, breakdown, stats)


def brute_force(
    instance: ProblemInstance,
    options: SolveOptions | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> SolveResult:
    """Exhaustive oracle: enumerate every content-server, placement and
    assignment combination, derive routes, keep what ``check_feasibility``
    accepts and minimize ``total_objective`` under the same tie-break as
    ``solve_exact``.

    Assignments are enumerated over deployed instances only; anything else
    would fail the deployment constraint the checker applies anyway.
    """
    options = options or SolveOptions()
    problem = _Problem(instance, options)
    p = problem

    size = 1
    for r in p.requests:
        size *= max(1, len(p.candidates[r.id]))
    for _d in p.decisions:
        size *= 1 + len(p.servers)
    for r in p.requests:
        for k in r.chain:
            size *= max(1, len(instance.catalog.get(k).instances))
    if size > cap:
        raise TooLargeError(f"decision space {size} exceeds enumeration cap {cap}")

    start = time.monotonic()
    best: tuple[int, tuple, PlacementPlan] | None = None
    nodes = 0
    updates = 0

    gamma_domains = [p.candidates[r.id] for r in p.requests]
    required = instance.required_types()

    def tau_combos(di: int, fresh_used: dict[str, int]):
        if di == len(p.decisions):
            yield {}
            return
        d = p.decisions[di]
        blocked = (
            d.fresh_rank is not None and d.fresh_rank > fresh_used.get(d.vnf_name, 0)
        )
        for target in (None,) + tuple(p.servers):
            if target is not None and blocked:
                continue
            if target is not None and d.fresh_rank is not None:
                fresh_used[d.vnf_name] = fresh_used.get(d.vnf_name, 0) + 1
            for rest in tau_combos(di + 1, fresh_used):
                combo = {(d.vnf_name, d.instance_id): target} if target else {}
                combo.update(rest)
                yield combo
            if target is not None and d.fresh_rank is not None:
                fresh_used[d.vnf_name] -= 1

    for gamma in itertools.product(*gamma_domains) if p.requests else [()]:
        content = {r.id: s for r, s in zip(p.requests, gamma)}
        for tau in tau_combos(0, {}):
            deployed: dict[str, list[tuple[int, str]]] = {}
            for (k, i), s in sorted(tau.items()):
                deployed.setdefault(k, []).append((i, s))
            if any(not deployed.get(k) for k in required):
                continue
            lam_domains = []
            feasible_domains = True
            for r in p.requests:
                for k in r.chain:
                    pool = deployed.get(k, [])
                    if options.no_reuse and r.status == STATUS_NEW:
                        pool = [
                            (i, s) for i, s in pool if (k, i) not in p.snapshot_ids
                        ]
                    if not pool:
                        feasible_domains = False
                        break
                    lam_domains.append(((r.id, k), pool))
                if not feasible_domains:
                    break
            if not feasible_domains:
                continue
            for picks in itertools.product(*(dom for _key, dom in lam_domains)):
                nodes += 1
                assignment = {
                    key: (s, i)
                    for (key, _dom), (i, s) in zip(lam_domains, picks)
                }
                routes = derive_routes(instance, content, assignment)
                plan = PlacementPlan(
                    content_server=frozenset(content.items()),
                    deployment=frozenset(
                        {(k, i, s) for (k, i), s in tau.items()} | set(p.frozen)
                    ),
                    assignment=frozenset(
                        (f, s, k, i) for (f, k), (s, i) in assignment.items()
                    ),
                    routes=routes,
                )
                if not check_feasibility(instance, plan).feasible:
                    continue
                total = _costs.total_objective(
                    instance, plan, clamp_instantiation=options.clamp_instantiation
                ).total
                if best is not None and total > best[0]:
                    continue
                key = plan_vector(instance, plan, p.gtlp_vars)
                if best is None or (total, key) < (best[0], best[1]):
                    best = (total, key, plan)
                    updates += 1

    wall = time.monotonic() - start
    stats = SolveStats(nodes=nodes, incumbent_updates=updates, wall_time=wall)
    if best is None:
        return SolveResult(STATUS_INFEASIBLE, None, None, stats)
    total, _key, plan = best
    breakdown = _costs.total_objective(
        instance, plan, clamp_instantiation=options.clamp_instantiation
    )
    return SolveResult(STATUS_OPTIMAL, plan, breakdown, stats)
