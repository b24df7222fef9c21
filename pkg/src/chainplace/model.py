"""Domain types, instance validation, constraint checking and plan diffing.

Unit conventions used throughout the toolkit:

* money is held as integer micro-money (1 money unit == 1_000_000 micro),
* delays are integer microseconds,
* traffic, bandwidth and processing resources are integer abstract units.

All types are immutable after construction and safe to share between
threads; every operation in this module is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import IndexMismatchError

Link = tuple[str, str]

STATUS_EXISTING = "existing"
STATUS_NEW = "new"


@dataclass(frozen=True)
class Network:
    """Full logical mesh of replica servers and end-user nodes.

    ``bandwidth``, ``link_cost`` and ``link_delay`` are dense square matrices
    indexed by the node order ``servers + users``. Costs are micro-money per
    traffic unit, delays microseconds. The matrices are symmetric; the cost
    and delay diagonals are zero (a co-located hop is free), the bandwidth
    diagonal is ignored.
    """

    servers: tuple[str, ...]
    users: tuple[str, ...]
    bandwidth: tuple[tuple[int, ...], ...]
    link_cost: tuple[tuple[int, ...], ...]
    link_delay: tuple[tuple[int, ...], ...]
    server_capacity: Mapping[str, int]
    server_unit_cost: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "servers", tuple(self.servers))
        object.__setattr__(self, "users", tuple(self.users))
        for name in ("bandwidth", "link_cost", "link_delay"):
            rows = tuple(tuple(row) for row in getattr(self, name))
            object.__setattr__(self, name, rows)
        object.__setattr__(self, "server_capacity", dict(self.server_capacity))
        object.__setattr__(self, "server_unit_cost", dict(self.server_unit_cost))
        object.__setattr__(
            self, "_pos", {n: i for i, n in enumerate(self.servers + self.users)}
        )

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.servers + self.users

    def position(self, node: str) -> int:
        try:
            return self._pos[node]
        except KeyError:
            raise IndexMismatchError(f"unknown node {node!r}") from None

    def has_node(self, node: str) -> bool:
        return node in self._pos

    def link(self, a: str, b: str) -> Link:
        """Canonical undirected link: endpoints ordered by node position."""
        if self.position(a) <= self.position(b):
            return (a, b)
        return (b, a)

    def cost_between(self, a: str, b: str) -> int:
        return self.link_cost[self.position(a)][self.position(b)]

    def delay_between(self, a: str, b: str) -> int:
        return self.link_delay[self.position(a)][self.position(b)]

    def bandwidth_between(self, a: str, b: str) -> int:
        return self.bandwidth[self.position(a)][self.position(b)]


@dataclass(frozen=True)
class VnfType:
    """One VNF type of the catalog with its per-server delay and per-pair
    migration price. ``capacity`` is the traffic the type can process,
    ``resource_req`` the server resources one instance consumes."""

    name: str
    license_cost: int
    capacity: int
    resource_req: int
    instances: tuple[int, ...]
    processing_delay: Mapping[str, int]
    migration_cost: Mapping[tuple[str, str], int]

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "processing_delay", dict(self.processing_delay))
        object.__setattr__(self, "migration_cost", dict(self.migration_cost))

    def migration(self, src: str, dst: str) -> int:
        if src == dst:
            return 0
        return self.migration_cost[(src, dst)]


@dataclass(frozen=True)
class VnfCatalog:
    types: tuple[VnfType, ...]

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "_by_name", {t.name: t for t in self.types})

    def get(self, name: str) -> VnfType:
        try:
            return self._by_name[name]
        except KeyError:
            raise IndexMismatchError(f"unknown VNF type {name!r}") from None

    def has(self, name: str) -> bool:
        return name in self._by_name

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.types)


@dataclass(frozen=True)
class ServiceRequest:
    """A service request: an ordered VNF chain between the selected content
    server and ``user``. ``current_route`` is the set of links currently
    assigned (empty for new requests)."""

    id: str
    user: str
    chain: tuple[str, ...]
    traffic: int
    delay_budget: int
    candidate_servers: tuple[str, ...]
    status: str = STATUS_NEW
    current_route: frozenset[Link] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))
        object.__setattr__(self, "candidate_servers", tuple(self.candidate_servers))
        object.__setattr__(
            self, "current_route", frozenset(tuple(l) for l in self.current_route)
        )


@dataclass(frozen=True)
class Snapshot:
    """Current deployment map: (type, instance, server) triples."""

    deployed: frozenset[tuple[str, int, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(
            self, "deployed", frozenset(tuple(t) for t in self.deployed)
        )
        servers: dict[tuple[str, int], str] = {}
        for k, i, s in sorted(self.deployed):
            servers.setdefault((k, i), s)
        object.__setattr__(self, "_server_of", servers)

    def server_of(self, vnf_type: str, instance: int) -> str | None:
        return self._server_of.get((vnf_type, instance))

    def has_instance(self, vnf_type: str, instance: int) -> bool:
        return (vnf_type, instance) in self._server_of


EMPTY_SNAPSHOT = Snapshot(frozenset())


@dataclass(frozen=True)
class PlacementPlan:
    """One candidate solution: the four binary decision families.

    The sets intentionally allow states that violate constraints (for example
    two content servers for one request) so that ``check_feasibility`` can
    report on arbitrary plans, not only solver output.
    """

    content_server: frozenset[tuple[str, str]]
    deployment: frozenset[tuple[str, int, str]]
    assignment: frozenset[tuple[str, str, str, int]]
    routes: Mapping[str, frozenset[Link]]

    def __post_init__(self):
        object.__setattr__(
            self, "content_server", frozenset(tuple(t) for t in self.content_server)
        )
        object.__setattr__(
            self, "deployment", frozenset(tuple(t) for t in self.deployment)
        )
        object.__setattr__(
            self, "assignment", frozenset(tuple(t) for t in self.assignment)
        )
        object.__setattr__(
            self,
            "routes",
            {f: frozenset(tuple(l) for l in links) for f, links in self.routes.items()},
        )

    def route(self, request_id: str) -> frozenset[Link]:
        return self.routes.get(request_id, frozenset())

    def servers_for(self, request_id: str) -> tuple[str, ...]:
        return tuple(sorted(s for f, s in self.content_server if f == request_id))

    def assigned(self, request_id: str, vnf_type: str) -> tuple[tuple[str, int], ...]:
        """(server, instance) pairs assigned to ``request_id`` for ``vnf_type``."""
        return tuple(
            sorted((s, i) for f, s, k, i in self.assignment
                   if f == request_id and k == vnf_type)
        )


@dataclass(frozen=True)
class ProblemInstance:
    network: Network
    catalog: VnfCatalog
    requests: tuple[ServiceRequest, ...]
    snapshot: Snapshot = EMPTY_SNAPSHOT
    usage_threshold: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))

    def request(self, request_id: str) -> ServiceRequest:
        for r in self.requests:
            if r.id == request_id:
                return r
        raise IndexMismatchError(f"unknown request {request_id!r}")

    def has_request(self, request_id: str) -> bool:
        return any(r.id == request_id for r in self.requests)

    def required_types(self) -> tuple[str, ...]:
        """VNF types needed by at least one request, in catalog order."""
        needed = {k for r in self.requests for k in r.chain}
        return tuple(t.name for t in self.catalog.types if t.name in needed)

    def usage_limit(self, capacity: int) -> Fraction:
        """Exact usable share of a capacity under the usage threshold."""
        return Fraction(self.usage_threshold) * capacity


@dataclass(frozen=True)
class DeploymentDelta:
    """Classification of every instance across snapshot and plan."""

    reused: tuple[tuple[str, int, str], ...]
    migrated: tuple[tuple[str, int, str, str], ...]
    instantiated: tuple[tuple[str, int, str], ...]
    removed: tuple[tuple[str, int, str], ...]


@dataclass(frozen=True)
class Violation:
    code: str
    subject: tuple
    detail: str = ""

    def __str__(self):
        where = ",".join(str(x) for x in self.subject)
        return f"{self.code}({where})" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> tuple[str, ...]:
        return tuple(v.code for v in self.violations)

    def has(self, code: str, *subject) -> bool:
        return any(
            v.code == code and (not subject or v.subject == tuple(subject))
            for v in self.violations
        )


@dataclass(frozen=True)
class ConstraintViolation:
    constraint: str
    subject: tuple
    detail: str = ""

    def __str__(self):
        where = ",".join(str(x) for x in self.subject)
        return f"eq{self.constraint}[{where}]" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class ConstraintReport:
    violations: tuple[ConstraintViolation, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    def constraints(self) -> tuple[str, ...]:
        return tuple(v.constraint for v in self.violations)

    def has(self, constraint: str, *subject) -> bool:
        return any(
            v.constraint == constraint and (not subject or v.subject == tuple(subject))
            for v in self.violations
        )


def _check_matrix(out, name, matrix, n, zero_diagonal):
    if len(matrix) != n or any(len(row) != n for row in matrix):
        out.append(Violation("MATRIX_SHAPE", (name,), f"expected {n}x{n}"))
        return
    for i in range(n):
        for j in range(i, n):
            if matrix[i][j] != matrix[j][i]:
                out.append(Violation("MATRIX_NOT_SYMMETRIC", (name, i, j)))
            if matrix[i][j] < 0:
                out.append(Violation("NEGATIVE_ENTRY", (name, i, j)))
        if zero_diagonal and matrix[i][i] != 0:
            out.append(Violation("NONZERO_DIAGONAL", (name, i)))


def validate_instance(instance: ProblemInstance) -> ValidationReport:
    """Check every structural invariant; violations come back as report
    entries with machine-readable codes, never as exceptions."""
    out: list[Violation] = []
    net = instance.network
    nodes = net.servers + net.users

    seen: set[str] = set()
    for node in nodes:
        if node in seen:
            out.append(Violation("DUPLICATE_NODE", (node,)))
        seen.add(node)

    n = len(nodes)
    _check_matrix(out, "bandwidth", net.bandwidth, n, zero_diagonal=False)
    _check_matrix(out, "link_cost", net.link_cost, n, zero_diagonal=True)
    _check_matrix(out, "link_delay", net.link_delay, n, zero_diagonal=True)

    for s in net.servers:
        cap = net.server_capacity.get(s)
        if cap is None:
            out.append(Violation("MISSING_SERVER_CAPACITY", (s,)))
        elif cap <= 0:
            out.append(Violation("NONPOSITIVE_CAPACITY", (s,), f"G={cap}"))
        cost = net.server_unit_cost.get(s)
        if cost is None:
            out.append(Violation("MISSING_SERVER_COST", (s,)))
        elif cost < 0:
            out.append(Violation("NEGATIVE_COST", (s,), f"rho={cost}"))

    required = {k for r in instance.requests for k in r.chain}
    seen_types: set[str] = set()
    for t in instance.catalog.types:
        if t.name in seen_types:
            out.append(Violation("DUPLICATE_VNF_TYPE", (t.name,)))
        seen_types.add(t.name)
        if t.license_cost < 0 or t.capacity < 0 or t.resource_req < 0:
            out.append(Violation("NEGATIVE_COST", (t.name,)))
        if t.name in required and len(t.instances) < 1:
            out.append(Violation("EMPTY_INSTANCE_POOL", (t.name,)))
        if len(set(t.instances)) != len(t.instances):
            out.append(Violation("DUPLICATE_INSTANCE_ID", (t.name,)))
        for s in net.servers:
            if s not in t.processing_delay:
                out.append(Violation("MISSING_PROCESSING_DELAY", (t.name, s)))
            elif t.processing_delay[s] < 0:
                out.append(Violation("NEGATIVE_ENTRY", ("processing_delay", t.name, s)))
            for d in net.servers:
                phi = t.migration_cost.get((s, d))
                if phi is None:
                    out.append(Violation("MISSING_MIGRATION_COST", (t.name, s, d)))
                elif s == d and phi != 0:
                    out.append(Violation("NONZERO_SELF_MIGRATION", (t.name, s)))
                elif phi < 0:
                    out.append(Violation("NEGATIVE_ENTRY", ("migration_cost", t.name, s, d)))

    seen_ids: set[str] = set()
    for r in instance.requests:
        if r.id in seen_ids:
            out.append(Violation("DUPLICATE_REQUEST_ID", (r.id,)))
        seen_ids.add(r.id)
        if r.user not in net.users:
            out.append(Violation("UNKNOWN_USER", (r.id, r.user)))
        if not r.chain:
            out.append(Violation("EMPTY_CHAIN", (r.id,)))
        if len(set(r.chain)) != len(r.chain):
            out.append(Violation("DUPLICATE_CHAIN_TYPE", (r.id,)))
        for k in r.chain:
            if not instance.catalog.has(k):
                out.append(Violation("UNKNOWN_VNF_TYPE", (r.id, k)))
        if not r.candidate_servers:
            out.append(Violation("NO_CANDIDATE_SERVER", (r.id,)))
        for s in r.candidate_servers:
            if s not in net.servers:
                out.append(Violation("UNKNOWN_SERVER", (r.id, s)))
        if r.traffic < 0:
            out.append(Violation("NEGATIVE_ENTRY", ("traffic", r.id)))
        if r.delay_budget < 0:
            out.append(Violation("NEGATIVE_ENTRY", ("delay_budget", r.id)))
        if r.status not in (STATUS_EXISTING, STATUS_NEW):
            out.append(Violation("BAD_STATUS", (r.id, r.status)))
        if r.status == STATUS_NEW and r.current_route:
            out.append(Violation("NEW_REQUEST_HAS_ROUTE", (r.id,)))
        for a, b in r.current_route:
            if not net.has_node(a) or not net.has_node(b):
                out.append(Violation("UNKNOWN_NODE", (r.id, a, b)))

    placed: dict[tuple[str, int], str] = {}
    for k, i, s in sorted(instance.snapshot.deployed):
        if not instance.catalog.has(k):
            out.append(Violation("UNKNOWN_VNF_TYPE", ("snapshot", k)))
            continue
        if i not in instance.catalog.get(k).instances:
            out.append(Violation("UNKNOWN_INSTANCE", ("snapshot", k, i)))
        if s not in net.servers:
            out.append(Violation("UNKNOWN_SERVER", ("snapshot", s)))
        if (k, i) in placed:
            out.append(Violation("DUPLICATE_DEPLOYMENT", (k, i)))
        placed[(k, i)] = s

    if not (0 < instance.usage_threshold <= 1):
        out.append(
            Violation("USAGE_THRESHOLD_RANGE", (instance.usage_threshold,))
        )

    return ValidationReport(tuple(out))


def ensure_plan_matches(instance: ProblemInstance, plan: PlacementPlan) -> None:
    """Raise IndexMismatchError when the plan references anything outside the
    instance's index sets."""
    net = instance.network
    request_ids = {r.id for r in instance.requests}
    servers = set(net.servers)
    for f, s in plan.content_server:
        if f not in request_ids:
            raise IndexMismatchError(f"plan selects content server for unknown request {f!r}")
        if s not in servers:
            raise IndexMismatchError(f"plan selects unknown server {s!r}")
    for k, i, s in plan.deployment:
        if not instance.catalog.has(k):
            raise IndexMismatchError(f"plan deploys unknown VNF type {k!r}")
        if i not in instance.catalog.get(k).instances:
            raise IndexMismatchError(f"plan deploys unknown instance {(k, i)!r}")
        if s not in servers:
            raise IndexMismatchError(f"plan deploys on unknown server {s!r}")
    for f, s, k, i in plan.assignment:
        if f not in request_ids:
            raise IndexMismatchError(f"plan assigns VNF to unknown request {f!r}")
        if s not in servers:
            raise IndexMismatchError(f"plan assigns VNF on unknown server {s!r}")
        if not instance.catalog.has(k) or i not in instance.catalog.get(k).instances:
            raise IndexMismatchError(f"plan assigns unknown VNF instance {(k, i)!r}")
    for f, links in plan.routes.items():
        if f not in request_ids:
            raise IndexMismatchError(f"plan routes unknown request {f!r}")
        for a, b in links:
            if not net.has_node(a) or not net.has_node(b):
                raise IndexMismatchError(f"plan routes over unknown link {(a, b)!r}")


def normalize_route(net: Network, links: Iterable[Link]) -> frozenset[Link]:
    """Canonicalize an undirected link set: endpoints ordered by node position."""
    return frozenset(net.link(a, b) for a, b in links)


def check_feasibility(
    instance: ProblemInstance,
    plan: PlacementPlan,
    deployment_scope: str = "required",
) -> ConstraintReport:
    """Evaluate each constraint family of the placement program on a plan.

    ``deployment_scope`` controls the at-least-one-deployment rule: with
    ``"required"`` (default) only types some request needs must be deployed,
    with ``"all"`` every catalog type must be.
    """
    ensure_plan_matches(instance, plan)
    net = instance.network
    out: list[ConstraintViolation] = []

    # (6)/(7): exactly one content server, chosen among the capable ones
    for r in instance.requests:
        chosen = plan.servers_for(r.id)
        if len(chosen) != 1:
            out.append(ConstraintViolation("6", (r.id,), f"{len(chosen)} servers selected"))
        for s in chosen:
            if s not in r.candidate_servers:
                out.append(ConstraintViolation("7", (r.id, s), "not a candidate server"))

    # (8): one instance of each required type per request
    for r in instance.requests:
        for k in r.chain:
            count = len(plan.assigned(r.id, k))
            if count != 1:
                out.append(ConstraintViolation("8", (r.id, k), f"{count} instances assigned"))

    # (9): assigned instances must be deployed where they are used
    for f, s, k, i in sorted(plan.assignment):
        if (k, i, s) not in plan.deployment:
            out.append(ConstraintViolation("9", (f, s, k, i), "assigned but not deployed"))

    # (10): at least one deployment per type in scope
    if deployment_scope == "all":
        scope = instance.catalog.names
    else:
        scope = instance.required_types()
    deployed_types = {k for k, _, _ in plan.deployment}
    for k in scope:
        if k not in deployed_types:
            out.append(ConstraintViolation("10", (k,), "no instance deployed"))

    # (11): each instance lives on at most one server
    locations: dict[tuple[str, int], set[str]] = {}
    for k, i, s in plan.deployment:
        locations.setdefault((k, i), set()).add(s)
    for (k, i), servers in sorted(locations.items()):
        if len(servers) > 1:
            out.append(ConstraintViolation("11", (k, i), f"on {len(servers)} servers"))

    # (12): server resources
    for s in net.servers:
        load = sum(
            instance.catalog.get(k).resource_req
            for k, _, srv in plan.deployment
            if srv == s
        )
        limit = instance.usage_limit(net.server_capacity[s])
        if load > limit:
            out.append(ConstraintViolation("12", (s,), f"load {load} > {float(limit):g}"))

    # (13): VNF processing capacity
    inst_load: dict[tuple[str, int, str], int] = {}
    for f, s, k, i in plan.assignment:
        traffic = instance.request(f).traffic
        inst_load[(k, i, s)] = inst_load.get((k, i, s), 0) + traffic
    for (k, i, s), load in sorted(inst_load.items()):
        limit = instance.usage_limit(instance.catalog.get(k).capacity)
        if load > limit:
            out.append(ConstraintViolation("13", (k, i, s), f"load {load} > {float(limit):g}"))

    # (14): link bandwidth, self-links exempt
    link_load: dict[Link, int] = {}
    for r in instance.requests:
        for a, b in normalize_route(net, plan.route(r.id)):
            if a == b:
                continue
            key = (a, b)
            link_load[key] = link_load.get(key, 0) + r.traffic
    for (a, b), load in sorted(link_load.items()):
        limit = instance.usage_limit(net.bandwidth_between(a, b))
        if load > limit:
            out.append(ConstraintViolation("14", (a, b), f"load {load} > {float(limit):g}"))

    # (15)-(17): the chain's links must be assigned, the user link exactly
    for r in instance.requests:
        route = normalize_route(net, plan.route(r.id))
        chosen = plan.servers_for(r.id)
        first, last = r.chain[0], r.chain[-1]

        for cs in chosen:
            for s, _i in plan.assigned(r.id, first):
                if net.link(cs, s) not in route:
                    out.append(ConstraintViolation("15", (r.id, cs, s), "missing chain entry link"))
        for pos in range(len(r.chain) - 1):
            for s, _i in plan.assigned(r.id, r.chain[pos]):
                for t, _j in plan.assigned(r.id, r.chain[pos + 1]):
                    if net.link(s, t) not in route:
                        out.append(
                            ConstraintViolation("16", (r.id, r.chain[pos], s, t), "missing chain link")
                        )
        last_hosts = {s for s, _i in plan.assigned(r.id, last)}
        for s in net.servers:
            has_link = net.link(s, r.user) in route
            if (s in last_hosts) != has_link:
                out.append(
                    ConstraintViolation(
                        "17", (r.id, s), "user link present iff last VNF hosted here"
                    )
                )

    # (18): delay budget; only checkable when the chain is fully assigned
    from .costs import service_delay  # local import to avoid a module cycle

    for r in instance.requests:
        if any(len(plan.assigned(r.id, k)) != 1 for k in r.chain):
            continue  # an (8) violation was already recorded
        delay = service_delay(instance, plan, r.id)
        if delay > r.delay_budget:
            out.append(ConstraintViolation("18", (r.id,), f"{delay} > {r.delay_budget}"))

    return ConstraintReport(tuple(out))


def snapshot_diff(snapshot: Snapshot, plan: PlacementPlan) -> DeploymentDelta:
    """Classify every instance as reused, migrated, instantiated or removed."""
    before: dict[tuple[str, int], str] = {}
    for k, i, s in snapshot.deployed:
        before[(k, i)] = s
    after: dict[tuple[str, int], str] = {}
    for k, i, s in plan.deployment:
        after[(k, i)] = s

    reused, migrated, instantiated, removed = [], [], [], []
    for k, i in sorted(set(before) | set(after)):
        src, dst = before.get((k, i)), after.get((k, i))
        if src is not None and dst is not None:
            if src == dst:
                reused.append((k, i, src))
            else:
                migrated.append((k, i, src, dst))
        elif dst is not None:
            instantiated.append((k, i, dst))
        else:
            removed.append((k, i, src))
    return DeploymentDelta(
        reused=tuple(reused),
        migrated=tuple(migrated),
        instantiated=tuple(instantiated),
        removed=tuple(removed),
    )
