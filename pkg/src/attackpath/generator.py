"""Synthetic exercise networks.

Hosts sit in compartments arranged as a tree, with an external attacker
machine talking to the root compartment. Connectivity is dense inside a
compartment and sparse between parent and child compartments. The default
sizes follow a 46-host exercise range: 4 Linux servers, 7 Windows servers,
30 Windows clients and 5 network appliances in four compartments.

With ``guarantee_path`` a chain of exploits is planted from the attacker
to the goal host before distractor exploits are added. Each planted step is
launched from the attacker machine and relayed through the hosts taken so
far.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .connectivity import DEFAULT_RELAY_PORT, ConnectivityGraph
from .errors import AttackPathError
from .model import AttackState, ConnRequirement, Direction, Privilege, ShellRef
from .scenario import Exploit, ExploitKind, GroundTruth, Outcome, Scenario
from .sim_env import NoiseModel, derive_confidence, with_confidences

ATTACKER = "kali"

SERVICE_PORTS = {
    "lin": (22, 80),
    "srv": (80, 445, 3389),
    "cli": (445, 3389),
    "app": (22, 443),
}


@dataclass(frozen=True)
class GeneratorConfig:
    linux_servers: int = 4
    windows_servers: int = 7
    clients: int = 30
    appliances: int = 5
    compartments: int = 4
    exploits_per_host: tuple[int, int] = (0, 2)
    confidence_range: tuple[float, float] = (0.3, 0.95)
    intra_density: float = 0.6
    inter_density: float = 0.1
    multi_outcome_rate: float = 0.15
    guarantee_path: bool = True
    planted_path_length: int = 3
    max_exploits: int | None = None
    noise: str = "exact"
    latency: tuple[float, float] = (900.0, 300.0)
    flaky_session: float = 0.0
    relay_port: int = DEFAULT_RELAY_PORT
    seed: int = 0

    @property
    def host_count(self) -> int:
        return self.linux_servers + self.windows_servers + self.clients + self.appliances


def small_config(seed: int = 0, **overrides) -> GeneratorConfig:
    """Oracle-sized instances: 4 target hosts plus the attacker, at most 8 exploits."""
    base = dict(linux_servers=1, windows_servers=1, clients=1, appliances=1, compartments=2,
                exploits_per_host=(1, 2), max_exploits=8, planted_path_length=2,
                intra_density=0.7, inter_density=0.5, seed=seed)
    base.update(overrides)
    return GeneratorConfig(**base)


def _check(config: GeneratorConfig) -> None:
    counts = (config.linux_servers, config.windows_servers, config.clients, config.appliances)
    if min(counts) < 0 or config.compartments < 1:
        raise AttackPathError("UNSATISFIABLE_CONFIG", "host and compartment counts must be non-negative")
    if config.host_count < 1:
        raise AttackPathError("UNSATISFIABLE_CONFIG", "need at least one host")
    lo, hi = config.exploits_per_host
    if lo < 0 or hi < lo:
        raise AttackPathError("UNSATISFIABLE_CONFIG", f"bad exploits_per_host {config.exploits_per_host}")
    if config.guarantee_path:
        if hi == 0 or (config.max_exploits is not None and config.max_exploits < config.planted_path_length):
            raise AttackPathError("UNSATISFIABLE_CONFIG", "guarantee_path needs room for planted exploits")
        if config.planted_path_length < 1:
            raise AttackPathError("UNSATISFIABLE_CONFIG", "planted_path_length must be >= 1")


@dataclass
class _Builder:
    config: GeneratorConfig
    rng: np.random.Generator
    hosts: list[str] = field(default_factory=list)
    klass: dict[str, str] = field(default_factory=dict)
    compartment: dict[str, int] = field(default_factory=dict)
    parent: dict[int, int] = field(default_factory=dict)
    edges: set[tuple[str, str, int]] = field(default_factory=set)
    exploits: list[Exploit] = field(default_factory=list)
    truth: dict[str, GroundTruth] = field(default_factory=dict)

    def members(self, c: int) -> list[str]:
        return [h for h in self.hosts if self.compartment[h] == c]

    def chain_to(self, c: int) -> list[int]:
        chain = [c]
        while chain[-1] in self.parent:
            chain.append(self.parent[chain[-1]])
        return chain[::-1]

    def p(self) -> float:
        lo, hi = self.config.confidence_range
        return round(float(self.rng.uniform(lo, hi)), 3)

    def add_exploit(self, exploit: Exploit) -> None:
        self.exploits.append(exploit)
        self.truth[exploit.id] = GroundTruth(
            p_true=self.p(), latency=self.config.latency, flaky_session=self.config.flaky_session)

    def layout(self) -> None:
        cfg, rng = self.config, self.rng
        n = cfg.compartments
        for c in range(1, n):
            self.parent[c] = 0 if c == 1 else int(rng.integers(1, c))
        servers = list(range(min(2, n)))
        clients = list(range(2, n)) or [n - 1]
        for prefix, count, where in (("app", cfg.appliances, [0]), ("lin", cfg.linux_servers, servers),
                                     ("srv", cfg.windows_servers, servers[-1:]), ("cli", cfg.clients, clients)):
            for i in range(count):
                h = f"{prefix}{i + 1:02d}"
                self.hosts.append(h)
                self.klass[h] = prefix
                self.compartment[h] = int(where[i % len(where)]) if prefix != "cli" else int(rng.choice(where))

    def connect(self) -> None:
        cfg, rng, relay = self.config, self.rng, self.config.relay_port
        for h in self.members(0):
            for port in SERVICE_PORTS[self.klass[h]]:
                self.edges.add((ATTACKER, h, port))
            self.edges.add((h, ATTACKER, relay))
        for c in range(cfg.compartments):
            group = self.members(c)
            for a in group:
                for b in group:
                    if a != b and rng.random() < cfg.intra_density:
                        for port in (*SERVICE_PORTS[self.klass[b]], relay):
                            self.edges.add((a, b, port))
        for child, par in sorted(self.parent.items()):
            for a in self.members(par):
                for b in self.members(child):
                    if rng.random() < cfg.inter_density:
                        for port in (*SERVICE_PORTS[self.klass[b]], relay):
                            self.edges.add((a, b, port))
                    if rng.random() < cfg.inter_density / 2:
                        self.edges.add((b, a, relay))

    def plant(self) -> ShellRef:
        """Plant a guaranteed chain and return the goal shell."""
        cfg, rng, relay = self.config, self.rng, self.config.relay_port
        populated = [c for c in range(cfg.compartments) if self.members(c)]
        deepest = max(populated, key=lambda c: (len(self.chain_to(c)), -c))
        chain = [c for c in self.chain_to(deepest) if self.members(c)][: cfg.planted_path_length]
        picked: list[str] = []
        for i in range(cfg.planted_path_length):
            c = chain[min(i, len(chain) - 1)]
            pool = [h for h in self.members(c) if h not in picked] or [h for h in self.hosts if h not in picked]
            if not pool:
                break
            picked.append(str(rng.choice(pool)))
        prev = ATTACKER
        for i, h in enumerate(picked):
            port = int(rng.choice(SERVICE_PORTS[self.klass[h]]))
            if i > 0:
                self.edges.add((ATTACKER, picked[0], relay))
                for a, b in zip(picked[: i - 1], picked[1:i]):
                    self.edges.add((a, b, relay))
            self.edges.add((prev, h, port))
            prev = h
            self.add_exploit(Exploit.simple(
                f"{h}-p", ShellRef(ATTACKER, Privilege.PRIV), [ShellRef(h, Privilege.PRIV)], 0.0,
                conn=[ConnRequirement(h, port, Direction.FWD)]))
        return ShellRef(picked[-1], Privilege.PRIV)

    def distractors(self) -> None:
        cfg, rng = self.config, self.rng
        lo, hi = cfg.exploits_per_host
        kali = ShellRef(ATTACKER, Privilege.PRIV)
        for h in self.hosts:
            for j in range(int(rng.integers(lo, hi + 1))):
                if cfg.max_exploits is not None and len(self.exploits) >= cfg.max_exploits:
                    return
                eid = f"{h}-x{j}"
                roll = rng.random()
                if roll < cfg.multi_outcome_rate and len(self.hosts) > 1:
                    self.add_exploit(self.credential_reuse(eid, h))
                elif roll < cfg.multi_outcome_rate + 0.25:
                    self.add_exploit(Exploit.simple(
                        eid, ShellRef(h, Privilege.UNPRIV), [ShellRef(h, Privilege.PRIV)], 0.0,
                        kind=ExploitKind.CODE_EXECUTION))
                else:
                    port = int(rng.choice(SERVICE_PORTS[self.klass[h]]))
                    conn = [ConnRequirement(h, port, Direction.FWD)]
                    if rng.random() < 0.3:
                        conn.append(ConnRequirement(h, cfg.relay_port, Direction.REV))
                    priv = Privilege.PRIV if rng.random() < 0.4 else Privilege.UNPRIV
                    self.add_exploit(Exploit.simple(eid, kali, [ShellRef(h, priv)], 0.0, conn=conn))

    def credential_reuse(self, eid: str, h: str) -> Exploit:
        """Dumped credentials from ``h`` tried against neighbours; one outcome per target."""
        rng = self.rng
        near = [x for x in self.members(self.compartment[h]) if x != h] or [x for x in self.hosts if x != h]
        k = min(len(near), int(rng.integers(2, 4)))
        targets = sorted(str(t) for t in rng.choice(near, size=k, replace=False))
        raw = rng.dirichlet(np.ones(k))
        # floor to a 1e-6 grid so the remainder left for the last weight stays >= 0
        weights = [math.floor(float(w) * 1e6) / 1e6 for w in raw[:-1]]
        weights.append(1.0 - sum(weights))
        outcomes = tuple(
            Outcome(frozenset({ShellRef(t, Privilege.PRIV if rng.random() < 0.5 else Privilege.UNPRIV)}), w)
            for t, w in zip(targets, weights))
        conn = frozenset(ConnRequirement(t, 22 if self.klass[t] in ("lin", "app") else 445, Direction.FWD)
                         for t in targets)
        shell = ShellRef(h, Privilege.PRIV)
        return Exploit(eid, frozenset({shell}), shell, conn, outcomes, 0.0, ExploitKind.CREDENTIAL_DUMP)


def generate_scenario(config: GeneratorConfig | None = None) -> Scenario:
    """Deterministic in ``config.seed``."""
    config = config or GeneratorConfig()
    _check(config)
    b = _Builder(config, np.random.default_rng(config.seed))
    b.layout()
    b.connect()
    if config.guarantee_path:
        goal = b.plant()
    else:
        leaf = max(range(config.compartments), key=lambda c: (len(b.chain_to(c)) if b.members(c) else -1, -c))
        goal = ShellRef(str(b.rng.choice(b.members(leaf))), Privilege.PRIV)
    b.distractors()

    hosts = (ATTACKER, *b.hosts)
    scenario = Scenario(
        hosts=hosts,
        connectivity=ConnectivityGraph.build(hosts, sorted(b.edges)),
        exploits=tuple(b.exploits),
        initial_state=AttackState.of((ATTACKER, "priv")),
        goal=AttackState.of(goal),
        relay_port=config.relay_port,
        ground_truth=b.truth,
    )
    confidences = derive_confidence(b.truth, NoiseModel.parse(config.noise), b.rng)
    return with_confidences(scenario, {k: round(v, 4) for k, v in confidences.items()})
