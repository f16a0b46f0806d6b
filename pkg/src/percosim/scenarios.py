"""Scenario library: config documents, the four scenario runners, metrics aggregation.

A scenario config is one JSON object; every run is a pure function of
(config, seed). Schema (all sections optional unless a scenario needs them):

    {
      "scenario":  "stub_iot" | "relay" | "jamming" | "storage",
      "seed":      integer (can be supplied/overridden by the CLI),
      "topology":  {"n", "k", "p", "default_bandwidth", "seed"?}  |  {"edge_file": "path"},
      "routing":   {"max_hops", "max_paths", "probe_window", "rule"},
      "code":      {"k", "m", "c", "delta"},
      "link":      {"latency", "loss", "jam": [{"nodes", "start", "end"}, ...]},
      "timeline":  [{"tick", "kind", ...churn fields...}, ...],
      "traffic":   {"flows", "frames", "payload_bytes", "mode", "fec_overhead",
                    "budget", "source", "dest", "give_up_factor"},
      "relay":     {"earth", "moon", "bandwidth"},
      "storage":   {"local_count", "remote_count", "owner", "radius", "trials"}
    }

`edge_file` is resolved relative to the config file; the prefix `pkg:` reads a
fixture shipped with the package. A generated topology defaults its generator
seed to the run seed, so sweeps explore fresh graphs unless the topology pins
its own seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib.resources import files as _pkg_files
from pathlib import Path
from statistics import fmean

from .errors import (
    ConfigError,
    InsufficientPacketsError,
    ParameterError,
    ProtocolError,
    RoutingError,
)
from .fountain import RobustSolitonParams
from .routing import RoutingParams, SelectionRule, run_routing_phase
from .sim import JamWindow, LinkModel, Simulation
from .storage import disperse, recover
from .topology import (
    ChurnEvent,
    Graph,
    NodeId,
    TopologyParams,
    generate_small_world,
    read_edge_list,
)
from .transport import TransferMode, next_frame

SCENARIO_NAMES = ("stub_iot", "relay", "jamming", "storage")


def fixture_path(name: str) -> Path:
    """Absolute path of a packaged edge-list fixture."""
    return Path(str(_pkg_files("percosim").joinpath("fixtures", name)))


# ---- config sections


@dataclass(frozen=True)
class CodeParams:
    k: int = 32
    m: int = 16
    soliton: RobustSolitonParams = field(default_factory=RobustSolitonParams)


@dataclass(frozen=True)
class TrafficConfig:
    flows: int = 1
    frames: int = 1
    payload_bytes: int | None = None
    mode: TransferMode = TransferMode.FEEDBACK
    fec_overhead: float = 1.5
    budget: int | None = None
    source: NodeId | None = None
    dest: NodeId | None = None
    give_up_factor: int = 50


@dataclass(frozen=True)
class RelayConfig:
    earth: int = 4
    moon: int = 3
    bandwidth: int = 4


@dataclass(frozen=True)
class StorageConfig:
    local_count: int
    remote_count: int
    owner: NodeId | None = None
    radius: int = 1
    trials: int = 50


@dataclass(frozen=True)
class SimConfig:
    scenario: str
    seed: int
    topology: TopologyParams | None = None
    edge_file: Path | None = None
    routing: RoutingParams = field(default_factory=RoutingParams)
    code: CodeParams = field(default_factory=CodeParams)
    link: LinkModel = field(default_factory=LinkModel)
    timeline: tuple[tuple[int, ChurnEvent], ...] = ()
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    relay: RelayConfig = field(default_factory=RelayConfig)
    storage: StorageConfig | None = None

    def with_seed(self, seed: int) -> "SimConfig":
        cfg = replace(self, seed=seed)
        if self.topology is not None and self._topology_seed_floating:
            cfg = replace(cfg, topology=replace(self.topology, seed=seed))
        return cfg

    # set during parsing: whether the topology seed follows the run seed
    _topology_seed_floating: bool = True


# ---- JSON parsing with field-path diagnostics

_MISSING = object()


class _Section:
    def __init__(self, doc, path: str = ""):
        if not isinstance(doc, dict):
            raise ConfigError(path or "<root>", "expected a JSON object")
        self.doc = doc
        self.path = path

    def name(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.doc and self.doc[key] is not None

    def get(self, key: str, kind, default=_MISSING):
        if key not in self.doc or self.doc[key] is None:
            if default is _MISSING:
                raise ConfigError(self.name(key), "required field is missing")
            return default
        value = self.doc[key]
        if kind is int and isinstance(value, bool):
            raise ConfigError(self.name(key), "expected an integer, got a boolean")
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind):
            raise ConfigError(self.name(key), f"expected {kind.__name__}, got {type(value).__name__}")
        return value

    def section(self, key: str) -> "_Section":
        return _Section(self.doc.get(key) or {}, self.name(key))

    def items(self, key: str) -> list:
        value = self.doc.get(key)
        if value is None:
            return []
        if not isinstance(value, list):
            raise ConfigError(self.name(key), "expected a list")
        return value


def _parse_churn(entry: _Section) -> tuple[int, ChurnEvent]:
    tick = entry.get("tick", int)
    kind = entry.get("kind", str)
    if kind == "join":
        links = []
        for j, pair in enumerate(entry.items("links")):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ConfigError(entry.name(f"links[{j}]"), "expected [peer, bandwidth]")
            links.append((pair[0], pair[1]))
        ev = ChurnEvent.join(entry.get("node", int), tuple(links))
    elif kind == "leave":
        ev = ChurnEvent.leave(entry.get("node", int))
    elif kind == "link_up":
        ev = ChurnEvent.link_up(entry.get("u", int), entry.get("v", int))
    elif kind == "link_down":
        ev = ChurnEvent.link_down(entry.get("u", int), entry.get("v", int))
    elif kind == "set_bandwidth":
        ev = ChurnEvent.set_bandwidth(entry.get("u", int), entry.get("v", int),
                                      entry.get("bandwidth", int))
    else:
        raise ConfigError(entry.name("kind"), f"unknown churn kind {kind!r}")
    return tick, ev


def parse_config(doc: dict, base_dir: Path | None = None, seed: int | None = None) -> SimConfig:
    """Validate a scenario document; `seed` (from the CLI) overrides the file."""
    root = _Section(doc)
    scenario = root.get("scenario", str)
    if scenario not in SCENARIO_NAMES:
        raise ConfigError("scenario", f"unknown scenario {scenario!r}; expected one of {SCENARIO_NAMES}")
    if seed is None:
        seed = root.get("seed", int, None)
        if seed is None:
            raise ConfigError("seed", "no seed in the config and none supplied")

    topology = None
    edge_file = None
    topo_floating = True
    topo = root.section("topology")
    if topo.has("edge_file"):
        raw = topo.get("edge_file", str)
        if raw.startswith("pkg:"):
            edge_file = fixture_path(raw[len("pkg:"):])
        else:
            edge_file = (base_dir or Path.cwd()) / raw
        if not edge_file.exists():
            raise ConfigError("topology.edge_file", f"fixture file {edge_file} does not exist")
    elif topo.doc:
        topo_floating = not topo.has("seed")
        try:
            topology = TopologyParams(
                n=topo.get("n", int),
                k=topo.get("k", int),
                p=topo.get("p", float),
                default_bandwidth=topo.get("default_bandwidth", int, 1),
                seed=topo.get("seed", int, seed),
            )
        except ParameterError as exc:
            raise ConfigError("topology", str(exc)) from None

    routing_sec = root.section("routing")
    rule_name = routing_sec.get("rule", str, SelectionRule.LEAST_HOPS.value)
    try:
        rule = SelectionRule(rule_name)
    except ValueError:
        raise ConfigError("routing.rule", f"unknown rule {rule_name!r}") from None
    try:
        routing = RoutingParams(
            max_hops=routing_sec.get("max_hops", int, 6),
            max_paths=routing_sec.get("max_paths", int, 5),
            probe_window=routing_sec.get("probe_window", int, None),
            rule=rule,
        )
    except ParameterError as exc:
        raise ConfigError("routing", str(exc)) from None

    code_sec = root.section("code")
    try:
        code = CodeParams(
            k=code_sec.get("k", int, 32),
            m=code_sec.get("m", int, 16),
            soliton=RobustSolitonParams(
                c=code_sec.get("c", float, 0.03),
                delta=code_sec.get("delta", float, 0.5),
            ),
        )
    except ParameterError as exc:
        raise ConfigError("code", str(exc)) from None
    if code.k < 1 or code.m < 1:
        raise ConfigError("code", f"k and m must be >= 1, got k={code.k} m={code.m}")

    link_sec = root.section("link")
    jams = []
    for i, raw in enumerate(link_sec.items("jam")):
        jam = _Section(raw, link_sec.name(f"jam[{i}]"))
        nodes = jam.items("nodes")
        if not nodes:
            raise ConfigError(jam.name("nodes"), "jam window needs at least one node")
        jams.append(JamWindow(
            nodes=frozenset(nodes),
            start=jam.get("start", int),
            end=jam.get("end", int),
        ))
    try:
        link = LinkModel(
            latency=link_sec.get("latency", int, 1),
            loss=link_sec.get("loss", float, 0.0),
            jam_windows=tuple(jams),
        )
    except ParameterError as exc:
        raise ConfigError("link", str(exc)) from None

    timeline = []
    for i, raw in enumerate(root.items("timeline")):
        timeline.append(_parse_churn(_Section(raw, f"timeline[{i}]")))

    traffic_sec = root.section("traffic")
    mode_name = traffic_sec.get("mode", str, TransferMode.FEEDBACK.value)
    try:
        mode = TransferMode(mode_name)
    except ValueError:
        raise ConfigError("traffic.mode", f"unknown mode {mode_name!r}") from None
    traffic = TrafficConfig(
        flows=traffic_sec.get("flows", int, 1),
        frames=traffic_sec.get("frames", int, 1),
        payload_bytes=traffic_sec.get("payload_bytes", int, None),
        mode=mode,
        fec_overhead=traffic_sec.get("fec_overhead", float, 1.5),
        budget=traffic_sec.get("budget", int, None),
        source=traffic_sec.get("source", int, None),
        dest=traffic_sec.get("dest", int, None),
        give_up_factor=traffic_sec.get("give_up_factor", int, 50),
    )
    if traffic.flows < 0 or traffic.frames < 0:
        raise ConfigError("traffic", "flows and frames must be non-negative")
    if traffic.payload_bytes is not None and not 0 <= traffic.payload_bytes <= code.k * code.m:
        raise ConfigError("traffic.payload_bytes",
                          f"must lie in [0, k*m] = [0, {code.k * code.m}]")
    if traffic.fec_overhead < 1.0:
        raise ConfigError("traffic.fec_overhead", "must be >= 1.0")
    if traffic.give_up_factor < 1:
        raise ConfigError("traffic.give_up_factor", "must be >= 1")

    relay_sec = root.section("relay")
    relay = RelayConfig(
        earth=relay_sec.get("earth", int, 4),
        moon=relay_sec.get("moon", int, 3),
        bandwidth=relay_sec.get("bandwidth", int, 4),
    )
    if relay.earth < 1 or relay.moon < 1 or relay.bandwidth < 1:
        raise ConfigError("relay", "earth, moon, and bandwidth must be >= 1")

    storage = None
    if root.has("storage"):
        st = root.section("storage")
        storage = StorageConfig(
            local_count=st.get("local_count", int),
            remote_count=st.get("remote_count", int),
            owner=st.get("owner", int, None),
            radius=st.get("radius", int, 1),
            trials=st.get("trials", int, 50),
        )
        if storage.trials < 0:
            raise ConfigError("storage.trials", "must be non-negative")

    return SimConfig(
        scenario=scenario,
        seed=seed,
        topology=topology,
        edge_file=edge_file,
        routing=routing,
        code=code,
        link=link,
        timeline=tuple(timeline),
        traffic=traffic,
        relay=relay,
        storage=storage,
        _topology_seed_floating=topo_floating,
    )


def load_config(path, seed: int | None = None) -> SimConfig:
    """Read and validate a config file; JSON syntax errors keep their line info."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(doc, base_dir=path.parent, seed=seed)


# ---- metrics


@dataclass(frozen=True)
class Metrics:
    """Aggregated outcome of one scenario run."""

    scenario: str
    seed: int
    flows: int = 0
    routing_successes: int = 0
    transfers: int = 0
    deliveries: int = 0
    mean_path_count: float | None = None
    mean_hops: float | None = None
    mean_overhead_ratio: float | None = None
    mean_ticks_to_delivery: float | None = None
    packets_sent_total: int = 0
    storage_recovery_rate: float | None = None
    storage_adversary_rate: float | None = None

    def __post_init__(self) -> None:
        for name in ("storage_recovery_rate", "storage_adversary_rate"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} outside [0, 1]: {value}")
        if self.routing_successes > self.flows:
            raise ParameterError("more routing successes than flows")
        if self.deliveries > self.transfers:
            raise ParameterError("more deliveries than transfers")

    @property
    def routing_success_rate(self) -> float | None:
        return None if self.flows == 0 else self.routing_successes / self.flows

    @property
    def delivery_rate(self) -> float | None:
        return None if self.transfers == 0 else self.deliveries / self.transfers

    CSV_FIELDS = (
        "scenario", "seed", "flows", "routing_successes", "routing_success_rate",
        "mean_path_count", "mean_hops", "transfers", "deliveries", "delivery_rate",
        "mean_overhead_ratio", "mean_ticks_to_delivery", "packets_sent_total",
        "storage_recovery_rate", "storage_adversary_rate",
    )

    def to_json(self) -> dict:
        return {name: getattr(self, name) for name in self.CSV_FIELDS}

    def csv_row(self) -> list[str]:
        return [_cell(getattr(self, name)) for name in self.CSV_FIELDS]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


_AGGREGATE_FIELDS = tuple(f for f in Metrics.CSV_FIELDS if f not in ("scenario", "seed"))


def aggregate(rows) -> dict:
    """mean/min/max/count per numeric metric, skipping absent values."""
    out: dict[str, dict] = {}
    for name in _AGGREGATE_FIELDS:
        values = [getattr(r, name) for r in rows if getattr(r, name) is not None]
        if values:
            out[name] = {
                "mean": fmean(values),
                "min": min(values),
                "max": max(values),
                "count": len(values),
            }
    return out


# ---- graph construction


def build_relay_graph(relay: RelayConfig) -> Graph:
    """Layered relay network: ground 0, earth relays, moon relays, lander last.

    Every earth relay sees the ground and every moon relay; every moon relay
    sees the lander, giving min(earth, moon) fully disjoint routes when all
    links are up.
    """
    g = Graph()
    earth = range(1, relay.earth + 1)
    moon = range(relay.earth + 1, relay.earth + relay.moon + 1)
    lander = relay.earth + relay.moon + 1
    for v in range(lander + 1):
        g.add_node(v)
    for e in earth:
        g.add_edge(0, e, relay.bandwidth)
    for e in earth:
        for mo in moon:
            g.add_edge(e, mo, relay.bandwidth)
    for mo in moon:
        g.add_edge(mo, lander, relay.bandwidth)
    return g


def build_graph(config: SimConfig) -> Graph:
    if config.scenario == "relay":
        return build_relay_graph(config.relay)
    if config.edge_file is not None:
        return read_edge_list(config.edge_file)
    if config.topology is not None:
        return generate_small_world(config.topology)
    raise ConfigError("topology", f"scenario {config.scenario!r} needs generator params or an edge_file")


# ---- scenario runners


def _pick_pair(sim: Simulation, traffic: TrafficConfig) -> tuple[NodeId, NodeId] | None:
    if traffic.source is not None and traffic.dest is not None:
        return traffic.source, traffic.dest
    nodes = sorted(sim.graph.nodes)
    if len(nodes) < 2:
        return None
    s, d = sim.rng.sample(nodes, 2)
    return s, d


def _run_flows(config: SimConfig, sim: Simulation, pairs) -> Metrics:
    """Shared flow loop: route, then push the configured frames over the route."""
    traffic = config.traffic
    k, m = config.code.k, config.code.m
    nbytes = traffic.payload_bytes if traffic.payload_bytes is not None else k * m
    flows = routing_ok = transfers = deliveries = sent_total = 0
    path_counts: list[int] = []
    hop_counts: list[int] = []
    overheads: list[float] = []
    ticks: list[int] = []
    for pair in pairs:
        if pair is None:
            continue
        source, dest = pair
        flows += 1
        try:
            route = run_routing_phase(sim, source, dest, config.routing)
        except RoutingError:
            continue
        routing_ok += 1
        path_counts.append(len(route.paths))
        hop_counts.extend(p.hops for p in route.paths)
        frames = [sim.rng.randbytes(nbytes) for _ in range(traffic.frames)]
        results = next_frame(
            sim, route, frames, k, m,
            mode=traffic.mode,
            fec_overhead=traffic.fec_overhead,
            budget=traffic.budget,
            code=config.code.soliton,
            give_up_factor=traffic.give_up_factor,
        )
        for data, result in zip(frames, results):
            transfers += 1
            sent_total += result.packets_sent_total
            if result.delivered:
                if result.recovered != data:
                    raise ProtocolError("delivered frame does not match its source bytes")
                deliveries += 1
                overheads.append(result.overhead_ratio)
                ticks.append(result.ticks)
    return Metrics(
        scenario=config.scenario,
        seed=config.seed,
        flows=flows,
        routing_successes=routing_ok,
        transfers=transfers,
        deliveries=deliveries,
        mean_path_count=fmean(path_counts) if path_counts else None,
        mean_hops=fmean(hop_counts) if hop_counts else None,
        mean_overhead_ratio=fmean(overheads) if overheads else None,
        mean_ticks_to_delivery=fmean(ticks) if ticks else None,
        packets_sent_total=sent_total,
    )


def _run_stub_iot(config: SimConfig) -> Metrics:
    sim = Simulation(build_graph(config), config.link, seed=config.seed)
    sim.apply_timeline(config.timeline)
    pairs = (_pick_pair(sim, config.traffic) for _ in range(config.traffic.flows))
    return _run_flows(config, sim, pairs)


def _run_jamming(config: SimConfig) -> Metrics:
    sim = Simulation(build_graph(config), config.link, seed=config.seed)
    sim.apply_timeline(config.timeline)

    def pairs():
        nodes = sorted(sim.graph.nodes)
        for _ in range(config.traffic.flows):
            if config.traffic.source is not None and config.traffic.dest is not None:
                yield config.traffic.source, config.traffic.dest
            elif len(nodes) >= 2:
                yield nodes[0], nodes[-1]

    return _run_flows(config, sim, pairs())


def _run_relay(config: SimConfig) -> Metrics:
    sim = Simulation(build_relay_graph(config.relay), config.link, seed=config.seed)
    sim.apply_timeline(config.timeline)
    source = config.traffic.source if config.traffic.source is not None else 0
    lander = config.relay.earth + config.relay.moon + 1
    dest = config.traffic.dest if config.traffic.dest is not None else lander
    return _run_flows(config, sim, [(source, dest)])


def _run_storage(config: SimConfig) -> Metrics:
    if config.storage is None:
        raise ConfigError("storage", "the storage scenario needs a storage section")
    st = config.storage
    sim = Simulation(build_graph(config), config.link, seed=config.seed)
    owner = st.owner
    if owner is None:
        owner = next((v for v in sorted(sim.graph.nodes) if sim.graph.degree(v) > 0), None)
        if owner is None:
            raise ConfigError("storage.owner", "no node with a neighbor to own the data")
    k, m = config.code.k, config.code.m
    recovered = adversary = 0
    for trial in range(st.trials):
        data = sim.rng.randbytes(k * m)
        plan = disperse(sim, owner, data, k, m, st.local_count, st.remote_count,
                        radius=st.radius, code=config.code.soliton, frame_id=trial)
        holders = set(plan.holders)
        try:
            if recover(plan, holders) != data:
                raise ProtocolError("recovered bytes differ from the stored data")
            recovered += 1
        except InsufficientPacketsError:
            pass
        try:
            recover(plan, holders - {owner})
            adversary += 1
        except InsufficientPacketsError:
            pass
    return Metrics(
        scenario=config.scenario,
        seed=config.seed,
        storage_recovery_rate=recovered / st.trials if st.trials else None,
        storage_adversary_rate=adversary / st.trials if st.trials else None,
    )


_RUNNERS = {
    "stub_iot": _run_stub_iot,
    "relay": _run_relay,
    "jamming": _run_jamming,
    "storage": _run_storage,
}


def run_scenario(config: SimConfig) -> Metrics:
    """Execute the named scenario; a pure function of (config, seed)."""
    try:
        runner = _RUNNERS[config.scenario]
    except KeyError:
        raise ConfigError("scenario", f"unknown scenario {config.scenario!r}") from None
    return runner(config)
