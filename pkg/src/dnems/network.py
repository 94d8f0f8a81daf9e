"""Distribution-network data model: buses, branches, devices, validation.

Networks are radial feeders (a tree rooted at the substation bus) carrying
optional diesel generators, PV arrays, and energy-storage units at named
buses.  A validated ``Network`` is immutable and safe to share between any
number of concurrent evaluators.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

__all__ = [
    "Bus",
    "Branch",
    "DgSpec",
    "PvSpec",
    "EssSpec",
    "Network",
    "RadialOrder",
    "NetworkError",
    "load_network",
    "save_network",
    "network_to_dict",
    "network_from_dict",
    "builtin_ieee69",
    "radial_order",
]


class NetworkError(ValueError):
    """Raised for malformed or inconsistent network data."""


@dataclass(frozen=True, eq=False)
class Bus:
    id: int
    p_load: float = 0.0  # kW
    q_load: float = 0.0  # kvar


@dataclass(frozen=True, eq=False)
class Branch:
    from_bus: int
    to_bus: int
    r: float  # ohm
    x: float  # ohm
    s_max: float = 10000.0  # kVA
    at_repair: float = 2.0  # h/yr
    at_restoration: float = 0.5  # h/yr


@dataclass(frozen=True, eq=False)
class DgSpec:
    bus: int
    p_min: float = 0.0  # kW
    p_max: float = 500.0  # kW
    marginal_cost: float = 0.08  # $/kWh


@dataclass(frozen=True, eq=False)
class PvSpec:
    bus: int
    capacity: float  # kW
    marginal_cost: float = 0.0  # $/kWh


@dataclass(frozen=True, eq=False)
class EssSpec:
    bus: int
    w_min: float  # kWh
    w_max: float  # kWh
    p_charge_max: float  # kW
    p_discharge_max: float  # kW
    eff_charge: float = 0.9
    eff_discharge: float = 0.9
    w_initial: float = 0.0  # kWh


@dataclass(frozen=True, eq=False)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    dgs: tuple[DgSpec, ...] = ()
    pvs: tuple[PvSpec, ...] = ()
    esss: tuple[EssSpec, ...] = ()
    substation_bus: int = 1
    v_min: float = 0.95
    v_max: float = 1.05
    base_kv: float = 12.66
    base_mva: float = 10.0

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def bus_index(self, bus_id: int) -> int:
        """Position of a bus id in the ``buses`` tuple (ids are 1..N)."""
        return bus_id - 1


def _validate(net: Network) -> Network:
    n = len(net.buses)
    if n == 0:
        raise NetworkError("network has no buses")

    ids = [b.id for b in net.buses]
    if sorted(ids) != list(range(1, n + 1)):
        raise NetworkError(f"bus ids must be unique and contiguous 1..{n}, got {sorted(ids)[:8]}...")
    if ids != list(range(1, n + 1)):
        raise NetworkError("buses must be listed in id order")

    for b in net.buses:
        if b.p_load < 0:
            raise NetworkError(f"bus {b.id}: negative active load {b.p_load}")

    id_set = set(ids)
    if net.substation_bus not in id_set:
        raise NetworkError(f"unknown substation bus {net.substation_bus}")
    if not net.v_min < net.v_max:
        raise NetworkError(f"voltage bounds inverted: v_min={net.v_min} >= v_max={net.v_max}")
    if net.base_kv <= 0 or net.base_mva <= 0:
        raise NetworkError("per-unit bases must be positive")

    if len(net.branches) != n - 1:
        raise NetworkError(f"radial network needs {n - 1} branches for {n} buses, got {len(net.branches)}")

    # Union-find both proves connectivity and names the first cycle-closing branch.
    parent = list(range(n + 1))

    def find(u: int) -> int:
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for br in net.branches:
        for end in (br.from_bus, br.to_bus):
            if end not in id_set:
                raise NetworkError(f"branch ({br.from_bus},{br.to_bus}) references unknown bus {end}")
        if br.r < 0 or br.x < 0:
            raise NetworkError(f"branch ({br.from_bus},{br.to_bus}): negative impedance")
        if br.s_max <= 0:
            raise NetworkError(f"branch ({br.from_bus},{br.to_bus}): s_max must be positive")
        if br.at_repair < 0 or br.at_restoration < 0:
            raise NetworkError(f"branch ({br.from_bus},{br.to_bus}): negative reliability time")
        ru, rv = find(br.from_bus), find(br.to_bus)
        if ru == rv:
            raise NetworkError(f"branch ({br.from_bus},{br.to_bus}) closes a cycle")
        parent[ru] = rv

    root = find(net.substation_bus)
    for b in net.buses:
        if find(b.id) != root:
            raise NetworkError(f"bus {b.id} is not connected to the substation")

    for dg in net.dgs:
        if dg.bus not in id_set:
            raise NetworkError(f"DG references unknown bus {dg.bus}")
        if not 0 <= dg.p_min <= dg.p_max:
            raise NetworkError(f"DG at bus {dg.bus}: invalid bounds [{dg.p_min}, {dg.p_max}]")
    for pv in net.pvs:
        if pv.bus not in id_set:
            raise NetworkError(f"PV references unknown bus {pv.bus}")
        if pv.capacity <= 0:
            raise NetworkError(f"PV at bus {pv.bus}: capacity must be positive")
        if pv.marginal_cost < 0:
            raise NetworkError(f"PV at bus {pv.bus}: negative marginal cost")
    for ess in net.esss:
        if ess.bus not in id_set:
            raise NetworkError(f"ESS references unknown bus {ess.bus}")
        if not 0 <= ess.w_min <= ess.w_initial <= ess.w_max:
            raise NetworkError(
                f"ESS at bus {ess.bus}: need 0 <= w_min <= w_initial <= w_max, "
                f"got ({ess.w_min}, {ess.w_initial}, {ess.w_max})"
            )
        if ess.p_charge_max <= 0 or ess.p_discharge_max <= 0:
            raise NetworkError(f"ESS at bus {ess.bus}: power ratings must be positive")
        if not (0 < ess.eff_charge <= 1 and 0 < ess.eff_discharge <= 1):
            raise NetworkError(f"ESS at bus {ess.bus}: efficiencies must be in (0, 1]")
    return net


def make_network(buses, branches, dgs=(), pvs=(), esss=(), **scalars) -> Network:
    """Build and validate a Network from component iterables."""
    net = Network(
        buses=tuple(buses),
        branches=tuple(branches),
        dgs=tuple(dgs),
        pvs=tuple(pvs),
        esss=tuple(esss),
        **scalars,
    )
    return _validate(net)


# -- serialization ------------------------------------------------------------

_SCALARS = ("substation_bus", "v_min", "v_max", "base_kv", "base_mva")


def network_to_dict(net: Network) -> dict:
    return {
        "buses": [asdict(b) for b in net.buses],
        "branches": [asdict(b) for b in net.branches],
        "dgs": [asdict(d) for d in net.dgs],
        "pvs": [asdict(p) for p in net.pvs],
        "esss": [asdict(e) for e in net.esss],
        **{k: getattr(net, k) for k in _SCALARS},
    }


def network_from_dict(doc: dict) -> Network:
    try:
        buses = [Bus(**b) for b in doc["buses"]]
        branches = [Branch(**b) for b in doc["branches"]]
        dgs = [DgSpec(**d) for d in doc.get("dgs", [])]
        pvs = [PvSpec(**p) for p in doc.get("pvs", [])]
        esss = [EssSpec(**e) for e in doc.get("esss", [])]
        scalars = {k: doc[k] for k in _SCALARS if k in doc}
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network document: {exc}") from exc
    return make_network(buses, branches, dgs, pvs, esss, **scalars)


def save_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1, sort_keys=True))


def _load_csv_pair(directory: Path) -> Network:
    """Bare feeder from buses.csv / branches.csv (no devices)."""
    buses_path = directory / "buses.csv"
    branches_path = directory / "branches.csv"
    for p in (buses_path, branches_path):
        if not p.exists():
            raise NetworkError(f"missing {p.name} in {directory}")
    buses = []
    with open(buses_path, newline="") as fh:
        for row in csv.DictReader(fh):
            buses.append(
                Bus(id=int(row["id"]), p_load=float(row.get("p_load") or 0.0), q_load=float(row.get("q_load") or 0.0))
            )
    branches = []
    with open(branches_path, newline="") as fh:
        for row in csv.DictReader(fh):
            kwargs = {
                "from_bus": int(row["from_bus"]),
                "to_bus": int(row["to_bus"]),
                "r": float(row["r"]),
                "x": float(row["x"]),
            }
            for opt in ("s_max", "at_repair", "at_restoration"):
                if row.get(opt):
                    kwargs[opt] = float(row[opt])
            branches.append(Branch(**kwargs))
    return make_network(buses, branches)


def load_network(path) -> Network:
    """Load and validate a network from a JSON file or a buses/branches CSV pair.

    ``path`` may be a ``.json`` document following the network schema, or a
    directory containing ``buses.csv`` and ``branches.csv`` for a bare feeder.
    Raises ``NetworkError`` naming the offending element on any parse or
    validation failure.
    """
    p = Path(path)
    if not p.exists():
        raise NetworkError(f"no such file: {p}")
    if p.is_dir():
        return _load_csv_pair(p)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkError(f"{p}: invalid JSON: {exc}") from exc
    return network_from_dict(doc)


def builtin_ieee69() -> Network:
    """The 69-bus radial test feeder retrofitted with 3 PV+ESS units and 4 DGs.

    PV arrays (1,500 kW each) with co-located storage sit at buses 14, 30
    and 69; diesel generators at buses 40, 51, 59 and 67.  Line and load
    data are the classic 69-bus capacitor-placement feeder, shipped as a
    versioned data file.
    """
    data = resources.files("dnems.data").joinpath("ieee69.json").read_text()
    return network_from_dict(json.loads(data))


# -- radial ordering ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialOrder:
    """Breadth-first branch ordering of a radial feeder.

    ``order`` lists original branch indices parent-first; ``from_bus`` /
    ``to_bus`` give each ordered branch re-oriented away from the substation.
    ``paths`` maps every bus id to the tuple of original branch indices on its
    unique path to the substation (empty for the substation itself).
    """

    order: tuple[int, ...]
    from_bus: tuple[int, ...]
    to_bus: tuple[int, ...]
    paths: dict[int, tuple[int, ...]] = field(repr=False)

    def path(self, bus_id: int) -> tuple[int, ...]:
        return self.paths[bus_id]


def radial_order(net: Network) -> RadialOrder:
    """Order branches so every branch appears after its parent (BFS from the
    substation) and expose each bus's branch path back to the substation."""
    adj: dict[int, list[tuple[int, int]]] = {b.id: [] for b in net.buses}
    for idx, br in enumerate(net.branches):
        adj[br.from_bus].append((br.to_bus, idx))
        adj[br.to_bus].append((br.from_bus, idx))

    order: list[int] = []
    from_bus: list[int] = []
    to_bus: list[int] = []
    paths: dict[int, tuple[int, ...]] = {net.substation_bus: ()}
    queue = [net.substation_bus]
    seen = {net.substation_bus}
    while queue:
        nxt: list[int] = []
        for u in queue:
            for v, idx in adj[u]:
                if v in seen:
                    continue
                seen.add(v)
                order.append(idx)
                from_bus.append(u)
                to_bus.append(v)
                paths[v] = paths[u] + (idx,)
                nxt.append(v)
        queue = nxt
    return RadialOrder(order=tuple(order), from_bus=tuple(from_bus), to_bus=tuple(to_bus), paths=paths)
