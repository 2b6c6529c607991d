"""Radial feeder model: buses, branches, CSV ingestion and derived topology.

Network files are CSV with the header ``from,to,r_ohm,x_ohm,p_kw,q_kvar,open``
and an optional ``scc_va`` column. Each row is a branch; the load columns
describe the ``to`` bus. Rows with ``open=1`` are tie switches: they are kept
on the network for reference but carry no flow. A leading comment line
``# v_nom_kv=<float>`` sets the nominal line voltage.
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

ROOT = 0
REQUIRED_COLUMNS = ("from", "to", "r_ohm", "x_ohm", "p_kw", "q_kvar", "open")


class NetworkError(ValueError):
    """Malformed or structurally invalid network description."""

    def __init__(self, reason: str, row: int | None = None):
        self.reason = reason
        self.row = row
        msg = reason if row is None else f"row {row}: {reason}"
        super().__init__(msg)


class RootBusError(ValueError):
    """Raised where the substation bus has no finite short-circuit power."""


@dataclass(frozen=True)
class Bus:
    id: int
    p_load: float = 0.0
    q_load: float = 0.0

    def __post_init__(self):
        if self.p_load < 0 or self.q_load < 0:
            raise NetworkError(f"bus {self.id}: negative load")


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    open: bool = False

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise NetworkError(f"self-loop at bus {self.from_bus}")
        if not self.r > 0:
            raise NetworkError(f"branch {self.from_bus}->{self.to_bus}: resistance must be positive")
        if self.x < 0:
            raise NetworkError(f"branch {self.from_bus}->{self.to_bus}: negative reactance")

    @property
    def z(self) -> complex:
        return complex(self.r, self.x)


@dataclass(frozen=True)
class Network:
    """Immutable rooted radial network.

    ``branches`` holds only the closed tree branches; ``ties`` holds open
    switches. ``scc_override`` maps bus id to a measured short-circuit power
    in VA that replaces the impedance-derived value.
    """

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    v_nom: float
    root: int = ROOT
    ties: tuple[Branch, ...] = ()
    scc_override: tuple[tuple[int, float], ...] = field(default=())

    def __post_init__(self):
        validate(self)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    # Derived topology. Arrays are indexed by bus id; the entry for a bus
    # refers to the unique branch entering it (root entries are zero / -1).

    @cached_property
    def parent(self) -> np.ndarray:
        par = np.full(self.n_bus, -1, dtype=np.int64)
        for br in self.branches:
            par[br.to_bus] = br.from_bus
        par.flags.writeable = False
        return par

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in range(self.n_bus)]
        for br in self.branches:
            kids[br.from_bus].append(br.to_bus)
        return tuple(tuple(sorted(k)) for k in kids)

    @cached_property
    def order(self) -> np.ndarray:
        """Breadth-first order from the root (children visited by bus id)."""
        seq = [self.root]
        queue = deque(seq)
        while queue:
            b = queue.popleft()
            for c in self.children[b]:
                seq.append(c)
                queue.append(c)
        arr = np.asarray(seq, dtype=np.int64)
        arr.flags.writeable = False
        return arr

    @cached_property
    def descendants(self) -> np.ndarray:
        """Dense 0/1 matrix, ``D[i, j] = 1`` iff ``j`` is in the subtree of ``i``."""
        n = self.n_bus
        d = np.eye(n)
        for b in self.order[::-1]:
            p = self.parent[b]
            if p >= 0:
                d[p] += d[b]
        d.flags.writeable = False
        return d

    @cached_property
    def r_in(self) -> np.ndarray:
        r = np.zeros(self.n_bus)
        for br in self.branches:
            r[br.to_bus] = br.r
        r.flags.writeable = False
        return r

    @cached_property
    def z_in(self) -> np.ndarray:
        z = np.zeros(self.n_bus, dtype=complex)
        for br in self.branches:
            z[br.to_bus] = br.z
        z.flags.writeable = False
        return z

    @cached_property
    def p_load(self) -> np.ndarray:
        a = np.array([b.p_load for b in self.buses], dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def q_load(self) -> np.ndarray:
        a = np.array([b.q_load for b in self.buses], dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def z_path(self) -> np.ndarray:
        """Cumulative root-to-bus impedance for every bus, ohms."""
        z = np.zeros(self.n_bus, dtype=complex)
        for b in self.order[1:]:
            z[b] = z[self.parent[b]] + self.z_in[b]
        z.flags.writeable = False
        return z

    @cached_property
    def scc(self) -> np.ndarray:
        """Short-circuit power per bus in VA; ``inf`` at the root."""
        v = self.v_nom * 1e3
        out = np.full(self.n_bus, np.inf)
        mag = np.abs(self.z_path)
        nz = mag > 0
        out[nz] = v * v / mag[nz]
        for bus, val in self.scc_override:
            out[bus] = val
        out[self.root] = np.inf
        out.flags.writeable = False
        return out


def validate(net: Network) -> None:
    n = len(net.buses)
    if n == 0:
        raise NetworkError("network has no buses")
    for i, b in enumerate(net.buses):
        if b.id != i:
            raise NetworkError(f"bus ids must be dense 0..{n - 1}; found {b.id} at position {i}")
    if not net.v_nom > 0:
        raise NetworkError("nominal voltage must be positive")
    if net.root != ROOT:
        raise NetworkError("the substation must be bus 0")
    if len(net.branches) != n - 1:
        raise NetworkError(f"{n} buses need {n - 1} tree branches, got {len(net.branches)}")
    incoming: dict[int, Branch] = {}
    for br in net.branches:
        for end in (br.from_bus, br.to_bus):
            if not 0 <= end < n:
                raise NetworkError(f"branch {br.from_bus}->{br.to_bus} references unknown bus {end}")
        if br.to_bus == net.root:
            raise NetworkError(f"branch {br.from_bus}->{br.to_bus} feeds the substation bus")
        if br.to_bus in incoming:
            raise NetworkError(f"bus {br.to_bus} has more than one incoming branch")
        incoming[br.to_bus] = br
    _check_reachable(n, net.branches, net.root)
    for bus, val in net.scc_override:
        if not (0 <= bus < n) or not (val > 0 and math.isfinite(val)):
            raise NetworkError(f"bus {bus}: invalid short-circuit override {val}")


def _check_reachable(n: int, branches: Iterable[Branch], root: int) -> None:
    kids: dict[int, list[int]] = {}
    for br in branches:
        kids.setdefault(br.from_bus, []).append(br.to_bus)
    seen = {root}
    queue = deque([root])
    while queue:
        b = queue.popleft()
        for c in kids.get(b, ()):
            if c in seen:
                raise NetworkError(f"cycle through bus {c}")
            seen.add(c)
            queue.append(c)
    missing = sorted(set(range(n)) - seen)
    if missing:
        par = {br.to_bus: br.from_bus for br in branches}
        cyc = _find_cycle(n, par)
        if cyc:
            raise NetworkError(f"cycle through buses {cyc}")
        raise NetworkError(f"buses not connected to the substation: {missing}")


def _find_cycle(n: int, parent_of: dict[int, int]) -> list[int]:
    """Return the buses of one parent-pointer cycle (sorted), or ``[]``."""
    state = [0] * n  # 0 unvisited, 1 on current walk, 2 resolved
    for start in range(n):
        walk = []
        b = start
        while b is not None and 0 <= b < n and state[b] == 0:
            state[b] = 1
            walk.append(b)
            b = parent_of.get(b)
        if b is not None and 0 <= b < n and state[b] == 1:
            return sorted(walk[walk.index(b):])
        for w in walk:
            state[w] = 2
    return []


def load_network(source: TextIO | str | Path) -> Network:
    """Parse a network CSV from a path or an open text stream."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return _parse(fh)
    return _parse(source)


def loads_network(text: str) -> Network:
    return _parse(io.StringIO(text))


def bundled_path(name: str = "bw33") -> Path:
    """Path of a network file shipped with the package (``bw33`` or ``syn7``)."""
    ref = resources.files("capres") / "data" / f"{name}.csv"
    return Path(str(ref))


def resolve_network_path(spec: str | Path) -> Path:
    p = Path(spec)
    if p.exists():
        return p
    bundled = bundled_path(str(spec))
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"no network file {spec!r}")


def _parse(fh: TextIO) -> Network:
    v_nom = None
    lines = []
    first_data_line = None
    for lineno, line in enumerate(fh, start=1):
        stripped = line.strip()
        if stripped.startswith("#"):
            key, _, val = stripped.lstrip("#").strip().partition("=")
            if key.strip() == "v_nom_kv":
                try:
                    v_nom = float(val)
                except ValueError:
                    raise NetworkError(f"bad v_nom_kv value {val.strip()!r}", lineno) from None
            continue
        if not stripped:
            continue
        if first_data_line is None:
            first_data_line = lineno
        lines.append((lineno, line))
    if v_nom is None:
        raise NetworkError("missing '# v_nom_kv=<float>' metadata line")
    if not lines:
        raise NetworkError("no header row")

    reader = csv.reader([ln for _, ln in lines])
    header = [h.strip() for h in next(reader)]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise NetworkError(f"header lacks columns {missing}", first_data_line)
    col = {name: i for i, name in enumerate(header)}

    tree: list[Branch] = []
    ties: list[Branch] = []
    loads: dict[int, tuple[float, float]] = {}
    scc: list[tuple[int, float]] = []
    into: dict[int, int] = {}
    max_bus = 0
    for (lineno, _), row in zip(lines[1:], reader):
        if len(row) < len(REQUIRED_COLUMNS):
            raise NetworkError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            frm = int(row[col["from"]])
            to = int(row[col["to"]])
            r = float(row[col["r_ohm"]])
            x = float(row[col["x_ohm"]])
            p = float(row[col["p_kw"]] or 0)
            q = float(row[col["q_kvar"]] or 0)
            is_open = int(row[col["open"]] or 0)
            scc_val = row[col["scc_va"]].strip() if "scc_va" in col and col["scc_va"] < len(row) else ""
        except ValueError as exc:
            raise NetworkError(f"malformed value ({exc})", lineno) from None
        if is_open not in (0, 1):
            raise NetworkError(f"open flag must be 0 or 1, got {is_open}", lineno)
        if frm == to:
            raise NetworkError(f"self-loop at bus {frm}", lineno)
        if frm < 0 or to < 0:
            raise NetworkError("negative bus id", lineno)
        try:
            br = Branch(frm, to, r, x, bool(is_open))
        except NetworkError as exc:
            raise NetworkError(exc.reason, lineno) from None
        max_bus = max(max_bus, frm, to)
        if br.open:
            ties.append(br)
            continue
        if to == ROOT:
            raise NetworkError("branch feeds the substation bus 0", lineno)
        if to in into:
            raise NetworkError(f"duplicate branch into bus {to} (first at row {into[to]})", lineno)
        into[to] = lineno
        if p < 0 or q < 0:
            raise NetworkError(f"negative load at bus {to}", lineno)
        loads[to] = (p, q)
        if scc_val:
            try:
                scc.append((to, float(scc_val)))
            except ValueError:
                raise NetworkError(f"malformed scc_va {scc_val!r}", lineno) from None
        tree.append(br)

    n = max_bus + 1
    missing_buses = [b for b in range(1, n) if b not in into]
    if missing_buses:
        raise NetworkError(f"buses with no incoming branch (disconnected): {missing_buses}")
    cyc = _find_cycle(n, {br.to_bus: br.from_bus for br in tree})
    if cyc:
        raise NetworkError(f"cycle through buses {cyc}", into[cyc[0]])
    buses = tuple(Bus(i, *loads.get(i, (0.0, 0.0))) for i in range(n))
    return Network(buses, tuple(tree), v_nom, ROOT, tuple(ties), tuple(scc))


def _check_bus(net: Network, bus: int) -> None:
    if not (isinstance(bus, (int, np.integer)) and 0 <= bus < net.n_bus):
        raise KeyError(f"unknown bus id {bus!r}")


def path_impedance(net: Network, bus: int) -> complex:
    """Series impedance (ohms) of the root-to-``bus`` path."""
    _check_bus(net, bus)
    return complex(net.z_path[bus])


def short_circuit_power(net: Network, bus: int) -> float:
    """Three-phase short-circuit power at ``bus`` in VA, ``V_nom^2 / |Z_path|``."""
    _check_bus(net, bus)
    if bus == net.root:
        raise RootBusError("the substation bus has unbounded short-circuit power")
    return float(net.scc[bus])


def subtree(net: Network, bus: int) -> frozenset[int]:
    """``bus`` together with all of its descendants."""
    _check_bus(net, bus)
    out = {bus}
    stack = [bus]
    while stack:
        b = stack.pop()
        for c in net.children[b]:
            out.add(c)
            stack.append(c)
    return frozenset(out)


def to_csv(net: Network) -> str:
    """Serialise back to the network file format (tree rows then ties)."""
    buf = io.StringIO()
    buf.write(f"# v_nom_kv={net.v_nom!r}\n")
    overrides = dict(net.scc_override)
    w = csv.writer(buf, lineterminator="\n")
    header = list(REQUIRED_COLUMNS) + (["scc_va"] if overrides else [])
    w.writerow(header)
    for br in net.branches:
        b = net.buses[br.to_bus]
        row = [br.from_bus, br.to_bus, br.r, br.x, b.p_load, b.q_load, 0]
        if overrides:
            row.append(overrides.get(br.to_bus, ""))
        w.writerow(row)
    for br in net.ties:
        row = [br.from_bus, br.to_bus, br.r, br.x, 0, 0, 1]
        if overrides:
            row.append("")
        w.writerow(row)
    return buf.getvalue()
