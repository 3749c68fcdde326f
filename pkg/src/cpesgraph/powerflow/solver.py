"""Stationary AC power flow: Newton-Raphson in polar coordinates.

Every ext_grid bus is a slack bus; all other buses are PQ buses. Quantities are
per-unit on a single system base ``s_base_mva`` with one voltage base per bus
(its ``vn_kv``). Lines and transformers are series impedances only: no line
charging, no magnetizing branch, no tap changer.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from ..errors import GridError, NonConvergence, SingularityError
from ..grid import GridTables
from . import kernels

SQRT3 = math.sqrt(3.0)


@dataclass
class AdmittanceMatrix:
    matrix: sp.csr_matrix
    bus_ids: list[int]
    s_base_mva: float
    line_z: dict[int, complex] = field(default_factory=dict)
    trafo_z: dict[int, complex] = field(default_factory=dict)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def index(self) -> dict[int, int]:
        return {b: i for i, b in enumerate(self.bus_ids)}


def line_impedance_pu(line, vn_kv: float, s_base_mva: float) -> complex:
    z_base = vn_kv ** 2 / s_base_mva
    length = float(line.length_km)
    return complex(float(line.r_ohm_per_km) * length, float(line.x_ohm_per_km) * length) / z_base


def trafo_impedance_pu(trafo, s_base_mva: float) -> complex:
    ratio = s_base_mva / float(trafo.sn_mva)
    z = float(trafo.vk_percent) / 100.0 * ratio
    r = float(trafo.vkr_percent) / 100.0 * ratio
    return complex(r, math.sqrt(max(z * z - r * r, 0.0)))


def build_ybus(tables: GridTables, s_base_mva: float = 1.0) -> AdmittanceMatrix:
    buses = sorted(tables.bus, key=lambda b: b.id)
    bus_ids = [b.id for b in buses]
    index = {b: i for i, b in enumerate(bus_ids)}
    vn = {b.id: float(b.vn_kv) for b in buses}
    n = len(buses)
    rows, cols, vals = [], [], []
    line_z, trafo_z = {}, {}

    def branch(f, t, z):
        if z == 0:
            raise GridError("zero-impedance branch")
        y = 1.0 / z
        i, k = index[f], index[t]
        rows.extend((i, k, i, k))
        cols.extend((i, k, k, i))
        vals.extend((y, y, -y, -y))

    for line in tables.line:
        if line.from_bus not in index or line.to_bus not in index:
            raise GridError(f"line {line.id} references an unknown bus")
        if vn[line.from_bus] != vn[line.to_bus]:
            raise GridError(f"line {line.id} connects buses of different rated voltage")
        z = line_impedance_pu(line, vn[line.from_bus], s_base_mva)
        line_z[line.id] = z
        branch(line.from_bus, line.to_bus, z)
    for trafo in tables.trafo:
        if trafo.hv_bus not in index or trafo.lv_bus not in index:
            raise GridError(f"trafo {trafo.id} references an unknown bus")
        if float(trafo.vn_hv_kv) != vn[trafo.hv_bus] or float(trafo.vn_lv_kv) != vn[trafo.lv_bus]:
            raise GridError(f"trafo {trafo.id}: rated voltages differ from bus voltages "
                            "(off-nominal ratios are unsupported)")
        z = trafo_impedance_pu(trafo, s_base_mva)
        trafo_z[trafo.id] = z
        branch(trafo.hv_bus, trafo.lv_bus, z)

    matrix = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(n, n))
    matrix.sum_duplicates()
    matrix.sort_indices()

    adjacency = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_islands, labels = connected_components(adjacency, directed=False)
    slack_islands = {labels[index[e.bus]] for e in tables.ext_grid if e.bus in index}
    for island in range(n_islands):
        if island not in slack_islands:
            members = [bus_ids[i] for i in np.flatnonzero(labels == island)]
            raise SingularityError(f"island without slack bus: buses {members}")
    return AdmittanceMatrix(matrix, bus_ids, s_base_mva, line_z, trafo_z)


# -- results ------------------------------------------------------------------------

@dataclass
class BusResult:
    id: int
    vm_pu: float
    va_deg: float
    p_mw: float
    q_mvar: float


@dataclass
class LineResult:
    id: int
    p_from_mw: float
    q_from_mvar: float
    p_to_mw: float
    q_to_mvar: float
    i_ka: float
    loading_percent: float


@dataclass
class TrafoResult:
    id: int
    p_hv_mw: float
    q_hv_mvar: float
    p_lv_mw: float
    q_lv_mvar: float
    i_hv_ka: float
    loading_percent: float


@dataclass
class ExtGridResult:
    id: int
    p_mw: float
    q_mvar: float


@dataclass
class PowerFlowResult:
    converged: bool
    iterations: int
    max_mismatch_pu: float
    kernel: str
    bus_results: list[BusResult]
    line_results: list[LineResult]
    trafo_results: list[TrafoResult]
    ext_grid_results: list[ExtGridResult]

    def bus(self, bus_id) -> BusResult:
        return next(b for b in self.bus_results if b.id == bus_id)

    def trafo(self, trafo_id) -> TrafoResult:
        return next(t for t in self.trafo_results if t.id == trafo_id)

    def line(self, line_id) -> LineResult:
        return next(r for r in self.line_results if r.id == line_id)

    def to_dict(self) -> dict:
        def rows(items):
            return [{k: _round(v) for k, v in asdict(x).items()} for x in items]

        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "max_mismatch_pu": self.max_mismatch_pu,
            "bus_results": rows(self.bus_results),
            "line_results": rows(self.line_results),
            "trafo_results": rows(self.trafo_results),
            "ext_grid_results": rows(self.ext_grid_results),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "PowerFlowResult":
        return cls(
            converged=data["converged"],
            iterations=data["iterations"],
            max_mismatch_pu=data.get("max_mismatch_pu", 0.0),
            kernel=data.get("kernel", "unknown"),
            bus_results=[BusResult(**r) for r in data["bus_results"]],
            line_results=[LineResult(**r) for r in data["line_results"]],
            trafo_results=[TrafoResult(**r) for r in data["trafo_results"]],
            ext_grid_results=[ExtGridResult(**r) for r in data.get("ext_grid_results", [])],
        )


def _round(value):
    if isinstance(value, float):
        rounded = round(value, 12)
        return 0.0 if rounded == 0 else rounded
    return value


def load_result(path) -> PowerFlowResult:
    with open(path, encoding="utf-8") as fh:
        return PowerFlowResult.from_dict(json.load(fh))


def dump_result(result: PowerFlowResult, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.to_json())


# -- solver -------------------------------------------------------------------------

def bus_injections(tables: GridTables, s_base_mva: float = 1.0) -> np.ndarray:
    """Specified complex injection per bus (per-unit, sorted bus order)."""
    index = {b.id: i for i, b in enumerate(sorted(tables.bus, key=lambda b: b.id))}
    s = np.zeros(len(index), dtype=complex)
    for rows in (tables.load, tables.sgen, tables.storage):
        for r in rows:
            s[index[r.bus]] -= complex(float(r.p_mw), float(r.q_mvar)) / s_base_mva
    return s


def solve(tables: GridTables, tol_mva: float = 1e-8, max_iter: int = 30, s_base_mva: float = 1.0,
          kernel: str | None = None) -> PowerFlowResult:
    """Newton-Raphson power flow from a flat start.

    Raises :class:`NonConvergence` when the largest active/reactive mismatch is
    still above ``tol_mva`` (per-unit) after ``max_iter`` iterations.
    """
    if not tables.ext_grid:
        raise GridError("power flow needs at least one ext_grid")
    k = kernels.get(kernel)
    ybus = build_ybus(tables, s_base_mva)
    index = ybus.index()
    n = len(ybus.bus_ids)
    y = ybus.matrix
    indptr = y.indptr.astype(np.int32)
    indices = y.indices.astype(np.int32)
    data = y.data.astype(np.complex128)
    sbus = bus_injections(tables, s_base_mva)

    vm = np.ones(n)
    va = np.zeros(n)
    slack = np.zeros(n, dtype=bool)
    for e in sorted(tables.ext_grid, key=lambda e: e.id):
        i = index[e.bus]
        slack[i] = True
        vm[i] = float(e.vm_pu)
        va[i] = math.radians(float(e.va_deg))
    free = np.flatnonzero(~slack)
    if len(free):
        va[free] = va[np.flatnonzero(slack)[0]]
    m = len(free)
    pos = np.full(n, -1, dtype=np.int64)
    pos[free] = np.arange(m)

    v = vm * np.exp(1j * va)
    iterations = 0
    while True:
        mis, cur = k.power_mismatch(indptr, indices, data, v, sbus)
        f = np.concatenate([mis.real[free], mis.imag[free]])
        worst = float(np.max(np.abs(f))) if m else 0.0
        if not np.isfinite(worst):
            raise NonConvergence(iterations, worst)
        if worst <= tol_mva:
            break
        if iterations >= max_iter:
            raise NonConvergence(iterations, worst)
        r, c, vals = k.jacobian_coo(indptr, indices, data, v, cur, pos, m)
        jac = sp.csc_matrix((vals, (r, c)), shape=(2 * m, 2 * m))
        with np.errstate(all="ignore"):
            try:
                dx = spsolve(jac, -f)
            except RuntimeError:
                raise NonConvergence(iterations, worst) from None
        if not np.all(np.isfinite(dx)):
            raise NonConvergence(iterations, worst)
        va[free] += dx[:m]
        vm[free] += dx[m:]
        v = vm * np.exp(1j * va)
        iterations += 1

    return _results(tables, ybus, v, cur, iterations, worst, k)


def _results(tables: GridTables, ybus: AdmittanceMatrix, v, cur, iterations, worst, k) -> PowerFlowResult:
    s_base = ybus.s_base_mva
    index = ybus.index()
    vn = {b.id: float(b.vn_kv) for b in tables.bus}
    s_inj = v * np.conj(cur) * s_base

    bus_results = [
        BusResult(b, float(abs(v[i])), float(math.degrees(np.angle(v[i]))),
                  float(-s_inj[i].real), float(-s_inj[i].imag))
        for i, b in enumerate(ybus.bus_ids)
    ]

    def flows(f_bus, t_bus, z):
        vf, vt = v[index[f_bus]], v[index[t_bus]]
        i_ft = (vf - vt) / z
        s_f = vf * np.conj(i_ft) * s_base
        s_t = vt * np.conj(-i_ft) * s_base
        return s_f, s_t, abs(i_ft)

    line_results = []
    for line in sorted(tables.line, key=lambda r: r.id):
        s_f, s_t, i_pu = flows(line.from_bus, line.to_bus, ybus.line_z[line.id])
        i_ka = i_pu * s_base / (SQRT3 * vn[line.from_bus])
        line_results.append(LineResult(line.id, float(s_f.real), float(s_f.imag), float(s_t.real),
                                       float(s_t.imag), float(i_ka), float(i_ka / float(line.max_i_ka) * 100)))
    trafo_results = []
    for trafo in sorted(tables.trafo, key=lambda r: r.id):
        s_h, s_l, i_pu = flows(trafo.hv_bus, trafo.lv_bus, ybus.trafo_z[trafo.id])
        i_hv_ka = i_pu * s_base / (SQRT3 * vn[trafo.hv_bus])
        trafo_results.append(TrafoResult(trafo.id, float(s_h.real), float(s_h.imag), float(s_l.real),
                                         float(s_l.imag), float(i_hv_ka), float(abs(s_h) / float(trafo.sn_mva) * 100)))
    ext_results = []
    for e in sorted(tables.ext_grid, key=lambda e: e.id):
        i = index[e.bus]
        # the slack supplies what the bus injects into the network beyond its own units
        own = sum(complex(float(r.p_mw), float(r.q_mvar))
                  for rows in (tables.load, tables.sgen, tables.storage) for r in rows if r.bus == e.bus)
        supplied = s_inj[i] + own
        ext_results.append(ExtGridResult(e.id, float(supplied.real), float(supplied.imag)))
    return PowerFlowResult(True, iterations, worst, kernels.NAME if k is kernels.active else _kernel_name(k),
                           bus_results, line_results, trafo_results, ext_results)


def _kernel_name(k) -> str:
    return next(name for name, mod in kernels.AVAILABLE.items() if mod is k)
