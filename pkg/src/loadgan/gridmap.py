"""Grid-case parsing, Newton-Raphson AC power flow, and time-series
feasibility checking for mapped load profiles.

Supports the MATPOWER text format subset with `mpc.baseMVA`, `mpc.bus`,
`mpc.gen` and `mpc.branch` blocks. Bus types follow the usual convention:
1 = PQ, 2 = PV, 3 = slack.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import (
    DegenerateProfile, MissingSection, ParseError, SingularJacobian,
    TopologyError, UnassignedLoad,
)

PQ, PV, SLACK = 1, 2, 3

_N_BUS_COLS = 13     # id type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin
_N_GEN_COLS = 10     # bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin
_N_BRANCH_COLS = 11  # from to r x b rateA rateB rateC ratio angle status [angmin angmax]


@dataclass
class GridCase:
    base_mva: float
    # buses
    bus_id: np.ndarray
    bus_type: np.ndarray
    pd: np.ndarray
    qd: np.ndarray
    gs: np.ndarray
    bs: np.ndarray
    area: np.ndarray
    vm0: np.ndarray
    va0_deg: np.ndarray
    base_kv: np.ndarray
    zone: np.ndarray
    vmax: np.ndarray
    vmin: np.ndarray
    # generators
    gen_bus: np.ndarray
    pg: np.ndarray
    qg: np.ndarray
    qmax: np.ndarray
    qmin: np.ndarray
    vg: np.ndarray
    mbase: np.ndarray
    gen_status: np.ndarray
    pmax: np.ndarray
    pmin: np.ndarray
    # branches
    br_from: np.ndarray
    br_to: np.ndarray
    br_r: np.ndarray
    br_x: np.ndarray
    br_b: np.ndarray
    rate_a: np.ndarray
    rate_b: np.ndarray
    rate_c: np.ndarray
    tap: np.ndarray
    shift_deg: np.ndarray
    br_status: np.ndarray
    angmin: np.ndarray
    angmax: np.ndarray

    @property
    def n_bus(self) -> int:
        return self.bus_id.size

    @property
    def n_gen(self) -> int:
        return self.gen_bus.size

    @property
    def n_branch(self) -> int:
        return self.br_from.size

    def bus_index(self) -> dict[int, int]:
        return {int(b): i for i, b in enumerate(self.bus_id)}

    def copy(self) -> "GridCase":
        kwargs = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            kwargs[name] = value.copy() if isinstance(value, np.ndarray) else value
        return GridCase(**kwargs)

    def same_as(self, other: "GridCase") -> bool:
        if abs(self.base_mva - other.base_mva) != 0.0:
            return False
        for name in self.__dataclass_fields__:
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, np.ndarray) and not np.array_equal(a, b):
                return False
        return True

    def validate(self) -> None:
        if np.unique(self.bus_id).size != self.n_bus:
            raise TopologyError("duplicate bus ids")
        slack = np.flatnonzero(self.bus_type == SLACK)
        if slack.size != 1:
            raise TopologyError(f"expected exactly one slack bus, found {slack.size}")
        ids = set(int(b) for b in self.bus_id)
        for label, arr in (("branch from", self.br_from), ("branch to", self.br_to),
                           ("generator", self.gen_bus)):
            for b in arr:
                if int(b) not in ids:
                    raise TopologyError(f"{label} bus {int(b)} does not exist")
        live = self.br_status != 0
        if np.any((self.br_r[live] ** 2 + self.br_x[live] ** 2) <= 0.0):
            raise TopologyError("in-service branch with zero impedance")


# ------------------------------------------------------------------- parsing

_ASSIGN_RE = re.compile(r"mpc\.(\w+)\s*=\s*(.*)", re.DOTALL)


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%", 1)[0] for line in text.splitlines())


def _parse_number(token: str, line: int, col: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"malformed number {token!r}", line, col) from None


def _parse_matrix(body: str, first_line: int, name: str) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    for offset, raw in enumerate(body.splitlines()):
        line_no = first_line + offset
        for chunk in raw.split(";"):
            tokens = chunk.split()
            if not tokens:
                continue
            row = []
            col = 1
            for token in tokens:
                row.append(_parse_number(token, line_no, col + raw.find(token)))
                col += 1
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"mpc.{name}: ragged row of {len(row)} values "
                                 f"(expected {width})", line_no)
            rows.append(row)
    if not rows:
        raise ParseError(f"mpc.{name}: empty matrix", first_line)
    return np.array(rows)


def parse_matpower_case(text: str) -> GridCase:
    """Parse the supported MATPOWER subset into a validated GridCase."""
    clean = _strip_comments(text)
    sections: dict[str, np.ndarray] = {}
    base_mva = None

    lines = clean.splitlines()
    i = 0
    while i < len(lines):
        m = _ASSIGN_RE.match(lines[i].strip())
        if not m:
            i += 1
            continue
        name, rest = m.group(1), m.group(2).strip()
        if name == "baseMVA":
            value = rest.rstrip(";").strip()
            base_mva = _parse_number(value, i + 1, lines[i].find(value) + 1)
            i += 1
            continue
        if not rest.startswith("["):
            i += 1
            continue
        # gather matrix body until the closing ];
        body_lines = [rest[1:]]
        first_line = i + 1
        j = i
        while "]" not in body_lines[-1]:
            j += 1
            if j >= len(lines):
                raise ParseError(f"mpc.{name}: unterminated matrix", first_line)
            body_lines.append(lines[j])
        body_lines[-1] = body_lines[-1][:body_lines[-1].index("]")]
        if name in ("bus", "gen", "branch"):
            sections[name] = _parse_matrix("\n".join(body_lines), first_line, name)
        i = j + 1

    if base_mva is None:
        raise MissingSection("mpc.baseMVA not found")
    for required in ("bus", "gen", "branch"):
        if required not in sections:
            raise MissingSection(f"mpc.{required} not found")

    bus, gen, branch = sections["bus"], sections["gen"], sections["branch"]
    for name, mat, need in (("bus", bus, _N_BUS_COLS), ("gen", gen, _N_GEN_COLS),
                            ("branch", branch, _N_BRANCH_COLS)):
        if mat.shape[1] < need:
            raise ParseError(f"mpc.{name}: {mat.shape[1]} columns, need >= {need}")
        limit = need + 2 if name == "branch" else need
        if mat.shape[1] > limit:
            warnings.warn(f"mpc.{name}: ignoring {mat.shape[1] - limit} extra columns",
                          stacklevel=2)

    nbr = branch.shape[0]
    case = GridCase(
        base_mva=float(base_mva),
        bus_id=bus[:, 0].astype(int), bus_type=bus[:, 1].astype(int),
        pd=bus[:, 2], qd=bus[:, 3], gs=bus[:, 4], bs=bus[:, 5],
        area=bus[:, 6].astype(int), vm0=bus[:, 7], va0_deg=bus[:, 8],
        base_kv=bus[:, 9], zone=bus[:, 10].astype(int),
        vmax=bus[:, 11], vmin=bus[:, 12],
        gen_bus=gen[:, 0].astype(int), pg=gen[:, 1], qg=gen[:, 2],
        qmax=gen[:, 3], qmin=gen[:, 4], vg=gen[:, 5], mbase=gen[:, 6],
        gen_status=gen[:, 7].astype(int), pmax=gen[:, 8], pmin=gen[:, 9],
        br_from=branch[:, 0].astype(int), br_to=branch[:, 1].astype(int),
        br_r=branch[:, 2], br_x=branch[:, 3], br_b=branch[:, 4],
        rate_a=branch[:, 5], rate_b=branch[:, 6], rate_c=branch[:, 7],
        tap=branch[:, 8], shift_deg=branch[:, 9], br_status=branch[:, 10].astype(int),
        angmin=branch[:, 11] if branch.shape[1] > 11 else np.full(nbr, -360.0),
        angmax=branch[:, 12] if branch.shape[1] > 12 else np.full(nbr, 360.0),
    )
    case.validate()
    return case


def serialize_case(case: GridCase, name: str = "case") -> str:
    """Emit the case in the same MATPOWER subset; parse round-trips exactly."""
    def fmt(v: float) -> str:
        return repr(float(v))

    out = [f"function mpc = {name}", "mpc.version = '2';",
           f"mpc.baseMVA = {fmt(case.base_mva)};", "", "mpc.bus = ["]
    for i in range(case.n_bus):
        row = [case.bus_id[i], case.bus_type[i], fmt(case.pd[i]), fmt(case.qd[i]),
               fmt(case.gs[i]), fmt(case.bs[i]), case.area[i], fmt(case.vm0[i]),
               fmt(case.va0_deg[i]), fmt(case.base_kv[i]), case.zone[i],
               fmt(case.vmax[i]), fmt(case.vmin[i])]
        out.append("\t" + "\t".join(str(v) for v in row) + ";")
    out.append("];")
    out.append("")
    out.append("mpc.gen = [")
    for i in range(case.n_gen):
        row = [case.gen_bus[i], fmt(case.pg[i]), fmt(case.qg[i]), fmt(case.qmax[i]),
               fmt(case.qmin[i]), fmt(case.vg[i]), fmt(case.mbase[i]),
               case.gen_status[i], fmt(case.pmax[i]), fmt(case.pmin[i])]
        out.append("\t" + "\t".join(str(v) for v in row) + ";")
    out.append("];")
    out.append("")
    out.append("mpc.branch = [")
    for i in range(case.n_branch):
        row = [case.br_from[i], case.br_to[i], fmt(case.br_r[i]), fmt(case.br_x[i]),
               fmt(case.br_b[i]), fmt(case.rate_a[i]), fmt(case.rate_b[i]),
               fmt(case.rate_c[i]), fmt(case.tap[i]), fmt(case.shift_deg[i]),
               case.br_status[i], fmt(case.angmin[i]), fmt(case.angmax[i])]
        out.append("\t" + "\t".join(str(v) for v in row) + ";")
    out.append("];")
    return "\n".join(out) + "\n"


def load_bundled_case(name: str = "case14.m") -> GridCase:
    """Parse one of the grid cases shipped with the package."""
    text = resources.files("loadgan").joinpath(f"data/{name}").read_text(encoding="utf-8")
    return parse_matpower_case(text)


# ------------------------------------------------------------ power flow

def build_ybus(case: GridCase) -> np.ndarray:
    """Dense complex bus admittance matrix in per-unit."""
    n = case.n_bus
    idx = case.bus_index()
    y = np.zeros((n, n), dtype=complex)
    status = case.br_status.astype(float)
    ys = status / (case.br_r + 1j * case.br_x)
    bc = status * case.br_b
    tap = np.where(case.tap == 0.0, 1.0, case.tap) * np.exp(1j * np.radians(case.shift_deg))
    yff = (ys + 1j * bc / 2.0) / (tap * np.conj(tap))
    yft = -ys / np.conj(tap)
    ytf = -ys / tap
    ytt = ys + 1j * bc / 2.0
    for k in range(case.n_branch):
        f, t = idx[int(case.br_from[k])], idx[int(case.br_to[k])]
        y[f, f] += yff[k]
        y[f, t] += yft[k]
        y[t, f] += ytf[k]
        y[t, t] += ytt[k]
    y[np.diag_indices(n)] += (case.gs + 1j * case.bs) / case.base_mva
    return y


@dataclass
class PFSolution:
    vm: np.ndarray            # p.u., in case bus order
    va: np.ndarray            # radians
    converged: bool
    iterations: int
    max_mismatch: float       # p.u.
    mismatch_history: list[float] = field(default_factory=list)


def _voltage_setpoints(case: GridCase) -> np.ndarray:
    """PV/slack magnitude setpoints: first in-service generator's Vg."""
    setpoint = case.vm0.copy()
    idx = case.bus_index()
    seen = set()
    for g in range(case.n_gen):
        b = idx[int(case.gen_bus[g])]
        if case.gen_status[g] != 0 and b not in seen:
            setpoint[b] = case.vg[g]
            seen.add(b)
    return setpoint


def bus_injections_spec(case: GridCase) -> np.ndarray:
    """Scheduled complex injections (gen minus load) per bus, in p.u."""
    s = -(case.pd + 1j * case.qd).astype(complex)
    idx = case.bus_index()
    for g in range(case.n_gen):
        if case.gen_status[g] != 0:
            s[idx[int(case.gen_bus[g])]] += case.pg[g] + 1j * case.qg[g]
    return s / case.base_mva


def newton_pf(case: GridCase, tol: float = 1e-8, max_iter: int = 20,
              flat_start: bool = True) -> PFSolution:
    """Full Newton-Raphson on the polar power-mismatch equations.

    Convergence criterion is max |dP, dQ| <= tol in p.u. On divergence the
    best iterate seen is returned with converged=False.
    """
    case.validate()
    ybus = build_ybus(case)
    n = case.n_bus
    slack = np.flatnonzero(case.bus_type == SLACK)
    pv = np.flatnonzero(case.bus_type == PV)
    pq = np.flatnonzero(case.bus_type == PQ)
    pvpq = np.concatenate([pv, pq])
    s_spec = bus_injections_spec(case)

    setpoint = _voltage_setpoints(case)
    if flat_start:
        vm = np.ones(n)
        vm[pv] = setpoint[pv]
        vm[slack] = setpoint[slack]
        va = np.full(n, np.radians(case.va0_deg[slack[0]]))
    else:
        vm = case.vm0.copy()
        vm[pv] = setpoint[pv]
        vm[slack] = setpoint[slack]
        va = np.radians(case.va0_deg)

    def mismatch(vm, va):
        v = vm * np.exp(1j * va)
        mis = v * np.conj(ybus @ v) - s_spec
        return np.concatenate([mis[pvpq].real, mis[pq].imag]), v

    f, v = mismatch(vm, va)
    norm = float(np.abs(f).max()) if f.size else 0.0
    history = [norm]
    best = (vm.copy(), va.copy(), norm)

    iterations = 0
    converged = norm <= tol
    while not converged and iterations < max_iter:
        ibus = ybus @ v
        diag_v = np.diag(v)
        diag_i = np.diag(ibus)
        diag_vn = np.diag(v / np.abs(v))
        ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
        ds_dvm = diag_v @ np.conj(ybus @ diag_vn) + np.conj(diag_i) @ diag_vn

        j11 = ds_dva[np.ix_(pvpq, pvpq)].real
        j12 = ds_dvm[np.ix_(pvpq, pq)].real
        j21 = ds_dva[np.ix_(pq, pvpq)].imag
        j22 = ds_dvm[np.ix_(pq, pq)].imag
        jac = np.block([[j11, j12], [j21, j22]])

        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            raise SingularJacobian(f"singular Jacobian at iteration {iterations}") from None

        if not np.all(np.isfinite(dx)):
            return PFSolution(best[0], best[1], False, iterations, best[2], history)

        va[pvpq] += dx[:pvpq.size]
        vm[pq] += dx[pvpq.size:]
        iterations += 1

        f, v = mismatch(vm, va)
        norm = float(np.abs(f).max()) if f.size else 0.0
        history.append(norm)
        if not np.isfinite(norm):
            return PFSolution(best[0], best[1], False, iterations, best[2], history)
        if norm < best[2]:
            best = (vm.copy(), va.copy(), norm)
        converged = norm <= tol

    return PFSolution(vm, va, converged, iterations, norm, history)


# ---------------------------------------------------- profile -> grid mapping

@dataclass
class HourlyLoads:
    """Per-hour bus loads in MW/MVAr, shape (hours, n_bus) in case bus order."""

    pd: np.ndarray
    qd: np.ndarray

    @property
    def n_hours(self) -> int:
        return self.pd.shape[0]


def map_profiles(case: GridCase, assignment: dict[int, np.ndarray]) -> HourlyLoads:
    """Peak-match profiles onto bus loads: Pd(t) = Pd_base * p(t)/max(p).

    Every PQ bus with nonzero base Pd must be assigned a profile; reactive
    load scales with the same factor (constant power factor). At the profile's
    peak hour a bus carries exactly its base-case load.
    """
    idx = case.bus_index()
    factors = {}
    hours = None
    for bus_id, profile in assignment.items():
        if int(bus_id) not in idx:
            raise UnassignedLoad(f"assigned bus {bus_id} does not exist")
        profile = np.asarray(profile, dtype=np.float64)
        peak = profile.max() if profile.size else 0.0
        if peak <= 0.0:
            raise DegenerateProfile(f"bus {bus_id}: profile peak must be > 0")
        if hours is None:
            hours = profile.size
        elif profile.size != hours:
            raise DegenerateProfile(f"bus {bus_id}: profile length {profile.size} != {hours}")
        factors[idx[int(bus_id)]] = profile / peak

    for b in range(case.n_bus):
        if case.bus_type[b] == PQ and case.pd[b] != 0.0 and b not in factors:
            raise UnassignedLoad(f"PQ bus {int(case.bus_id[b])} has load but no profile")
    if hours is None:
        raise UnassignedLoad("no profiles assigned")

    pd = np.tile(case.pd, (hours, 1))
    qd = np.tile(case.qd, (hours, 1))
    for b, factor in factors.items():
        pd[:, b] = case.pd[b] * factor
        qd[:, b] = case.qd[b] * factor
    return HourlyLoads(pd, qd)


# ------------------------------------------------------------- feasibility

@dataclass
class Violation:
    hour: int
    element: str      # "bus" or "gen"
    element_id: int   # bus id, or generator row index
    quantity: str     # vm_min, vm_max, qg_min, qg_max, pg_min, pg_max
    value: float
    limit: float


@dataclass
class HourResult:
    hour: int
    converged: bool
    iterations: int
    max_mismatch: float
    violations: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.converged and not self.violations


@dataclass
class FeasibilityReport:
    hours: list[HourResult]

    @property
    def n_feasible(self) -> int:
        return sum(h.feasible for h in self.hours)

    @property
    def all_feasible(self) -> bool:
        return self.n_feasible == len(self.hours)


def _allocate_gen_outputs(case: GridCase, sol: PFSolution) -> tuple[np.ndarray, np.ndarray]:
    """Per-generator (Pg, Qg) in MW/MVAr recovered from a solved power flow.

    PV and slack buses: reactive output balances the bus; the slack bus also
    absorbs the active residual. Buses with several in-service generators
    split the bus total equally.
    """
    ybus = build_ybus(case)
    v = sol.vm * np.exp(1j * sol.va)
    s_inj = v * np.conj(ybus @ v) * case.base_mva  # MW/MVAr net injection
    idx = case.bus_index()

    pg = case.pg.astype(float).copy()
    qg = case.qg.astype(float).copy()
    live = case.gen_status != 0
    for b in range(case.n_bus):
        gens = [g for g in range(case.n_gen) if live[g] and idx[int(case.gen_bus[g])] == b]
        if not gens:
            continue
        if case.bus_type[b] in (PV, SLACK):
            q_total = s_inj[b].imag + case.qd[b]
            for g in gens:
                qg[g] = q_total / len(gens)
        if case.bus_type[b] == SLACK:
            p_total = s_inj[b].real + case.pd[b]
            for g in gens:
                pg[g] = p_total / len(gens)
    pg[~live] = 0.0
    qg[~live] = 0.0
    return pg, qg


def _check_limits(case: GridCase, sol: PFSolution, hour: int,
                  eps: float = 1e-9) -> list[Violation]:
    violations = []
    for b in range(case.n_bus):
        if sol.vm[b] > case.vmax[b] + eps:
            violations.append(Violation(hour, "bus", int(case.bus_id[b]), "vm_max",
                                        float(sol.vm[b]), float(case.vmax[b])))
        if sol.vm[b] < case.vmin[b] - eps:
            violations.append(Violation(hour, "bus", int(case.bus_id[b]), "vm_min",
                                        float(sol.vm[b]), float(case.vmin[b])))
    pg, qg = _allocate_gen_outputs(case, sol)
    idx = case.bus_index()
    slack_bus = int(np.flatnonzero(case.bus_type == SLACK)[0])
    for g in range(case.n_gen):
        if case.gen_status[g] == 0:
            continue
        if qg[g] > case.qmax[g] + eps:
            violations.append(Violation(hour, "gen", g, "qg_max", float(qg[g]),
                                        float(case.qmax[g])))
        if qg[g] < case.qmin[g] - eps:
            violations.append(Violation(hour, "gen", g, "qg_min", float(qg[g]),
                                        float(case.qmin[g])))
        if idx[int(case.gen_bus[g])] == slack_bus:
            if pg[g] > case.pmax[g] + eps:
                violations.append(Violation(hour, "gen", g, "pg_max", float(pg[g]),
                                            float(case.pmax[g])))
            if pg[g] < case.pmin[g] - eps:
                violations.append(Violation(hour, "gen", g, "pg_min", float(pg[g]),
                                            float(case.pmin[g])))
    return violations


def feasibility_report(case: GridCase, hourly: HourlyLoads, tol: float = 1e-8,
                       max_iter: int = 20) -> FeasibilityReport:
    """Solve one power flow per hour and check voltage and generator limits.

    Non-slack in-service generators are dispatched proportionally to the total
    load of the hour; the slack absorbs the residual. A power flow failure
    marks the hour infeasible instead of aborting the scan.
    """
    base_total = float(case.pd.sum())
    slack_bus_id = int(case.bus_id[np.flatnonzero(case.bus_type == SLACK)[0]])
    results = []
    for hour in range(hourly.n_hours):
        hour_case = case.copy()
        hour_case.pd = hourly.pd[hour].copy()
        hour_case.qd = hourly.qd[hour].copy()
        factor = float(hourly.pd[hour].sum()) / base_total if base_total > 0 else 1.0
        for g in range(case.n_gen):
            if case.gen_status[g] != 0 and int(case.gen_bus[g]) != slack_bus_id:
                hour_case.pg[g] = case.pg[g] * factor
        try:
            sol = newton_pf(hour_case, tol=tol, max_iter=max_iter)
        except SingularJacobian:
            results.append(HourResult(hour, False, 0, float("inf")))
            continue
        violations = _check_limits(hour_case, sol, hour) if sol.converged else []
        results.append(HourResult(hour, sol.converged, sol.iterations,
                                  sol.max_mismatch, violations))
    return FeasibilityReport(results)


# ----------------------------------------------------------------- reports

FEASIBILITY_HEADER = "hour,converged,iterations,max_mismatch,n_violations"
VIOLATIONS_HEADER = "hour,element,element_id,quantity,value,limit"


def feasibility_csv(report: FeasibilityReport) -> str:
    lines = [FEASIBILITY_HEADER]
    for h in report.hours:
        lines.append(f"{h.hour},{int(h.converged)},{h.iterations},"
                     f"{h.max_mismatch!r},{len(h.violations)}")
    return "\n".join(lines) + "\n"


def violations_csv(report: FeasibilityReport) -> str:
    lines = [VIOLATIONS_HEADER]
    for h in report.hours:
        for v in h.violations:
            lines.append(f"{v.hour},{v.element},{v.element_id},{v.quantity},"
                         f"{v.value!r},{v.limit!r}")
    return "\n".join(lines) + "\n"
