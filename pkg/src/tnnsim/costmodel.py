"""Gate-level scaling equations for neurons and columns, plus a linear
calibration that maps them onto the 45 nm post-synthesis reference rows."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import nnls

from .temporal import GAMMA

# R-STDP logic overhead relative to STDP (gates and power); time is unchanged.
RSTDP_OVERHEAD = 1.05


@dataclass(frozen=True)
class GateCostReport:
    gates: float
    delay_gates: float
    time_gate_delays: float
    p_static_units: float
    p_dynamic_units: float

    def scaled(self, factor: float) -> "GateCostReport":
        return replace(self, gates=self.gates * factor, p_static_units=self.p_static_units * factor,
                       p_dynamic_units=self.p_dynamic_units * factor)


@dataclass(frozen=True)
class ReferenceRow:
    mode: str
    p: int
    q: int
    gates: int
    area_mm2: float
    time_ns: float
    power_mw: float


# 45 nm post-synthesis results (Nangate, low-power corner).
SYNTHESIS_45NM = (
    ReferenceRow("stdp", 64, 8, 51_824, 0.05, 28.95, 0.25),
    ReferenceRow("stdp", 128, 10, 128_658, 0.13, 32.40, 0.62),
    ReferenceRow("stdp", 1024, 16, 1_639_020, 1.65, 42.30, 7.96),
    ReferenceRow("rstdp", 64, 8, 54_384, 0.05, 28.95, 0.26),
    ReferenceRow("rstdp", 128, 10, 135_058, 0.14, 32.40, 0.65),
    ReferenceRow("rstdp", 1024, 16, 1_720_940, 1.75, 42.30, 8.36),
)


def reference_rows(mode: str = "stdp") -> list[ReferenceRow]:
    return [r for r in SYNTHESIS_45NM if r.mode == mode]


def log2_ceil(p: int) -> int:
    return math.ceil(math.log2(p))


def neuron_cost(p: int) -> GateCostReport:
    if p < 2:
        raise ValueError("neuron cost model needs p >= 2")
    lg = log2_ceil(p)
    gates = 102 * p + 8 * lg + 36
    delay = 6 * lg + 4
    return GateCostReport(
        gates=gates,
        delay_gates=delay,
        time_gate_delays=GAMMA * delay,
        p_static_units=gates,
        p_dynamic_units=204 * p + 185 * lg + 241,
    )


def column_cost(p: int, q: int, mode: str = "stdp") -> GateCostReport:
    if p < 2 or q < 1:
        raise ValueError("column cost model needs p >= 2 and q >= 1")
    lg = log2_ceil(p)
    gates = 102 * p * q + 8 * q * lg + 44 * q + q * q
    report = GateCostReport(
        gates=gates,
        delay_gates=6 * lg + 4,
        time_gate_delays=90 * lg + 60,
        p_static_units=gates,
        p_dynamic_units=204 * p * q + 185 * q * lg + 257 * q + 2 * q * q,
    )
    if mode == "rstdp":
        report = report.scaled(RSTDP_OVERHEAD)
    elif mode != "stdp":
        raise ValueError(f"unknown learning mode {mode!r}")
    return report


@dataclass(frozen=True)
class TechCalibration:
    area_per_gate: float                # mm^2
    delay_per_gate: float               # ns
    static_power_per_gate: float        # mW
    dynamic_power_per_transition: float  # mW

    def __post_init__(self):
        if min(self.area_per_gate, self.delay_per_gate, self.static_power_per_gate) <= 0:
            raise ValueError("area, delay and static power coefficients must be positive")
        if self.dynamic_power_per_transition < 0:
            raise ValueError("dynamic power coefficient must be non-negative")


@dataclass
class CalibrationFit:
    calibration: TechCalibration
    residuals: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalEstimate:
    area_mm2: float
    time_ns: float
    power_mw: float

    def as_dict(self):
        return asdict(self)


def _through_origin(x: np.ndarray, y: np.ndarray) -> float:
    denom = float(x @ x)
    if denom == 0:
        raise DegenerateFitError("all-zero regressor")
    return float(x @ y) / denom


def calibrate(rows=None) -> CalibrationFit:
    """Least-squares per-gate coefficients from reference rows.

    Area and time are single-coefficient fits through the origin. Power is
    static-per-gate plus dynamic-per-transition, fitted with non-negative
    least squares; when the two regressors are (near) collinear the dynamic
    term may be pinned at zero, which is reported in ``notes``.
    """
    rows = list(reference_rows("stdp") if rows is None else rows)
    if not rows:
        raise DegenerateFitError("calibration needs at least one reference row")
    reports = [column_cost(r.p, r.q, "stdp") for r in rows]
    gates = np.array([rep.gates for rep in reports], dtype=float)
    tgd = np.array([rep.time_gate_delays for rep in reports], dtype=float)
    dyn = np.array([rep.p_dynamic_units for rep in reports], dtype=float)
    area = np.array([r.area_mm2 for r in rows])
    time = np.array([r.time_ns for r in rows])
    power = np.array([r.power_mw for r in rows])

    notes = []
    a = _through_origin(gates, area)
    d = _through_origin(tgd, time)
    design = np.column_stack([gates, dyn])
    rank = np.linalg.matrix_rank(design)
    if rank < 2:
        # underdetermined: minimum-norm solution spreads power over both terms
        coef = np.linalg.lstsq(design, power, rcond=None)[0]
        notes.append("power fit underdetermined (rank %d); minimum-norm split used" % rank)
    else:
        coef, _ = nnls(design, power)
        cond = np.linalg.cond(design)
        if np.any(coef == 0):
            notes.append(f"power fit hit the non-negativity bound (condition number {cond:.0f}); "
                         "gate and transition counts are nearly collinear across the reference rows")
    if coef[0] <= 0:
        raise DegenerateFitError("static power coefficient is not positive")
    calib = TechCalibration(area_per_gate=a, delay_per_gate=d,
                            static_power_per_gate=float(coef[0]),
                            dynamic_power_per_transition=float(max(coef[1], 0.0)))
    residuals = []
    for r, rep in zip(rows, reports):
        est = estimate_physical(rep, calib)
        residuals.append({
            "p": r.p, "q": r.q,
            "area_rel": est.area_mm2 / r.area_mm2 - 1,
            "time_rel": est.time_ns / r.time_ns - 1,
            "power_rel": est.power_mw / r.power_mw - 1,
        })
    return CalibrationFit(calibration=calib, residuals=residuals, notes=notes)


def estimate_physical(report: GateCostReport, calib: TechCalibration) -> PhysicalEstimate:
    return PhysicalEstimate(
        area_mm2=report.gates * calib.area_per_gate,
        time_ns=report.time_gate_delays * calib.delay_per_gate,
        power_mw=report.p_static_units * calib.static_power_per_gate
        + report.p_dynamic_units * calib.dynamic_power_per_transition,
    )


def format_table(rows: list[dict]) -> str:
    """Aligned plain-text table from a list of flat dicts with equal keys."""
    if not rows:
        return ""
    keys = list(rows[0])
    cells = [[str(k) for k in keys]] + [[_fmt(r[k]) for k in keys] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(keys))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:,.4g}" if abs(v) < 1000 else f"{v:,.0f}"
    if isinstance(v, int):
        return f"{v:,}"
    return str(v)
