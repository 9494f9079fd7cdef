"""Packing lower bounds, covering upper bounds and the ratio check on 0.2 <= k <= 3."""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import simpson

from exceptions import ArgumentError, DomainError
from ode_engine import OdeSolution, System, get_solution

K_RANGE = (0.2, 3.0)
# previously proved thresholds; the open range lay between them
PRIOR_GAP = (0.2403, 2.1243)
G_CHECK_K = 1.28
H_CHECK_K = 1.29
G_CHECK_VALUE = 1.9969
H_CHECK_VALUE = 1.987
MONOTONE_NOISE = 1e-9


def _check_k(k: float, sol: OdeSolution):
    if not 0 <= k <= sol.t_end:
        raise DomainError(f"k={k} outside the solved range [0, {sol.t_end}] of {sol.which.value}")


def l_nu_star(k: float, ysol: OdeSolution) -> float:
    """(k - y(k)/2) / 3."""
    _check_k(k, ysol)
    return (k - ysol(k) / 2.0) / 3.0


def l_nu_old(k: float, zsol: OdeSolution) -> float:
    """(k - z(k)/2 - 2 int_0^k [z^2 - 1 + e^{-z^2}] dt) / 3, Simpson on the solution grid."""
    _check_k(k, zsol)
    ts = np.append(zsol.grid[zsol.grid < k], k)
    if len(ts) < 2:
        integral = 0.0
    else:
        zs = zsol(ts)
        z2 = zs * zs
        integral = float(simpson(z2 + np.expm1(-z2), x=ts))
    return (k - zsol(k) / 2.0 - 2.0 * integral) / 3.0


@dataclass(frozen=True)
class CoverBound:
    value: float
    branch: str


def u_tau(k: float, asol: OdeSolution) -> CoverBound:
    """min{k - a(k), k/2}, with the active branch."""
    _check_k(k, asol)
    tfp_side = k - asol(k)
    if tfp_side <= k / 2.0:
        return CoverBound(value=tfp_side, branch="k-a(k)")
    return CoverBound(value=k / 2.0, branch="k/2")


def g_value(k: float, ysol: OdeSolution) -> float:
    return (k / 2.0) / l_nu_star(k, ysol)


def g_formula(k: float, ysol: OdeSolution) -> float:
    """g written as 3k / (2k - y(k))."""
    _check_k(k, ysol)
    return 3.0 * k / (2.0 * k - ysol(k))


def h_value(k: float, ysol: OdeSolution, asol: OdeSolution) -> float:
    _check_k(k, asol)
    return (k - asol(k)) / l_nu_star(k, ysol)


def dg_numerator(k: float, y: float) -> float:
    """Numerator of dg/dk: 18k e^{-y^2} - 3y - 12k."""
    return 18.0 * k * math.exp(-y * y) - 3.0 * y - 12.0 * k


def dg_numerator_slope(k: float, y: float) -> float:
    """d/dk of the numerator after substituting y' = 6e^{-y^2} - 4."""
    e = math.exp(-y * y)
    return -36.0 * k * y * e * (6.0 * e - 4.0)


def k_grid(k_min: float, k_max: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ArgumentError(f"grid step must be positive (got {step})")
    count = int(round((k_max - k_min) / step))
    return np.round(np.linspace(k_min, k_min + count * step, count + 1), 12)


@dataclass
class BoundsTable:
    """Bounds sampled on a k grid; one row per k."""
    frame: pd.DataFrame

    COLUMNS = ["k", "y", "a", "z", "l_nu_star", "l_nu", "u_tau", "u_tau_branch", "g", "h", "ratio"]

    @property
    def k(self) -> np.ndarray:
        return self.frame["k"].to_numpy()

    def to_records(self) -> List[Dict]:
        return self.frame.to_dict(orient="records")


def bounds_table(grid: np.ndarray, ysol: Optional[OdeSolution] = None,
                 asol: Optional[OdeSolution] = None,
                 zsol: Optional[OdeSolution] = None) -> BoundsTable:
    ysol = ysol or get_solution(System.Y)
    asol = asol or get_solution(System.A)
    zsol = zsol or get_solution(System.Z)
    rows = []
    for k in grid:
        k = float(k)
        lower = l_nu_star(k, ysol)
        cover = u_tau(k, asol)
        rows.append({
            "k": k,
            "y": ysol(k),
            "a": asol(k),
            "z": zsol(k),
            "l_nu_star": lower,
            "l_nu": l_nu_old(k, zsol),
            "u_tau": cover.value,
            "u_tau_branch": cover.branch,
            "g": (k / 2.0) / lower if lower > 0 else math.nan,
            "h": (k - asol(k)) / lower if lower > 0 else math.nan,
            "ratio": cover.value / lower if lower > 0 else math.nan,
        })
    return BoundsTable(frame=pd.DataFrame(rows, columns=BoundsTable.COLUMNS))


@dataclass
class AppendixReport:
    verdicts: Dict[str, bool]
    values: Dict[str, float]
    gap_ratios: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> Dict:
        return {"passed": self.passed, "verdicts": self.verdicts, "values": self.values,
                "gap_max_ratio": self.gap_ratios}

    def text(self) -> str:
        v = self.values
        status = {name: "PASS" if ok else "FAIL" for name, ok in self.verdicts.items()}
        lines = [
            f"(i)   h increasing on [0.2, {H_CHECK_K}]: {status['h_increasing']} "
            f"(smallest step {v['h_min_step']:+.3e})",
            f"(ii)  g decreasing on [{G_CHECK_K}, 3]: {status['g_decreasing']} "
            f"(largest step {v['g_max_step']:+.3e})",
            f"(iii) g({G_CHECK_K}) = {v['g_check']:.6f} <= {G_CHECK_VALUE}: {status['g_check']}",
            f"(iii) h({H_CHECK_K}) = {v['h_check']:.6f} <= {H_CHECK_VALUE}: {status['h_check']}",
            f"max of min(g, h) on [0.2, 3] = {v['max_ratio']:.6f} < 2: {status['ratio_below_two']}",
            f"dg/dk numerator <= 0 on [{G_CHECK_K}, 3]: {status['dg_numerator_nonpositive']} "
            f"(max {v['dg_numerator_max']:+.3e}, value at k=0 {v['dg_numerator_at_zero']:+.3e})",
        ]
        for name, ratio in self.gap_ratios.items():
            lines.append(f"max ratio on {name}: {ratio:.6f}")
        return "\n".join(lines)


def appendix_report(grid_step: float = 1e-3, ysol: Optional[OdeSolution] = None,
                    asol: Optional[OdeSolution] = None) -> AppendixReport:
    """Discrete monotonicity, the two point checks and the ratio < 2 check."""
    if not 0 < grid_step <= 1e-3:
        raise ArgumentError(f"grid step must lie in (0, 1e-3] (got {grid_step})")
    ysol = ysol or get_solution(System.Y)
    asol = asol or get_solution(System.A)

    h_grid = k_grid(K_RANGE[0], H_CHECK_K, grid_step)
    h_vals = np.array([h_value(k, ysol, asol) for k in h_grid])
    g_grid = k_grid(G_CHECK_K, K_RANGE[1], grid_step)
    g_vals = np.array([g_value(k, ysol) for k in g_grid])
    full = k_grid(K_RANGE[0], K_RANGE[1], grid_step)
    ratios = np.array([min(g_value(k, ysol), h_value(k, ysol, asol)) for k in full])
    numerators = np.array([dg_numerator(k, ysol(k)) for k in g_grid])

    h_steps, g_steps = np.diff(h_vals), np.diff(g_vals)
    g_check, h_check = g_value(G_CHECK_K, ysol), h_value(H_CHECK_K, ysol, asol)
    values = {
        "h_min_step": float(h_steps.min()),
        "g_max_step": float(g_steps.max()),
        "g_check": g_check,
        "h_check": h_check,
        "max_ratio": float(ratios.max()),
        "argmax_ratio_k": float(full[int(ratios.argmax())]),
        "dg_numerator_max": float(numerators.max()),
        "dg_numerator_at_zero": dg_numerator(0.0, ysol(0.0)),
        "dg_numerator_slope_max": float(max(dg_numerator_slope(k, ysol(k)) for k in g_grid)),
    }
    verdicts = {
        "h_increasing": bool(h_steps.min() > -MONOTONE_NOISE),
        "g_decreasing": bool(g_steps.max() < MONOTONE_NOISE),
        "g_check": bool(g_check <= G_CHECK_VALUE),
        "h_check": bool(h_check <= H_CHECK_VALUE),
        "ratio_below_two": bool(ratios.max() < 2.0),
        "dg_numerator_nonpositive": bool(numerators.max() <= MONOTONE_NOISE),
    }
    edges = [K_RANGE[0], PRIOR_GAP[0], PRIOR_GAP[1], K_RANGE[1]]
    gap_ratios = {}
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (full >= lo) & (full <= hi)
        gap_ratios[f"[{lo}, {hi}]"] = float(ratios[mask].max())
    return AppendixReport(verdicts=verdicts, values=values, gap_ratios=gap_ratios)


def ratio_summary(table: BoundsTable) -> Tuple[float, float]:
    """(max ratio, k where it is attained) over the table."""
    frame = table.frame.dropna(subset=["ratio"])
    idx = frame["ratio"].idxmax()
    return float(frame.loc[idx, "ratio"]), float(frame.loc[idx, "k"])
