"""Fixed-step integration of the three scalar process ODEs and their closed forms.

    Y: y' = 6 exp(-y^2) - 4        (unmatched degree, packing process)
    A: a' = exp(-4 a^2)            (accepted edges, triangle-free process)
    Z: z' = 2 exp(-z^2) - 4 z^2    (unmatched degree, earlier packing variant)

All three start from 0 and are integrated with classical RK4. Solutions keep
their derivative samples and interpolate with cubic Hermite splines.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import CubicHermiteSpline

from exceptions import ArgumentError, DomainError

ZETA = math.sqrt(math.log(1.5))
Z_FIXED_POINT_BOUND = 0.5932
SERIES_CAP = 40
DEFAULT_H = 1e-4


class System(str, Enum):
    Y = "Y"
    A = "A"
    Z = "Z"


_RHS: Dict[System, Callable[[float], float]] = {
    System.Y: lambda x: 6.0 * math.exp(-x * x) - 4.0,
    System.A: lambda x: math.exp(-4.0 * x * x),
    System.Z: lambda x: 2.0 * math.exp(-x * x) - 4.0 * x * x,
}


def rhs(which: System, x: float) -> float:
    return _RHS[System(which)](x)


@dataclass
class OdeSolution:
    """Dense solution of one system on [0, t_end]."""
    which: System
    grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    h: float
    _spline: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        self._spline = CubicHermiteSpline(self.grid, self.values, self.derivatives)

    @property
    def t_end(self) -> float:
        return float(self.grid[-1])

    def _check_range(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.t_end + 1e-12):
            raise DomainError(f"t={t} outside the solved range [0, {self.t_end}]")

    def __call__(self, t):
        self._check_range(t)
        out = self._spline(np.minimum(t, self.t_end))
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, t):
        self._check_range(t)
        out = self._spline(np.minimum(t, self.t_end), 1)
        return float(out) if np.ndim(out) == 0 else out

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.grid, "value": self.values, "derivative": self.derivatives})


def integrate(which: System, t_end: float, h: float = DEFAULT_H) -> OdeSolution:
    """Classical RK4 from x(0) = 0; the step is shrunk slightly so the grid ends at t_end."""
    if h <= 0:
        raise ArgumentError(f"step size must be positive (got {h})")
    if t_end <= 0:
        raise ArgumentError(f"t_end must be positive (got {t_end})")
    which = System(which)
    f = _RHS[which]
    steps = max(1, int(math.ceil(t_end / h - 1e-9)))
    step = t_end / steps
    values = np.empty(steps + 1)
    x = 0.0
    values[0] = x
    for i in range(1, steps + 1):
        k1 = f(x)
        k2 = f(x + 0.5 * step * k1)
        k3 = f(x + 0.5 * step * k2)
        k4 = f(x + step * k3)
        x += step * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        values[i] = x
    grid = np.linspace(0.0, t_end, steps + 1)
    derivatives = np.array([f(v) for v in values])
    return OdeSolution(which=which, grid=grid, values=values, derivatives=derivatives, h=step)


@lru_cache(maxsize=16)
def get_solution(which: System, t_end: float = 5.0, h: float = DEFAULT_H) -> OdeSolution:
    """Shared cached solution; callers must not mutate its arrays."""
    return integrate(System(which), t_end, h)


def solution_covering(which: System, t: float, h: float = DEFAULT_H) -> OdeSolution:
    """Cached solution whose range reaches t (at least [0, 5])."""
    return get_solution(System(which), max(5.0, math.ceil(t)), h)


def richardson_order(which: System, t: float, h: float = 0.05) -> float:
    """Observed convergence order at time t from steps h, h/2, h/4."""
    coarse, mid, fine = (integrate(which, t, step)(t) for step in (h, h / 2, h / 4))
    return math.log2(abs(coarse - mid) / abs(mid - fine))


def kappa(y: float) -> float:
    """2 y^{-1} (1 - e^{-y^2}), continuously extended by 0 at y = 0."""
    if y == 0:
        return 0.0
    return -2.0 * math.expm1(-y * y) / y


@dataclass(frozen=True)
class ClosedForms:
    """Deterministic counterparts of the tracked counts at one value of y."""
    y: float
    cap: int = SERIES_CAP

    def _check(self, *indices: int) -> bool:
        if any(i > self.cap for i in indices):
            raise ArgumentError(f"index above cap {self.cap}: {indices}")
        return all(i >= 0 for i in indices)

    def q(self, b: int, c: int) -> float:
        if not self._check(b, c):
            return 0.0
        y2 = self.y * self.y
        return math.exp(-2.0 * y2) * y2 ** (b + c) / (math.factorial(b) * math.factorial(c))

    def r(self, c: int) -> float:
        if not self._check(c):
            return 0.0
        y2 = self.y * self.y
        return math.exp(-y2) * y2 ** c / math.factorial(c)

    def s(self, c: int) -> float:
        if not self._check(c):
            return 0.0
        y2 = self.y * self.y
        return math.exp(-y2) * self.y ** (2 * c + 1) / math.factorial(c)

    @property
    def alpha(self) -> float:
        return 2.0 * self.s(0)

    @property
    def kappa(self) -> float:
        return kappa(self.y)

    def kappa_series(self, terms: int = SERIES_CAP) -> float:
        """Truncated 2 e^{-y^2} sum_{c < terms} y^{2c+1} / (c+1)!."""
        y = self.y
        return 2.0 * math.exp(-y * y) * sum(y ** (2 * c + 1) / math.factorial(c + 1) for c in range(terms))


def closed_forms_at(y: float, cap: int = SERIES_CAP) -> ClosedForms:
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"closed forms are evaluated for 0 <= y <= 1 (got {y})")
    return ClosedForms(y=float(y), cap=cap)


@dataclass(frozen=True)
class MasterResidual:
    res_q: float
    res_r: float
    res_s: float
    one_sided: bool


def master_equations(cf: ClosedForms, b: int, c: int) -> Tuple[float, float, float]:
    """Right-hand sides of the q_{b,c}, r_c and s_c evolution equations at cf.y."""
    a, k = cf.alpha, cf.kappa
    dq = (2 * cf.q(b - 1, c) * a + 2 * cf.q(b, c - 1) * a
          + 4 * (b + 1) * k * cf.q(b + 1, c) + 4 * (c + 1) * k * cf.q(b, c + 1)
          - 4 * cf.q(b, c) * (a + b * k + c * k))
    dr = 2 * cf.r(c - 1) * a + 4 * (c + 1) * k * cf.r(c + 1) - (2 * a + 4 * c * k) * cf.r(c)
    ds = (2 * cf.s(c - 1) * a + 4 * (c + 1) * k * cf.s(c + 1) + 2 * cf.q(c, 0)
          - 2 * (a + 2 * c * k + k) * cf.s(c))
    return dq, dr, ds


def master_equation_residual(sol: OdeSolution, t: float, b: int, c: int,
                             delta: float = 1e-5) -> MasterResidual:
    """|d/dt closed form - master equation RHS| for q_{b,c}, r_c, s_c at time t."""
    if System(sol.which) is not System.Y:
        raise ArgumentError("master equations are stated along the Y solution")
    if not 0 <= t <= sol.t_end:
        raise DomainError(f"t={t} outside the solved range [0, {sol.t_end}]")

    def forms(at: float) -> np.ndarray:
        cf = closed_forms_at(min(max(sol(at), 0.0), 1.0))
        return np.array([cf.q(b, c), cf.r(c), cf.s(c)])

    one_sided = t - delta < 0 or t + delta > sol.t_end
    if t - delta < 0:
        deriv = (-3 * forms(t) + 4 * forms(t + delta) - forms(t + 2 * delta)) / (2 * delta)
    elif t + delta > sol.t_end:
        deriv = (3 * forms(t) - 4 * forms(t - delta) + forms(t - 2 * delta)) / (2 * delta)
    else:
        deriv = (forms(t + delta) - forms(t - delta)) / (2 * delta)
    if one_sided:
        logging.warning(f"one-sided difference used for the master equations at t={t}")
    expected = master_equations(closed_forms_at(sol(t)), b, c)
    res = np.abs(deriv - np.array(expected))
    return MasterResidual(res_q=float(res[0]), res_r=float(res[1]), res_s=float(res[2]), one_sided=one_sided)


def error_band(n: int, t: float) -> float:
    """exp{(1000 log n / log log n) t} n^{-1/5}; inf when it overflows."""
    if n < 10:
        raise ArgumentError(f"error band needs n >= 10 (got {n})")
    if t < 0:
        raise ArgumentError(f"t must be nonnegative (got {t})")
    log_n = math.log(n)
    try:
        return math.exp(1000.0 * log_n / math.log(log_n) * t) * n ** -0.2
    except OverflowError:
        return math.inf
