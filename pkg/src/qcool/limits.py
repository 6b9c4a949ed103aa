"""Cooling-limit boundaries, their numerical cross-checks, and sweeps.

Two closed-form critical success probabilities are provided: the
unconditional one, a function of the environment excitation p_T alone,
and the conditional (heralded) one, a function of the joint error
P_TL = p_T * P_L alone.  `critical_ps_numeric` locates the same
boundaries independently by bisection on the minimum partial-transpose
eigenvalue of the explicitly constructed states, and `sweep` evaluates
grids of (p_T, P_L, P_S) points into flat records.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .channel import ChannelParams, EnvironmentSpec, GROUND, conditional_state, project_b, tripartite_state, unconditional_state
from .entanglement import negativity
from .qmat import partial_transpose

BISECTION_TOL = 1e-8


class BracketError(RuntimeError):
    """No sign change of the minimum PT eigenvalue over the feasible bracket."""


@dataclass(frozen=True)
class LimitVerdict:
    unconditional_ok: bool
    conditional_ok: bool
    uncond_boundary_ps: float
    cond_boundary_ps: float


@dataclass(frozen=True)
class SweepRecord:
    """One evaluated grid point; the row type of the sweep data files."""

    p_t: float
    p_s: float
    p_l: float
    p_tl: float
    verdicts: LimitVerdict
    numeric_negativity: float
    feasible: bool

    @property
    def on_photonics_plane(self) -> bool:
        """Whether the point satisfies the 2*P_S + P_L = 1 constraint of the
        two-beam-splitter topology."""
        return abs(2.0 * self.p_s + self.p_l - 1.0) <= 1e-9


def uncond_boundary(p_t: float) -> float:
    """Critical P_S without heralding; the channel is quantum iff P_S
    strictly exceeds it.  Equals sqrt(p(1-p)) / (1 + sqrt(p(1-p)))."""
    if not 0.0 <= p_t <= 0.5:
        raise ValueError(f"p_t={p_t} outside [0, 1/2]")
    q = math.sqrt(p_t * (1.0 - p_t))
    return q / (1.0 + q)


def uncond_approx_ok(p_s: float, p_t: float) -> bool:
    """Small-p_T criterion: true iff p_T / P_S^2 < 1 (strict; round-off
    ties at the boundary count as failing)."""
    _check_unit("p_s", p_s)
    _check_unit("p_t", p_t)
    return p_t < p_s * p_s * (1.0 - 1e-12)


def cond_boundary(p_tl: float) -> float:
    """Critical P_S with heralding on the auxiliary output, as a function
    of the joint error P_TL = p_T * P_L:

        (sqrt(P_TL (4 - 3 P_TL)) - P_TL) / 2

    Zero at P_TL = 0 and at most 1/3 (attained at P_TL = 1/3)."""
    if not 0.0 <= p_tl <= 1.0:
        raise ValueError(f"p_tl={p_tl} outside [0, 1]")
    return (math.sqrt(p_tl * (4.0 - 3.0 * p_tl)) - p_tl) / 2.0


def cond_approx_ok(p_s: float, p_t: float, p_l: float) -> bool:
    """Small-p_T heralded criterion: true iff (p_T P_L) / P_S^2 < 1
    (strict; round-off ties count as failing)."""
    _check_unit("p_s", p_s)
    _check_unit("p_t", p_t)
    _check_unit("p_l", p_l)
    return p_t * p_l < p_s * p_s * (1.0 - 1e-12)


def high_temp_boundary(p_l: float) -> float:
    """Hot-environment (p_T ~ 1/2), small-loss critical P_S: sqrt(P_L/2)."""
    _check_unit("p_l", p_l)
    return math.sqrt(p_l / 2.0)


def _check_unit(name: str, v: float) -> None:
    if not (math.isfinite(v) and 0.0 <= v <= 1.0):
        raise ValueError(f"{name}={v} outside [0, 1]")


def _min_pt_eig_uncond(p_s: float, spec: EnvironmentSpec) -> float:
    rho = unconditional_state(p_s, spec)
    return float(np.linalg.eigvalsh(partial_transpose(rho, 1))[0])


def _min_pt_eig_cond(p_s: float, p_l: float, spec: EnvironmentSpec) -> float:
    params = ChannelParams(p_s, max(1.0 - p_s - p_l, 0.0), p_l)
    heralded, _ = project_b(tripartite_state(params, spec), GROUND)
    return float(np.linalg.eigvalsh(partial_transpose(heralded, 1))[0])


def critical_ps_numeric(
    p_t: float,
    p_l: float = 0.0,
    which: Literal["unconditional", "conditional"] = "unconditional",
    tol: float = BISECTION_TOL,
) -> float:
    """Locate the critical P_S by bisection on the minimum PT eigenvalue.

    For the conditional case the closure P_F = 1 - P_S - P_L is applied at
    every trial point and the bracket is [0, 1 - P_L].  Monotonicity of the
    eigenvalue in P_S is verified on the bracket before bisecting; a
    missing sign change raises BracketError reporting whether the feasible
    range is entirely entangled or entirely separable.
    """
    if not 0.0 < p_t <= 0.5:
        raise ValueError(f"p_t={p_t} outside (0, 1/2]")
    if not 0.0 <= p_l < 1.0:
        raise ValueError(f"p_l={p_l} outside [0, 1)")
    spec = EnvironmentSpec(p_t)
    if which == "unconditional":
        f = lambda ps: _min_pt_eig_uncond(ps, spec)
        lo, hi = 0.0, 1.0
    elif which == "conditional":
        f = lambda ps: _min_pt_eig_cond(ps, p_l, spec)
        lo, hi = 0.0, 1.0 - p_l
    else:
        raise ValueError(f"unknown boundary kind {which!r}")

    samples = [f(lo + (hi - lo) * k / 8.0) for k in range(9)]
    # Negativity (the clipped eigenvalue) must grow with P_S for the root
    # to be unique; the positive branch itself may wander.
    clipped = [min(s, 0.0) for s in samples]
    if any(b > a + 1e-9 for a, b in zip(clipped, clipped[1:])):
        raise BracketError("negativity is not monotone in P_S over the bracket")
    f_lo, f_hi = samples[0], samples[-1]
    if f_lo < 0.0:
        raise BracketError("always entangled over feasible P_S")
    if f_hi >= 0.0:
        raise BracketError("never entangled over feasible P_S")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class GridSpec:
    """Axis values for a sweep over (p_T, P_L, P_S)."""

    p_t_values: tuple[float, ...]
    p_l_values: tuple[float, ...]
    p_s_values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p_t_values", tuple(float(v) for v in self.p_t_values))
        object.__setattr__(self, "p_l_values", tuple(float(v) for v in self.p_l_values))
        object.__setattr__(self, "p_s_values", tuple(float(v) for v in self.p_s_values))
        for v in self.p_t_values:
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"grid p_t={v} outside [0, 1/2]")
        for name, values in (("p_l", self.p_l_values), ("p_s", self.p_s_values)):
            for v in values:
                _check_unit(f"grid {name}", v)

    @staticmethod
    def from_ranges(
        p_t: tuple[float, float, int],
        p_l: tuple[float, float, int],
        p_s: tuple[float, float, int],
    ) -> "GridSpec":
        """Inclusive linspace per axis; a count of 1 pins the start value."""

        def axis(lo, hi, n):
            if n < 0:
                raise ValueError("step count must be >= 0")
            if n <= 1:
                return (float(lo),) * n
            return tuple(np.linspace(lo, hi, n))

        return GridSpec(axis(*p_t), axis(*p_l), axis(*p_s))

    def points(self) -> list[tuple[float, float, float]]:
        """Grid points sorted lexicographically by (P_L, p_T, P_S)."""
        pts = [
            (p_l, p_t, p_s)
            for p_l in self.p_l_values
            for p_t in self.p_t_values
            for p_s in self.p_s_values
        ]
        pts.sort()
        return [(p_t, p_l, p_s) for (p_l, p_t, p_s) in pts]


def evaluate_point(p_t: float, p_l: float, p_s: float) -> SweepRecord:
    """Evaluate closed-form verdicts and the numeric negativity of the
    heralded state at one grid point.  Infeasible points (P_S + P_L > 1)
    are flagged and carry NaN negativity."""
    ub = uncond_boundary(p_t)
    cb = cond_boundary(p_t * p_l)
    verdicts = LimitVerdict(
        unconditional_ok=p_s > ub,
        conditional_ok=p_s > cb,
        uncond_boundary_ps=ub,
        cond_boundary_ps=cb,
    )
    feasible = p_s + p_l <= 1.0 + 1e-12
    if feasible:
        params = ChannelParams(p_s, max(1.0 - p_s - p_l, 0.0), p_l)
        state, _ = conditional_state(params, EnvironmentSpec(p_t))
        num_neg = negativity(state)
    else:
        num_neg = math.nan
    return SweepRecord(
        p_t=p_t,
        p_s=p_s,
        p_l=p_l,
        p_tl=p_t * p_l,
        verdicts=verdicts,
        numeric_negativity=num_neg,
        feasible=feasible,
    )


def _evaluate_tuple(point: tuple[float, float, float]) -> SweepRecord:
    return evaluate_point(*point)


def sweep(grid: GridSpec, workers: int = 1) -> list[SweepRecord]:
    """Evaluate every grid point; output order is lexicographic in
    (P_L, p_T, P_S) regardless of the worker count."""
    points = grid.points()
    if not points:
        return []
    if workers <= 1:
        records = [evaluate_point(*p) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_evaluate_tuple, points, chunksize=64))
    records.sort(key=lambda r: (r.p_l, r.p_t, r.p_s))
    return records
