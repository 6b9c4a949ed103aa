"""Builders for the incoherent-environment channel states.

The environment is a reservoir of independent qubits, each in the mixed
state (1-p_T)|psi><psi| + p_T|psi_perp><psi_perp| with p_T <= 1/2.  A
singlet probe sent through the channel produces three canonical states:

* the unconditional two-qubit output (probe kept with probability P_S,
  otherwise replaced by an environment qubit),
* the tripartite output including the auxiliary environment qubit B,
* the conditional two-qubit output heralded by projecting B.

Subsystem order is always R, A, B; basis index 0 is the ground state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmat import DensityMatrix, kron, partial_trace_matrix

GROUND = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
EXCITED = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

_SINGLET_VEC = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)
_SINGLET = np.outer(_SINGLET_VEC, _SINGLET_VEC.conj())


@dataclass(frozen=True)
class EnvironmentSpec:
    """Thermal excitation probability plus basis labels (ground, excited)."""

    p_t: float
    basis: tuple[str, str] = ("H", "V")

    def __post_init__(self):
        if not (isinstance(self.p_t, (int, float)) and math.isfinite(self.p_t)):
            raise ValueError("p_t must be a finite number")
        if not 0.0 <= self.p_t <= 0.5:
            raise ValueError(f"p_t={self.p_t} outside [0, 1/2]")
        if len(self.basis) != 2 or self.basis[0] == self.basis[1]:
            raise ValueError("basis must be two distinct labels")


@dataclass(frozen=True)
class ChannelParams:
    """Success / flip / loss probability triple, summing to one."""

    p_s: float
    p_f: float
    p_l: float

    def __post_init__(self):
        for name, v in (("p_s", self.p_s), ("p_f", self.p_f), ("p_l", self.p_l)):
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v} outside [0, 1]")
        if abs(self.p_s + self.p_f + self.p_l - 1.0) > 1e-12:
            raise ValueError(
                f"probabilities sum to {self.p_s + self.p_f + self.p_l}, not 1"
            )


@dataclass(frozen=True)
class ThermalPoint:
    """Dimensionless level splitting over thermal energy, dE/(kB*T)."""

    delta_e_over_kt: float

    def __post_init__(self):
        v = self.delta_e_over_kt
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0.0):
            raise ValueError("delta_e_over_kt must be finite and >= 0")


def env_state(spec: EnvironmentSpec) -> DensityMatrix:
    """Single environment qubit: diag(1-p_t, p_t) in the (ground, excited) basis."""
    return DensityMatrix(np.diag([1.0 - spec.p_t, spec.p_t]).astype(complex), (2,))


def thermal_p(t: ThermalPoint) -> float:
    """Two-level Boltzmann occupation of the excited state.

    p_T = exp(-x) / (1 + exp(-x)) with x = dE/(kB*T); strictly decreasing
    in x, equal to 1/2 at x=0, and tending to 0 as x grows.
    """
    x = t.delta_e_over_kt
    e = math.exp(-x)
    return e / (1.0 + e)


def singlet() -> DensityMatrix:
    """Two-qubit singlet |01> - |10> (normalized), the channel probe."""
    return DensityMatrix(_SINGLET.copy(), (2, 2))


def unconditional_state(p_s: float, spec: EnvironmentSpec) -> DensityMatrix:
    """Channel output without any heralding.

    P_S * singlet + (1 - P_S) * (I/2 (x) E), subsystem order R, A.
    """
    if not 0.0 <= p_s <= 1.0:
        raise ValueError(f"p_s={p_s} outside [0, 1]")
    e = env_state(spec).data
    rho = p_s * _SINGLET + (1.0 - p_s) * kron(IDENTITY2 / 2.0, e)
    return DensityMatrix(rho, (2, 2))


def _reorder_subsystems(mat: np.ndarray, dims: tuple[int, ...], perm) -> np.ndarray:
    n = len(dims)
    t = mat.reshape(dims + dims)
    axes = list(perm) + [p + n for p in perm]
    d = int(np.prod(dims))
    return t.transpose(axes).reshape(d, d)


def tripartite_state(params: ChannelParams, spec: EnvironmentSpec) -> DensityMatrix:
    """Three-qubit output over R, A, B.

    Mixture of: probe transmitted to A with E left on B (weight P_S),
    probe emerging at B with E on A (weight P_F), probe lost with E on
    both outputs (weight P_L).
    """
    e = env_state(spec).data
    term_s = kron(_SINGLET, e)                                   # (R,A) (x) B
    term_f = _reorder_subsystems(kron(_SINGLET, e), (2, 2, 2), (0, 2, 1))
    term_l = kron(kron(IDENTITY2 / 2.0, e), e)
    rho = params.p_s * term_s + params.p_f * term_f + params.p_l * term_l
    return DensityMatrix(rho, (2, 2, 2))


def conditional_state(
    params: ChannelParams, spec: EnvironmentSpec
) -> tuple[DensityMatrix, float]:
    """Heralded R-A state after projecting B onto the ground state.

    Closed form: [(1-p_T)(P_S singlet + P_L I/2 (x) E)
    + P_F/2 |excited><excited| (x) E] / N with
    N = (1-p_T)(1-P_F) + P_F/2.  Returns (state, N).
    """
    p = spec.p_t
    e = env_state(spec).data
    weight = (1.0 - p) * (1.0 - params.p_f) + params.p_f / 2.0
    sigma = (1.0 - p) * (
        params.p_s * _SINGLET + params.p_l * kron(IDENTITY2 / 2.0, e)
    ) + 0.5 * params.p_f * kron(EXCITED, e)
    return DensityMatrix(sigma / weight, (2, 2)), float(weight)


def projector(theta: float, phi: float = 0.0) -> np.ndarray:
    """Rank-1 projector onto cos(theta/2)|ground> + exp(i phi) sin(theta/2)|excited>."""
    v = np.array(
        [math.cos(theta / 2.0), np.exp(1j * phi) * math.sin(theta / 2.0)],
        dtype=complex,
    )
    return np.outer(v, v.conj())


def project_b(
    rho8: DensityMatrix, proj: np.ndarray
) -> tuple[DensityMatrix, float]:
    """Project subsystem B of an R,A,B state and trace it out.

    `proj` must be a rank-1 orthogonal projector (within 1e-12).  Returns
    the normalized R-A state and the pre-normalization trace, i.e. the
    heralding probability.
    """
    proj = np.asarray(proj, dtype=complex)
    if proj.shape != (2, 2):
        raise ValueError("projector must be 2x2")
    if (
        np.abs(proj - proj.conj().T).max() > 1e-12
        or np.abs(proj @ proj - proj).max() > 1e-12
        or abs(np.trace(proj).real - 1.0) > 1e-12
    ):
        raise ValueError("projector must be a rank-1 orthogonal projector")
    if rho8.dims != (2, 2, 2):
        raise ValueError("state must have dims (2, 2, 2)")
    op = kron(np.eye(4, dtype=complex), proj)
    sigma = op @ rho8.data @ op
    weight = float(np.trace(sigma).real)
    if weight <= 1e-15:
        raise ValueError("projection has zero probability")
    reduced = partial_trace_matrix(sigma / weight, (2, 2, 2), 2)
    return DensityMatrix(reduced, (2, 2)), weight
