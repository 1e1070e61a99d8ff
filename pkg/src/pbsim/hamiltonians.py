"""Local Hamiltonian builders for every model variant, plus frame transforms.

Local matrices are plain complex ndarrays of shape (..., m, m); the leading
axes broadcast over the relative coordinate (the only position dependence is
through the two-body potential V(z1 - z2)).  Derivative (advection) terms are
excluded here - they live in the spectral advection step - so each builder
returns H_hermitian - i*Gamma with Gamma diagonal, supported on intermediate-
state (P) components with entries gamma and on Rydberg spin-wave (S)
components with entries gamma_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .core import ConfigurationError, PhysicsParams

if TYPE_CHECKING:
    from .evolution import TwoPhotonState

SQRT2 = math.sqrt(2.0)

#: Frozen component order of the 16-component two-particle wavefunction,
#: first factor = forward particle, second = backward (or second co-moving)
#: particle, each over (E, P, S, B).
EIT16_COMPONENTS = (
    "EE", "EP", "ES", "EB",
    "PE", "PP", "PS", "PB",
    "SE", "SP", "SS", "SB",
    "BE", "BP", "BS", "BB",
)
SS_INDEX = EIT16_COMPONENTS.index("SS")


def _soft_core(r, c6: float, core: float):
    r = np.asarray(r, dtype=float)
    return c6 / (r**6 + core**6)


def _with_potential(base: np.ndarray, V, slot: int) -> np.ndarray:
    """Tile a constant local matrix over V values, adding V on one diagonal slot."""
    V = np.atleast_1d(np.asarray(V, dtype=complex))
    H = np.broadcast_to(base, V.shape + base.shape).copy()
    H[..., slot, slot] += V
    return H


# ---------------------------------------------------------------------------
# matrix builders (spec'd operations)
# ---------------------------------------------------------------------------

def generic_counter_matrix(g_plus, g_minus, v_plus, v_minus, dk_plus, dk_minus, V):
    """4x4 local matrix of the counterpropagating generic model.

    Basis (aa, ab, ba, bb) in the rotating frame; broadcasts over ``V``.
    """
    base = np.array(
        [
            [v_plus * dk_plus - v_minus * dk_minus, g_minus, g_plus, 0.0],
            [g_minus, v_plus * dk_plus, 0.0, g_plus],
            [g_plus, 0.0, -v_minus * dk_minus, g_minus],
            [0.0, g_plus, g_minus, 0.0],
        ],
        dtype=complex,
    )
    return _with_potential(base, V, 0)


def generic_co_matrix(g, v, dk, V):
    """4x4 local matrix of the copropagating generic model, basis (aa, ab, ba, bb)."""
    base = np.array(
        [
            [2.0 * v * dk, g, g, 0.0],
            [g, v * dk, 0.0, g],
            [g, 0.0, v * dk, g],
            [0.0, g, g, 0.0],
        ],
        dtype=complex,
    )
    return _with_potential(base, V, 0)


def stored_gate_matrix(g, V):
    """2x2 stored-gate matrix [[V, g], [g, 0]], basis (aa, ba)."""
    base = np.array([[0.0, g], [g, 0.0]], dtype=complex)
    return _with_potential(base, V, 0)


def symmetric3_matrix(g, v_dk, V):
    """3x3 matrix in the symmetric basis (aa, s, bb) for g+ = g- and mirrored dk."""
    base = np.array(
        [
            [2.0 * v_dk, SQRT2 * g, 0.0],
            [SQRT2 * g, v_dk, SQRT2 * g],
            [0.0, SQRT2 * g, 0.0],
        ],
        dtype=complex,
    )
    return _with_potential(base, V, 0)


def _eit_single_block(params: PhysicsParams, omega: float, g_prime: float) -> np.ndarray:
    """Single-particle (E, P, S, B) block of the full two-particle model,
    derivative terms excluded."""
    return np.array(
        [
            [0.0, -params.g_p, 0.0, 0.0],
            [-params.g_p, -1j * params.gamma, -omega, 0.0],
            [0.0, -omega, params.delta - 1j * params.gamma_r, g_prime],
            [0.0, 0.0, g_prime, 0.0],
        ],
        dtype=complex,
    )


def eit_full16_matrix(params: PhysicsParams, g_plus, g_minus, V):
    """16x16 local matrix H = h1 (x) I + I (x) h2 + V * |SS><SS|.

    h1, h2 are the single-particle (E, P, S, B) blocks with couplings
    g'_± = g_± / sin(theta1); the two-photon detuning sits on the S rows.
    Broadcasts over ``V``.
    """
    csc1 = 1.0 / math.sin(params.theta1)
    h1 = _eit_single_block(params, params.omega1, g_plus * csc1)
    h2 = _eit_single_block(params, params.omega1, g_minus * csc1)
    eye = np.eye(4, dtype=complex)
    base = np.kron(h1, eye) + np.kron(eye, h2)
    return _with_potential(base, V, SS_INDEX)


def eit_atomic6_local_matrix(params: PhysicsParams, g, V):
    """6x6 bare-basis local matrix of the stored-gate atomic-coupling scheme.

    Basis (E_a, P_a, S_a, E_b, P_b, S_b), the backward particle being a
    stored Rydberg spin wave; V acts on the Rydberg component S_a and the
    spin waves couple with strength g/(sin(theta1) sin(theta2)).
    """
    om1, om2 = params.omega1, params.omega2_eff
    gc = g / (math.sin(params.theta1) * math.sin(params.theta2))
    base = np.array(
        [
            [0.0, -params.g_p, 0.0, 0.0, 0.0, 0.0],
            [-params.g_p, -1j * params.gamma, -om1, 0.0, 0.0, 0.0],
            [0.0, -om1, params.delta - 1j * params.gamma_r, 0.0, 0.0, gc],
            [0.0, 0.0, 0.0, 0.0, -params.g_p, 0.0],
            [0.0, 0.0, 0.0, -params.g_p, -1j * params.gamma, -om2],
            [0.0, 0.0, gc, 0.0, -om2, 0.0],
        ],
        dtype=complex,
    )
    return _with_potential(base, V, 2)


def eit_photonic4_local_matrix(params: PhysicsParams, g, V):
    """4x4 bare-basis local matrix of the stored-gate photonic-coupling scheme.

    Basis (E_a, P_a, S_a, E_b); the photonic fields couple with g/cos(theta1).
    """
    gs = g / math.cos(params.theta1)
    base = np.array(
        [
            [0.0, -params.g_p, 0.0, gs],
            [-params.g_p, -1j * params.gamma, -params.omega1, 0.0],
            [0.0, -params.omega1, params.delta - 1j * params.gamma_r, 0.0],
            [gs, 0.0, 0.0, 0.0],
        ],
        dtype=complex,
    )
    return _with_potential(base, V, 2)


def eit_atomic6_matrix(params: PhysicsParams, g, k, V):
    """k-space 6x6 matrix of the atomic-coupling scheme in the polariton basis.

    Basis (Psi_aS, Phi_aS, P_aS, Psi_bS, Phi_bS, P_bS).  Broadcasts over a
    ``k`` array at scalar ``V`` (or vice versa).
    """
    th1, th2 = params.theta1, params.theta2
    s1, c1 = math.sin(th1), math.cos(th1)
    s2, c2 = math.sin(th2), math.cos(th2)
    cot1, cot2 = c1 / s1, c2 / s2
    w1 = math.hypot(params.g_p, params.omega1)
    w2 = math.hypot(params.g_p, params.omega2_eff)

    k = np.asarray(k, dtype=float)
    V = np.asarray(V, dtype=float)
    shape = np.broadcast_shapes(k.shape, V.shape)
    ck = np.broadcast_to(params.c * k, shape)
    V = np.broadcast_to(V, shape)

    H = np.zeros(shape + (6, 6), dtype=complex)
    H[..., 0, 0] = ck * c1**2 + V * s1**2
    H[..., 0, 1] = H[..., 1, 0] = s1 * c1 * (ck - V)
    H[..., 1, 1] = ck * s1**2 + V * c1**2
    H[..., 1, 2] = H[..., 2, 1] = -w1
    H[..., 2, 2] = -1j * params.gamma
    H[..., 0, 3] = H[..., 3, 0] = g
    H[..., 0, 4] = H[..., 4, 0] = -g * cot2
    H[..., 1, 3] = H[..., 3, 1] = -g * cot1
    H[..., 1, 4] = H[..., 4, 1] = g * cot1 * cot2
    H[..., 3, 3] = ck * c2**2
    H[..., 3, 4] = H[..., 4, 3] = ck * s2 * c2
    H[..., 4, 4] = ck * s2**2
    H[..., 4, 5] = H[..., 5, 4] = -w2
    H[..., 5, 5] = -1j * params.gamma
    return H


def rotating_frame(state: "TwoPhotonState", dk_plus: float, dk_minus: float,
                   direction: str = "to_lab") -> "TwoPhotonState":
    """Map a 4-mode two-photon state between the rotating and lab frames.

    ``to_lab`` multiplies by the phase factors exp(i dk+ z1), exp(i dk- z2)
    on the a-indexed components; ``to_rotating`` is the inverse.  Round-trip
    is the identity up to floating-point rounding.
    """
    if direction not in ("to_lab", "to_rotating"):
        raise ConfigurationError(f"unknown direction {direction!r}")
    phases = {
        "aa": (dk_plus, dk_minus),
        "ab": (dk_plus, 0.0),
        "ba": (0.0, dk_minus),
        "bb": (0.0, 0.0),
    }
    unknown = [c for c in state.components if c not in phases]
    if unknown:
        raise ConfigurationError(f"unknown component names for frame map: {unknown}")
    sign = 1.0 if direction == "to_lab" else -1.0
    z1 = state.grid1.points()[:, None]
    z2 = state.grid2.points()[None, :]
    out = state.copy()
    for idx, name in enumerate(state.components):
        k1, k2 = phases[name]
        if k1 == 0.0 and k2 == 0.0:
            continue
        out.psi[idx] *= np.exp(1j * sign * (k1 * z1 + k2 * z2))
    out.frame = "lab" if direction == "to_lab" else "rotating"
    return out


# ---------------------------------------------------------------------------
# model specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KSpaceLinear:
    """Exactly solvable linear sector of an EIT model in momentum space.

    The generator factorizes as h1(k1) (+) h2(k2) plus an interaction that is
    diagonal in position space: the propagator applies per-k matrix
    exponentials of the h blocks (advection and all single-particle couplings
    together, so slow-light transport, dispersion and bandwidth loss are
    exact) and splits off only the V(r) phase.  ``interactions`` lists
    (component index, multiplier) pairs receiving multiplier * V(r).
    """

    h1_builder: Callable[[np.ndarray, float, float], np.ndarray]
    h2_builder: Callable[[np.ndarray, float, float], np.ndarray] | None
    interactions: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class ModelSpec:
    """A model variant: component names, signed advection velocities per
    component for each particle coordinate, and the local-matrix builder
    ``(r, g, t) -> (nr, m, m)``.

    Models with stiff internal structure (EIT variants) also carry a
    ``kspace`` description of their linear sector plus the bare two-body
    ``potential``; the time-domain solver then uses the linear-exact
    splitting instead of the advect/local one.
    """

    variant: str
    components: tuple[str, ...]
    v1: tuple[float, ...]
    v2: tuple[float, ...]
    local_builder: Callable[[np.ndarray, float, float], np.ndarray]
    hermitian: bool
    kspace: KSpaceLinear | None = None
    potential: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        m = len(self.components)
        if len(self.v1) != m or len(self.v2) != m:
            raise ConfigurationError("velocity lists must match component count")

    @property
    def n_components(self) -> int:
        return len(self.components)

    def local(self, r, g: float, t: float = 0.0) -> np.ndarray:
        return self.local_builder(np.atleast_1d(np.asarray(r, dtype=float)), g, t)


def generic_counter_model(v_plus: float, v_minus: float, *, dk_plus: float = 0.0,
                          dk_minus: float = 0.0, c6_eff: float = 0.0, core: float = 1.0,
                          g_plus_weight: float = 1.0, g_minus_weight: float = 1.0,
                          v_b_plus: float | None = None,
                          v_b_minus: float | None = None) -> ModelSpec:
    """Counterpropagating 4-mode generic model (basis aa, ab, ba, bb).

    ``v_b_plus``/``v_b_minus`` override the b-mode speeds for group-velocity
    mismatch studies; the local matrix keeps the matched form.
    """
    vbp = v_plus if v_b_plus is None else v_b_plus
    vbm = v_minus if v_b_minus is None else v_b_minus

    def build(r, g, t):
        V = _soft_core(r, c6_eff, core)
        return generic_counter_matrix(g * g_plus_weight, g * g_minus_weight,
                                      v_plus, v_minus, dk_plus, dk_minus, V)

    return ModelSpec(
        variant="generic-counter-4",
        components=("aa", "ab", "ba", "bb"),
        v1=(v_plus, v_plus, vbp, vbp),
        v2=(-v_minus, -vbm, -v_minus, -vbm),
        local_builder=build,
        hermitian=True,
    )


def generic_co_model(v: float, *, dk: float = 0.0, c6_eff: float = 0.0,
                     core: float = 1.0, v_b: float | None = None) -> ModelSpec:
    """Copropagating 4-mode generic model (basis aa, ab, ba, bb)."""
    vb = v if v_b is None else v_b

    def build(r, g, t):
        V = _soft_core(r, c6_eff, core)
        return generic_co_matrix(g, v, dk, V)

    return ModelSpec(
        variant="generic-co-4",
        components=("aa", "ab", "ba", "bb"),
        v1=(v, v, vb, vb),
        v2=(v, vb, v, vb),
        local_builder=build,
        hermitian=True,
    )


def stored_gate_model(v_a: float, *, c6_eff: float = 0.0, core: float = 1.0,
                      v_b: float | None = None) -> ModelSpec:
    """Two-mode stored-gate model (basis aa, ba); the gate photon is static."""
    vb = v_a if v_b is None else v_b

    def build(r, g, t):
        V = _soft_core(r, c6_eff, core)
        return stored_gate_matrix(g, V)

    return ModelSpec(
        variant="stored-gate-2",
        components=("aa", "ba"),
        v1=(v_a, vb),
        v2=(0.0, 0.0),
        local_builder=build,
        hermitian=True,
    )


def symmetric3_model(v: float, *, dk: float = 0.0, c6_eff: float = 0.0,
                     core: float = 1.0) -> ModelSpec:
    """Symmetric-subspace 3-mode reduction (basis aa, s, bb) of the
    counterpropagating model; valid for g+ = g- and mirrored detunings."""

    def build(r, g, t):
        V = _soft_core(r, c6_eff, core)
        return symmetric3_matrix(g, v * dk, V)

    return ModelSpec(
        variant="symmetric-3",
        components=("aa", "s", "bb"),
        v1=(v, v, v),
        v2=(-v, -v, -v),
        local_builder=build,
        hermitian=True,
    )


def _kspace_builder(base_of_g: Callable[[float], np.ndarray], kvels):
    """Lift a (g -> constant matrix) builder to (k, g, t) -> (nk, d, d) with
    the advection terms v*k on the diagonal."""
    kvels = tuple(kvels)

    def build(k, g, t):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        base = base_of_g(g)
        H = np.broadcast_to(base, k.shape + base.shape).copy()
        for i, v in enumerate(kvels):
            if v != 0.0:
                H[..., i, i] += v * k
        return H

    return build


def eit_photonic4_model(params: PhysicsParams, *, core: float = 1.0,
                        v_b: float | None = None) -> ModelSpec:
    """Stored-gate photonic-coupling scheme, bare basis (E_a, P_a, S_a, E_b)."""
    vb = params.c * math.cos(params.theta1) ** 2 if v_b is None else v_b
    gate_decay = -1j * params.gamma_r * np.eye(4)

    def base_of_g(g):
        return eit_photonic4_local_matrix(params, g, 0.0)[0] + gate_decay

    def build(r, g, t):
        V = _soft_core(r, params.c6, core)
        return eit_photonic4_local_matrix(params, g, V) + gate_decay

    return ModelSpec(
        variant="eit-photonic-4",
        components=("E_aS", "P_aS", "S_aS", "E_bS"),
        v1=(params.c, 0.0, 0.0, vb),
        v2=(0.0, 0.0, 0.0, 0.0),
        local_builder=build,
        hermitian=params.gamma == 0.0 and params.gamma_r == 0.0,
        kspace=KSpaceLinear(
            h1_builder=_kspace_builder(base_of_g, (params.c, 0.0, 0.0, vb)),
            h2_builder=None,
            interactions=((2, 1.0),),
        ),
        potential=lambda r: _soft_core(r, params.c6, core),
    )


def eit_atomic6_model(params: PhysicsParams, *, core: float = 1.0) -> ModelSpec:
    """Stored-gate atomic-coupling scheme with full b-mode EIT dynamics,
    bare basis (E_a, P_a, S_a, E_b, P_b, S_b)."""
    gate_decay = -1j * params.gamma_r * np.eye(6)

    def base_of_g(g):
        return eit_atomic6_local_matrix(params, g, 0.0)[0] + gate_decay

    def build(r, g, t):
        V = _soft_core(r, params.c6, core)
        return eit_atomic6_local_matrix(params, g, V) + gate_decay

    kvels = (params.c, 0.0, 0.0, params.c, 0.0, 0.0)
    return ModelSpec(
        variant="eit-atomic-6",
        components=("E_aS", "P_aS", "S_aS", "E_bS", "P_bS", "S_bS"),
        v1=kvels,
        v2=(0.0,) * 6,
        local_builder=build,
        hermitian=params.gamma == 0.0 and params.gamma_r == 0.0,
        kspace=KSpaceLinear(
            h1_builder=_kspace_builder(base_of_g, kvels),
            h2_builder=None,
            interactions=((2, 1.0),),
        ),
        potential=lambda r: _soft_core(r, params.c6, core),
    )


def eit_full16_model(params: PhysicsParams, *, direction: str = "counter",
                     core: float = 1.0, g_plus_weight: float = 1.0,
                     g_minus_weight: float = 1.0,
                     v_b: float | None = None) -> ModelSpec:
    """Full 16-component two-particle model (both photons propagating).

    The linear mode B is the composite slow-light polariton with group
    velocity v = c cos^2(theta2) (overridable for mismatch studies); the E
    components fly at +-c, spin waves are static.
    """
    if direction not in ("counter", "co"):
        raise ConfigurationError(f"unknown direction {direction!r}")
    vb = params.c * math.cos(params.theta2) ** 2 if v_b is None else v_b
    sgn = -1.0 if direction == "counter" else 1.0
    speeds = {"E": params.c, "P": 0.0, "S": 0.0, "B": vb}
    v1 = tuple(speeds[name[0]] for name in EIT16_COMPONENTS)
    v2 = tuple(sgn * speeds[name[1]] for name in EIT16_COMPONENTS)
    csc1 = 1.0 / math.sin(params.theta1)

    def build(r, g, t):
        V = _soft_core(r, params.c6, core)
        return eit_full16_matrix(params, g * g_plus_weight, g * g_minus_weight, V)

    def base1(g):
        return _eit_single_block(params, params.omega1, g * g_plus_weight * csc1)

    def base2(g):
        return _eit_single_block(params, params.omega1, g * g_minus_weight * csc1)

    return ModelSpec(
        variant="eit-full-16",
        components=EIT16_COMPONENTS,
        v1=v1,
        v2=v2,
        local_builder=build,
        hermitian=params.gamma == 0.0 and params.gamma_r == 0.0,
        kspace=KSpaceLinear(
            h1_builder=_kspace_builder(base1, (params.c, 0.0, 0.0, vb)),
            h2_builder=_kspace_builder(base2, (sgn * params.c, 0.0, 0.0, sgn * vb)),
            interactions=((SS_INDEX, 1.0),),
        ),
        potential=lambda r: _soft_core(r, params.c6, core),
    )
