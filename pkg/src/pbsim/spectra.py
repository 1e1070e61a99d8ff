"""Eigenstructure analysis: dispersion branches, dark weight, dressed shifts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import linear_sum_assignment

from .core import ConfigurationError, CouplingSchedule, PhysicsParams, coupling_at
from .hamiltonians import eit_atomic6_matrix


class BranchIdentificationError(RuntimeError):
    """No eigenvector carries a dominant weight on the requested component."""


@dataclass
class EigenBranch:
    """One adiabatically-continued eigenvalue branch over a k scan."""

    label: int
    k: np.ndarray
    omega: np.ndarray
    weights: np.ndarray        # |component|^2 fractions, shape (nk, m)
    min_overlap: float         # smallest adjacent-k eigenvector overlap
    continuity_ok: bool


def reduced4_matrix(params: PhysicsParams, g, k, V) -> np.ndarray:
    """4x4 reduction (Psi_aS, Phi_aS, P_aS, Psi_bS): the linear mode's lossy
    partners dropped (equivalently, the top-left block of the 6x6)."""
    return eit_atomic6_matrix(params, g, k, V)[..., :4, :4]


def eigenmodes(params: PhysicsParams, g: float, k: float, V: float,
               reduced: bool = False):
    """Eigenvalues and right eigenvectors at a single k, sorted by Re(omega)."""
    H = reduced4_matrix(params, g, k, V) if reduced else eit_atomic6_matrix(params, g, k, V)
    w, vecs = np.linalg.eig(H)
    order = np.argsort(w.real)
    return w[order], vecs[:, order]


def dispersion_scan(params: PhysicsParams, g: float, k_values, V: float,
                    reduced: bool = False) -> list[EigenBranch]:
    """Track eigenvalue branches along a k scan by eigenvector continuity.

    Adjacent-k branches are matched by maximal overlap (optimal assignment);
    an overlap dipping below 0.9 flags the branch as discontinuous - it is
    reported, never silently bridged.
    """
    k_values = np.atleast_1d(np.asarray(k_values, dtype=float))
    w0, v0 = eigenmodes(params, g, k_values[0], V, reduced=reduced)
    m = w0.size
    omegas = [w0]
    weights = [np.abs(v0) ** 2 / np.sum(np.abs(v0) ** 2, axis=0)]
    prev = v0 / np.linalg.norm(v0, axis=0)
    min_overlap = np.ones(m)
    for k in k_values[1:]:
        w, v = eigenmodes(params, g, k, V, reduced=reduced)
        vn = v / np.linalg.norm(v, axis=0)
        ovl = np.abs(prev.conj().T @ vn)
        row, col = linear_sum_assignment(-ovl)
        perm = np.empty(m, dtype=int)
        perm[row] = col
        min_overlap = np.minimum(min_overlap, ovl[row, perm[row]])
        w = w[perm]
        vn = vn[:, perm]
        omegas.append(w)
        weights.append(np.abs(vn) ** 2)
        prev = vn
    omegas = np.array(omegas)
    weights = np.array(weights)
    return [
        EigenBranch(label=b, k=k_values, omega=omegas[:, b], weights=weights[:, :, b],
                    min_overlap=float(min_overlap[b]),
                    continuity_ok=bool(min_overlap[b] > 0.9))
        for b in range(m)
    ]


def dark_weight_approx(g: float, v_eff: float) -> float:
    """Closed-form weight sin^2(beta) of the linear mode in its modified
    eigenstate, with the interacting-mode energy scale v_eff = V sin^2(theta1)."""
    if v_eff == 0.0:
        return 1.0 if g == 0.0 else float("nan")
    x = (2.0 * g / v_eff) ** 2
    return 1.0 - 2.0 * (g / v_eff) ** 2 / (1.0 + x + math.sqrt(1.0 + x))


def dark_weight(params: PhysicsParams, g: float, k: float, V: float) -> tuple[float, float]:
    """(exact, approximate) weight of Psi_bS in the modified eigenstate.

    Exact value from diagonalizing the reduced 4x4 and taking the eigenvector
    with maximal |Psi_bS| weight; approximate value from the closed form with
    v_eff = V sin^2(theta1).
    """
    _, vecs = eigenmodes(params, g, k, V, reduced=True)
    frac = np.abs(vecs[3, :]) ** 2 / np.sum(np.abs(vecs) ** 2, axis=0)
    best = int(np.argmax(frac))
    if frac[best] <= 0.5:
        raise BranchIdentificationError(
            f"no eigenvector has Psi_bS weight > 0.5 (max {frac[best]:.3f})")
    v_eff = V * math.sin(params.theta1) ** 2
    return float(frac[best]), dark_weight_approx(g, v_eff)


def dressed_jbb(g: float, v_dk: float) -> float:
    """Dressed shift with no photon populating the interacting mode."""
    return (-0.5 * v_dk + math.sqrt(v_dk**2 + 4.0 * g**2)
            - 0.5 * math.sqrt(v_dk**2 + 8.0 * g**2))


def dressed_jab(g: float, v_dk: float) -> float:
    """Dressed shift with one photon populating the interacting mode."""
    return -0.5 * v_dk + 0.5 * math.sqrt(v_dk**2 + 8.0 * g**2)


def dressed_phase(schedule: CouplingSchedule, v_dk: float, t_final: float,
                  t0: float = 0.0, *, which: str = "ab") -> float:
    """Accumulated dynamic phase -int J dt over a closed coupling path.

    Rejects open paths: the schedule must start and end below 5% of its peak
    coupling within [t0, t_final].
    """
    if t_final <= t0:
        raise ConfigurationError("t_final must exceed t0")
    peak = schedule.peak()
    if peak > 0.0:
        for t_edge in (t0, t_final):
            if coupling_at(schedule, t_edge) > 0.05 * peak:
                raise ConfigurationError(
                    f"open-path schedule: coupling at t={t_edge:g} exceeds 5% of peak")
    J = dressed_jab if which == "ab" else dressed_jbb

    if schedule.kind in ("constant", "square-time"):
        if schedule.kind == "constant":
            return -J(schedule.amplitude, v_dk) * (t_final - t0)
        on = max(schedule.on, t0)
        off = min(schedule.off, t_final)
        return -J(schedule.amplitude, v_dk) * max(0.0, off - on)

    val, err = quad(lambda t: J(coupling_at(schedule, t), v_dk), t0, t_final,
                    epsabs=1e-14, epsrel=1e-10, limit=400)
    if abs(val) > 0 and err / abs(val) > 1e-8:
        raise RuntimeError(f"phase quadrature did not converge: rel err {err/abs(val):.2e}")
    return -val
