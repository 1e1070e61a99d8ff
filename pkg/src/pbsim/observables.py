"""Measurement functionals: fidelities, populations, correlations, loss budget."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, PhysicsParams
from .evolution import TwoPhotonState, spectral_translate
from .hamiltonians import EIT16_COMPONENTS

_ATOMIC6 = ("E_aS", "P_aS", "S_aS", "E_bS", "P_bS", "S_bS")
_PHOTONIC4 = ("E_aS", "P_aS", "S_aS", "E_bS")
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class FidelityResult:
    """Fidelity F = |overlap|^2 and phase phi = arg(overlap) in (-pi, pi]."""

    F: float
    phi: float


@dataclass(frozen=True)
class LossBudget:
    """EIT bandwidth losses and the blockade-quality identity.

    xi: photon <-> polariton conversion loss over the pulse length;
    eta: loss over the operation length v_g/g; ratio: r_b/sigma from the
    closed-form identity ratio = xi^(2/3) (eta/2)^(1/6) d_b; t_medium: total
    in-medium time sigma/v_g + 1/g.
    """

    xi: float
    eta: float
    ratio: float
    d_b: float
    t_medium: float


# ---------------------------------------------------------------------------
# mode-pair projections
# ---------------------------------------------------------------------------

def project_pair(state: TwoPhotonState, pair: str,
                 params: PhysicsParams | None = None) -> np.ndarray:
    """Project a state onto a named two-mode (or single-mode) amplitude.

    Generic models use their raw component names; EIT models need ``params``
    to form the dark-polariton combinations (e.g. the 16-component model's
    "ab" = cos(th1)*EB - sin(th1)*SB).  "s" is the symmetric entangled pair
    (ab + ba)/sqrt(2).
    """
    comps = state.components
    if pair == "s":
        return (project_pair(state, "ab", params) + project_pair(state, "ba", params)) / SQRT2
    if pair in comps:
        return state.component(pair)
    if comps == EIT16_COMPONENTS:
        if params is None:
            raise ConfigurationError("EIT projections need physics parameters")
        cth, sth = math.cos(params.theta1), math.sin(params.theta1)
        if pair == "bb":
            return state.component("BB")
        if pair == "ab":
            return cth * state.component("EB") - sth * state.component("SB")
        if pair == "ba":
            return cth * state.component("BE") - sth * state.component("BS")
        if pair == "aa":
            return (cth**2 * state.component("EE")
                    - sth * cth * (state.component("ES") + state.component("SE"))
                    + sth**2 * state.component("SS"))
    elif comps == _ATOMIC6 or comps == _PHOTONIC4:
        if params is None:
            raise ConfigurationError("EIT projections need physics parameters")
        if pair == "a":
            c1, s1 = math.cos(params.theta1), math.sin(params.theta1)
            return c1 * state.component("E_aS") - s1 * state.component("S_aS")
        if pair == "b":
            if comps == _PHOTONIC4:
                return state.component("E_bS")
            c2, s2 = math.cos(params.theta2), math.sin(params.theta2)
            return c2 * state.component("E_bS") - s2 * state.component("S_bS")
    raise ConfigurationError(f"cannot project pair {pair!r} from components {comps}")


def mode_population(state: TwoPhotonState, components) -> float:
    """Grid-integrated |psi|^2 summed over the listed raw components."""
    if isinstance(components, str):
        components = (components,)
    total = 0.0
    for name in components:
        total += float(np.sum(np.abs(state.component(name)) ** 2))
    return total * state.cell


def projected_population(state: TwoPhotonState, pair: str,
                         params: PhysicsParams | None = None) -> float:
    amp = project_pair(state, pair, params)
    return float(np.sum(np.abs(amp) ** 2)) * state.cell


def marginal_density(state: TwoPhotonState, pair: str, axis: int = 0,
                     params: PhysicsParams | None = None) -> np.ndarray:
    """|amplitude|^2 integrated over the other particle's coordinate."""
    amp = project_pair(state, pair, params)
    other = 1 - axis
    spacing = (state.grid2 if axis == 0 else state.grid1).spacing
    return np.sum(np.abs(amp) ** 2, axis=other) * spacing


# ---------------------------------------------------------------------------
# fidelity and phase
# ---------------------------------------------------------------------------

def _shifted_reference(psi0: np.ndarray, state: TwoPhotonState,
                       velocities: tuple[float, float]) -> np.ndarray:
    v1, v2 = velocities
    return spectral_translate(psi0, state.grid1, state.grid2,
                              v1 * state.time, v2 * state.time)


def fidelity_phase(state: TwoPhotonState, psi0: np.ndarray, pair: str,
                   velocities, params: PhysicsParams | None = None) -> FidelityResult:
    """Overlap with the freely advected initial wavefunction.

    ``psi0`` is the normalized initial two-particle profile; it is translated
    spectrally by (v1 t, v2 t).  For the symmetric pair "s", ``velocities``
    is a mapping {"ab": (v1, v2), "ba": (v1, v2)} (per-pair free motion); a
    single (v1, v2) tuple applies to both.
    """
    if pair == "s":
        if isinstance(velocities, dict):
            v_ab, v_ba = velocities["ab"], velocities["ba"]
        else:
            v_ab = v_ba = velocities
        o_ab = _overlap(_shifted_reference(psi0, state, v_ab),
                        project_pair(state, "ab", params), state.cell)
        o_ba = _overlap(_shifted_reference(psi0, state, v_ba),
                        project_pair(state, "ba", params), state.cell)
        overlap = (o_ab + o_ba) / SQRT2
    else:
        ref = _shifted_reference(psi0, state, velocities)
        overlap = _overlap(ref, project_pair(state, pair, params), state.cell)
    F = min(abs(overlap) ** 2, 1.0 + 1e-10)
    return FidelityResult(F=float(F), phi=float(np.angle(overlap)))


def _overlap(ref: np.ndarray, amp: np.ndarray, cell: float) -> complex:
    if ref.shape != amp.shape:
        raise ConfigurationError("mismatched grids in overlap")
    return complex(np.sum(np.conj(ref) * amp) * cell)


# ---------------------------------------------------------------------------
# two-photon correlation
# ---------------------------------------------------------------------------

@dataclass
class G2Profile:
    """g2 along the relative coordinate; masked bins are NaN."""

    r: np.ndarray
    g2: np.ndarray
    tau: np.ndarray | None = None

    def value_at(self, r_query: float) -> float:
        idx = int(np.nanargmin(np.abs(self.r - r_query)))
        return float(self.g2[idx])

    def crossover(self, level: float = 0.5) -> float:
        """Smallest |r| where g2 first reaches ``level`` coming from r = 0."""
        order = np.argsort(np.abs(self.r))
        for idx in order:
            v = self.g2[idx]
            if not np.isnan(v) and v >= level:
                return float(abs(self.r[idx]))
        return float("nan")


def g2_correlation(state: TwoPhotonState, single_amp: np.ndarray,
                   params: PhysicsParams | None = None, pair: str = "aa",
                   v_g: float | None = None, floor: float = 1e-12) -> G2Profile:
    """Normalized second-order correlation along r = z1 - z2.

    The denominator is the product of independently propagated single-photon
    densities |psi_a(z1) psi_a(z2)|^2; both numerator and denominator are
    summed over the center coordinate (denominator-weighted average of the
    pointwise ratio).  Bins whose denominator falls below ``floor`` times its
    peak are reported as NaN gaps, never as zeros.
    """
    g1, g2_ = state.grid1, state.grid2
    if g1.n != g2_.n or not math.isclose(g1.spacing, g2_.spacing, rel_tol=1e-12):
        raise ConfigurationError("g2 needs square grids")
    n = g1.n
    num = np.abs(project_pair(state, pair, params)) ** 2
    den = np.abs(single_amp[:, None]) ** 2 * np.abs(single_amp[None, :]) ** 2

    d = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    num_d = np.bincount(d.ravel(), weights=num.real.ravel(), minlength=n)
    den_d = np.bincount(d.ravel(), weights=den.real.ravel(), minlength=n)

    length = g1.length
    r = (g1.origin - g2_.origin) + g1.spacing * np.arange(n)
    r = (r + 0.5 * length) % length - 0.5 * length

    mask = den_d < floor * den_d.max()
    g2v = np.full(n, np.nan)
    g2v[~mask] = num_d[~mask] / den_d[~mask]
    order = np.argsort(r)
    tau = r[order] / v_g if v_g else None
    return G2Profile(r=r[order], g2=g2v[order], tau=tau)


# ---------------------------------------------------------------------------
# blockaded beam-splitter statistics
# ---------------------------------------------------------------------------

def beamsplit_probs(n: int, g: float, t: float) -> tuple[float, float]:
    """(p0, p1) = (cos^2, sin^2)(sqrt(n) g t) for an n-photon blockaded input."""
    if n < 1:
        raise ConfigurationError("photon number must be >= 1")
    x = math.sqrt(n) * g * t
    return math.cos(x) ** 2, math.sin(x) ** 2


def coherent_p1(nbar: float, t: float, g: float, n_max: int | None = None) -> float:
    """Single-photon excitation probability for a coherent input,
    P1 = sum_n f_n sin^2(sqrt(n) g t) over a truncated Poisson distribution."""
    if nbar <= 0:
        raise ConfigurationError("nbar must be positive")
    if n_max is None:
        n_max = int(math.ceil(nbar + 12.0 * math.sqrt(nbar) + 20.0))
    log_w = -nbar
    total = 0.0
    tail = 1.0 - math.exp(log_w)
    terms = []
    for n in range(1, n_max + 1):
        log_w += math.log(nbar / n)
        w = math.exp(log_w)
        tail -= w
        terms.append(w * math.sin(math.sqrt(n) * g * t) ** 2)
    if tail > 1e-12:
        raise ConfigurationError(
            f"Poisson tail mass {tail:.2e} above guard 1e-12; raise n_max")
    return float(math.fsum(terms))


# ---------------------------------------------------------------------------
# loss budget (slow-light limit identities)
# ---------------------------------------------------------------------------

def loss_budget(sigma: float, g: float, params: PhysicsParams) -> LossBudget:
    """Bandwidth-loss budget for pulse length sigma and coupling g.

    Evaluated with the slow-light group velocity v = c Omega^2/g_p^2 so the
    identities invert exactly: sigma = gamma c/(g_p^2 xi) and
    r_b/sigma = xi^(2/3) (eta/2)^(1/6) d_b.
    """
    if sigma <= 0 or g <= 0:
        raise ConfigurationError("sigma and g must be positive")
    if params.c6 <= 0:
        raise ConfigurationError("undefined radius: c6 = 0")
    om2 = params.omega1**2
    v_sl = params.c * om2 / params.g_p**2
    dw = v_sl / sigma
    pref = dw**2 * params.gamma * params.g_p**2 / (params.c * om2**2)
    xi = pref * sigma
    eta = pref * v_sl / g
    z_b = (params.c6 * params.gamma / om2) ** (1.0 / 6.0)
    d_b = params.g_p**2 * z_b / (params.gamma * params.c)
    ratio = xi ** (2.0 / 3.0) * (eta / 2.0) ** (1.0 / 6.0) * d_b
    return LossBudget(xi=xi, eta=eta, ratio=ratio, d_b=d_b,
                      t_medium=sigma / v_sl + 1.0 / g)


def sigma_for_conversion_loss(params: PhysicsParams, xi: float) -> float:
    """Pulse length with conversion loss xi: sigma = gamma c / (g_p^2 xi)."""
    if xi <= 0:
        raise ConfigurationError("xi must be positive")
    return params.gamma * params.c / (params.g_p**2 * xi)


def g_for_operation_loss(params: PhysicsParams, sigma: float, eta: float) -> float:
    """Coupling with operation loss eta at pulse length sigma."""
    if eta <= 0 or sigma <= 0:
        raise ConfigurationError("eta and sigma must be positive")
    om2 = params.omega1**2
    v_sl = params.c * om2 / params.g_p**2
    return (v_sl / sigma) ** 2 * params.gamma * params.g_p**2 * v_sl / (params.c * om2**2 * eta)


def switch_fidelity_estimate(d_b: float) -> tuple[float, float]:
    """(closed form, first-order expansion) of the blockaded-switch fidelity."""
    if d_b <= 0:
        raise ConfigurationError("d_b must be positive")
    x = math.pi**2 / (4.0 * d_b)
    return math.exp(-x), 1.0 - x
