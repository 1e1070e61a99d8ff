"""Physical parameters, grids, pulses, coupling schedules and derived scales.

Unit conventions used throughout the package:

* frequencies and rates in rad/us (a quantity quoted as "X MHz" enters as
  2*pi*X rad/us),
* lengths in um,
* times in us,
* the van der Waals coefficient in rad*um^6/us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

#: Vacuum speed of light in um/us.
C_VACUUM = 2.99792458e8


class ConfigurationError(ValueError):
    """A parameter set violates a precondition or invariant."""


@dataclass(frozen=True)
class PhysicsParams:
    """Physical constants of the Rydberg-EIT medium.

    ``omega2`` is the control Rabi frequency of the second (linear) EIT
    branch; it defaults to ``omega1`` (matched group velocities).
    ``gamma_r`` is an optional uniform Rydberg spin-wave decay, zero in all
    headline configurations.
    """

    g_p: float
    omega1: float
    gamma: float
    c: float = C_VACUUM
    c6: float = 0.0
    omega2: float | None = None
    delta: float = 0.0
    gamma_r: float = 0.0

    def __post_init__(self):
        if self.g_p <= 0:
            raise ConfigurationError("g_p must be positive")
        if self.omega1 <= 0:
            raise ConfigurationError("omega1 must be positive")
        if self.gamma <= 0:
            raise ConfigurationError("gamma must be positive")
        if self.c <= 0:
            raise ConfigurationError("c must be positive")
        if self.c6 < 0:
            raise ConfigurationError("c6 must be non-negative")
        if self.gamma_r < 0:
            raise ConfigurationError("gamma_r must be non-negative")
        if self.omega2 is not None and self.omega2 <= 0:
            raise ConfigurationError("omega2 must be positive when given")

    @property
    def omega2_eff(self) -> float:
        return self.omega1 if self.omega2 is None else self.omega2

    @property
    def theta1(self) -> float:
        """Mixing angle of the interacting EIT branch, tan(theta1) = g_p/omega1."""
        return math.atan2(self.g_p, self.omega1)

    @property
    def theta2(self) -> float:
        return math.atan2(self.g_p, self.omega2_eff)


@dataclass(frozen=True)
class DerivedScales:
    """Derived physical scales for a (params, g) combination."""

    theta1: float
    theta2: float
    v_g: float
    z_b: float
    r_b: float
    d_b: float


def vdw_potential(r, params: PhysicsParams, core: float):
    """Soft-core van der Waals potential C6 / (r^6 + core^6).

    ``core`` regularizes the coincident-point singularity; in the blockade
    regime the dynamics only require |V| to dominate every other rate inside
    the blockade radius, so the cap does not affect blockaded evolution.
    Accepts scalar or array ``r``.
    """
    if core <= 0:
        raise ConfigurationError("core must be positive")
    r = np.asarray(r, dtype=float)
    out = params.c6 / (r**6 + core**6)
    return float(out) if out.ndim == 0 else out


def c6_from_blockade_radius(z_b: float, omega: float, gamma: float) -> float:
    """Invert V(z_b) = omega^2/gamma for the van der Waals coefficient."""
    if z_b <= 0:
        raise ConfigurationError("z_b must be positive")
    return z_b**6 * omega**2 / gamma


def coupling_from_rb(r_b: float, params: PhysicsParams) -> float:
    """Coupling g such that V(r_b) * sin^2(theta1) = 2 g."""
    if r_b <= 0:
        raise ConfigurationError("r_b must be positive")
    if params.c6 <= 0:
        raise ConfigurationError("undefined radius: c6 = 0")
    return params.c6 * math.sin(params.theta1) ** 2 / (2.0 * r_b**6)


def derived_scales(params: PhysicsParams, g: float) -> DerivedScales:
    """EIT/coupling blockade radii, group velocity and blockade optical depth.

    z_b solves V(z_b) = omega1^2/gamma, r_b solves V(r_b) sin^2(theta1) = 2g,
    v_g = c cos^2(theta1) and d_b = g_p^2 z_b / (gamma c).
    """
    if params.c6 <= 0:
        raise ConfigurationError("undefined radius: c6 = 0")
    if g <= 0:
        raise ConfigurationError("coupling g must be positive")
    th1, th2 = params.theta1, params.theta2
    v_g = params.c * math.cos(th1) ** 2
    z_b = (params.c6 * params.gamma / params.omega1**2) ** (1.0 / 6.0)
    r_b = (params.c6 * math.sin(th1) ** 2 / (2.0 * g)) ** (1.0 / 6.0)
    d_b = params.g_p**2 * z_b / (params.gamma * params.c)
    return DerivedScales(theta1=th1, theta2=th2, v_g=v_g, z_b=z_b, r_b=r_b, d_b=d_b)


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid. ``n`` must be a power of two (spectral advection)."""

    n: int
    length: float
    origin: float = 0.0

    def __post_init__(self):
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ConfigurationError(f"grid size {self.n} is not a power of two")
        if self.length <= 0:
            raise ConfigurationError("grid length must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    def points(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n)

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return TWO_PI * np.fft.fftfreq(self.n, d=self.spacing)


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse: center, width sigma and momentum offset delta_k."""

    center: float
    sigma: float
    delta_k: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigurationError("sigma must be positive")


def gaussian_pulse(grid: Grid1D, spec: PulseSpec) -> np.ndarray:
    """L2-normalized complex Gaussian amplitude on ``grid``.

    h(z) ~ exp(-(z - z0)^2 / (2 sigma^2)) * exp(i delta_k z), normalized so
    that sum |h|^2 * spacing = 1.
    """
    if spec.sigma < 4.0 * grid.spacing:
        raise ConfigurationError(
            f"sigma = {spec.sigma:g} um under-resolved: needs >= 4 grid spacings "
            f"({4.0 * grid.spacing:g} um)"
        )
    z = grid.points()
    h = np.exp(-((z - spec.center) ** 2) / (2.0 * spec.sigma**2)).astype(complex)
    if spec.delta_k != 0.0:
        h *= np.exp(1j * spec.delta_k * z)
    norm = math.sqrt(float(np.sum(np.abs(h) ** 2)) * grid.spacing)
    return h / norm


@dataclass(frozen=True)
class CouplingSchedule:
    """Temporal or spatial modulation profile of the linear coupling.

    Kinds:

    * ``constant``: g(t) = amplitude everywhere.
    * ``square-time``: g(t) = amplitude for on <= t < off, else 0.
    * ``square-space``: g(z) = amplitude for on <= z < off, else 0.
    * ``tanh-time``: amplitude * [tanh(rate*t - b1) - tanh(rate*t - b2)] / 4,
      the double-tanh ramp used for adiabatic switching.
    """

    kind: str
    amplitude: float
    on: float = 0.0
    off: float = 0.0
    rate: float = 0.0
    b1: float = 0.0
    b2: float = 0.0

    _KINDS = ("constant", "square-time", "square-space", "tanh-time")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")
        if self.amplitude < 0:
            raise ConfigurationError("amplitude must be non-negative")
        if self.kind.startswith("square") and not self.off > self.on:
            raise ConfigurationError("square profile needs off > on")
        if self.kind == "tanh-time":
            if self.rate <= 0:
                raise ConfigurationError("tanh profile needs rate > 0")
            if not self.b2 > self.b1:
                raise ConfigurationError("tanh profile needs b2 > b1")

    @property
    def is_spatial(self) -> bool:
        return self.kind == "square-space"

    @property
    def is_time_dependent(self) -> bool:
        return self.kind in ("square-time", "tanh-time")

    def breakpoints(self) -> tuple[float, ...]:
        """Times where the profile is non-smooth (step integrators split here)."""
        if self.kind == "square-time":
            return (self.on, self.off)
        return ()

    def peak(self) -> float:
        if self.kind == "tanh-time":
            return self.amplitude * math.tanh((self.b2 - self.b1) / 2.0) / 2.0
        return self.amplitude


def coupling_at(schedule: CouplingSchedule, t: float = 0.0, z: float = 0.0) -> float:
    """Evaluate the coupling profile at time ``t`` and position ``z``."""
    k = schedule.kind
    if k == "constant":
        return schedule.amplitude
    if k == "square-time":
        return schedule.amplitude if schedule.on <= t < schedule.off else 0.0
    if k == "square-space":
        return schedule.amplitude if schedule.on <= z < schedule.off else 0.0
    x = schedule.rate * t
    return schedule.amplitude * (math.tanh(x - schedule.b1) - math.tanh(x - schedule.b2)) / 4.0


def fig4_tanh_schedule(v_g: float, sigma: float, delta_k: float) -> CouplingSchedule:
    """Double-tanh ramp g(t)/(v_g dk) = [tanh(5.78 v_g t/sigma - 2.2) - tanh(... - 4.1)]/4."""
    return CouplingSchedule(
        kind="tanh-time",
        amplitude=v_g * delta_k,
        rate=5.78 * v_g / sigma,
        b1=2.2,
        b2=4.1,
    )
