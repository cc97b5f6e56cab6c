"""Problem setup: physical constants, staggered grid, state, initial data.

The gas occupies a mass half-line truncated to (0, L).  Velocity u lives on
the N+1 cell faces, specific volume v and temperature theta on the N cell
centers.  Face 0 is the wall where the total stress is prescribed (outer
pressure condition), face N carries the far-field state (v, u, theta) =
(1, 0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Bad configuration value or inconsistent setup."""


class DomainError(ValueError):
    """Field value outside the physical domain (v <= 0, theta <= 0, ...)."""


@dataclass(frozen=True)
class Params:
    """Physical constants of the gas model.

    Pressure law P = R*theta/v, heat conductivity kappa*theta**beta, constant
    dynamic viscosity mu.  The wall stress is -P_outer, with P_outer pinned
    to R so the far-field state (1, 0, 1) satisfies the wall condition.
    """

    mu: float = 1.0
    kappa: float = 1.0
    beta: float = 1.0
    R: float = 1.0
    cv: float = 1.0
    P_outer: float | None = None

    def __post_init__(self):
        for name in ("mu", "kappa", "R", "cv"):
            val = getattr(self, name)
            if not val > 0.0:
                raise ConfigError(f"{name} must be positive, got {val}")
        if self.beta < 0.0:
            raise ConfigError(f"beta must be nonnegative, got {self.beta}")
        if self.P_outer is None:
            object.__setattr__(self, "P_outer", float(self.R))
        elif self.P_outer != self.R:
            raise ConfigError("P_outer is pinned to R in this model")


@dataclass(frozen=True)
class Grid:
    """Uniform staggered grid: N cells between N+1 faces on (0, length)."""

    length: float
    n_cells: int
    h: float

    def faces(self):
        """Face coordinates, x_i = i*h for i = 0..N."""
        return np.arange(self.n_cells + 1) * self.h

    def centers(self):
        """Cell center coordinates, x_j = (j + 1/2)*h for j = 0..N-1."""
        return (np.arange(self.n_cells) + 0.5) * self.h


def build_grid(length, n_cells):
    """Construct a uniform grid with spacing h = length/n_cells."""
    if not length > 0:
        raise ConfigError(f"grid length must be positive, got {length}")
    n_cells = int(n_cells)
    if n_cells < 4:
        raise ConfigError(f"need at least 4 cells, got {n_cells}")
    length = float(length)
    return Grid(length, n_cells, length / n_cells)


@dataclass
class State:
    """Fields at one instant: v, theta on cells, u on faces, u[N] = 0."""

    t: float
    v: np.ndarray
    theta: np.ndarray
    u: np.ndarray

    def copy(self):
        return State(self.t, self.v.copy(), self.theta.copy(), self.u.copy())


@dataclass(frozen=True)
class Violation:
    """First offending entry found by validate_state."""

    field: str
    index: int
    value: float
    reason: str

    def __str__(self):
        return f"{self.field}[{self.index}] = {self.value}: {self.reason}"


def validate_state(s, params):
    """Return None if the state is admissible, else the first Violation.

    Admissible means every entry finite, v and theta strictly positive, and
    the far-field face velocity u[N] exactly zero.  Never raises.
    """
    for name, arr in (("v", s.v), ("theta", s.theta), ("u", s.u)):
        bad = ~np.isfinite(arr)
        if bad.any():
            k = int(np.argmax(bad))
            return Violation(name, k, float(arr[k]), "not finite")
    for name, arr in (("v", s.v), ("theta", s.theta)):
        if arr.min() <= 0.0:
            k = int(np.argmin(arr))
            return Violation(name, k, float(arr[k]), "must be positive")
    if s.u[-1] != 0.0:
        return Violation("u", s.u.size - 1, float(s.u[-1]),
                         "far-field velocity must be pinned to zero")
    return None


@dataclass(frozen=True)
class ICSpec:
    """Initial-data recipe: smooth localized perturbations of (1, 0, 1).

    kind 'equilibrium' ignores the amplitudes; 'bump' uses a compactly
    supported cosine-squared hump; 'packet' an oscillatory gaussian.  The
    floor is the smallest admitted initial value of v and theta.
    """

    kind: str = "equilibrium"
    amp_v: float = 0.0
    amp_u: float = 0.0
    amp_theta: float = 0.0
    center: float = 6.0
    width: float = 1.0
    floor: float = 0.1


def _bump_profile(x, center, width):
    # cosine-squared hump, support [center - width, center + width], peak 1
    xi = (np.asarray(x, dtype=float) - center) / width
    out = np.zeros_like(xi)
    m = np.abs(xi) < 1.0
    out[m] = np.cos(0.5 * np.pi * xi[m]) ** 2
    return out


def _packet_profile(x, center, width):
    # gaussian envelope modulated at wavelength = envelope width
    x = np.asarray(x, dtype=float)
    xi = (x - center) / width
    k = 2.0 * np.pi / width
    return np.exp(-xi * xi) * np.cos(k * (x - center))


def equilibrium_state(grid):
    """The rest state (v, u, theta) = (1, 0, 1) at t = 0."""
    n = grid.n_cells
    return State(0.0, np.ones(n), np.ones(n), np.zeros(n + 1))


def make_initial_data(grid, spec):
    """Generate initial data from an ICSpec, enforcing positivity floors.

    Perturbations must fit inside (0, length/2) so the far boundary starts
    on the exact far-field state.
    """
    if not spec.floor > 0.0:
        raise ConfigError(f"ic floor must be positive, got {spec.floor}")
    if spec.kind == "equilibrium":
        return equilibrium_state(grid)
    if spec.kind == "bump":
        profile = _bump_profile
        reach = spec.width
    elif spec.kind == "packet":
        profile = _packet_profile
        reach = 4.0 * spec.width  # gaussian tail below 1e-7 of peak
    else:
        raise ConfigError(f"unknown ic kind {spec.kind!r}")
    if not spec.width > 0.0:
        raise ConfigError(f"ic width must be positive, got {spec.width}")
    for name, amp in (("amp_v", spec.amp_v), ("amp_theta", spec.amp_theta)):
        if 1.0 - abs(amp) < spec.floor:
            raise ConfigError(
                f"{name} = {amp} drives the field minimum to {1.0 - abs(amp)}, "
                f"below the floor {spec.floor}")
    if spec.center + reach > 0.5 * grid.length:
        raise ConfigError(
            f"perturbation support ends at {spec.center + reach}, past half "
            f"the domain length {grid.length}; enlarge the grid or shrink the ic")
    phi_c = profile(grid.centers(), spec.center, spec.width)
    phi_f = profile(grid.faces(), spec.center, spec.width)
    v = 1.0 + spec.amp_v * phi_c
    theta = 1.0 + spec.amp_theta * phi_c
    u = spec.amp_u * phi_f
    u[-1] = 0.0
    state = State(0.0, v, theta, u)
    if v.min() < spec.floor or theta.min() < spec.floor:
        raise ConfigError("generated initial data dips below the floor")
    bad = validate_state(state, None)
    if bad is not None:
        raise ConfigError(f"generated initial data invalid: {bad}")
    return state
