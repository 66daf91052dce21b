"""Open-system dynamics of a four-level ion coupled to one motional mode.

The internal levels are two ground sublevels g1, g2 and two excited sublevels
e1, e2. Operators act on (internal level) x (truncated Fock space) with the
level index varying slowest, so the (i, j) block of a density matrix is
``rho[i*N:(i+1)*N, j*N:(j+1)*N]`` for ``N = n_max + 1``.

Time dependence is written in the interaction picture of the mode, so the
kick operator carries phases ``exp(+-i omega t)`` and the laser couplings carry
their detunings explicitly.
"""
from dataclasses import dataclass, field
from functools import cached_property
from math import pi, sqrt

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from . import constants as C
from .errors import ConfigError, DomainError, IntegrationError

GROUND_LEVELS = ("g1", "g2")
EXCITED_LEVELS = ("e1", "e2")
POLARIZATIONS = ("pi", "sigma")

# J=1/2 -> J=1/2 decay: e_k -> g_k is pi, e_k -> g_j (j != k) is sigma
DEFAULT_BRANCHING = ((1 / 3, 2 / 3), (2 / 3, 1 / 3))
DEFAULT_POLARIZATION = (("pi", "sigma"), ("sigma", "pi"))


@dataclass(frozen=True)
class FockMode:
    """One motional mode truncated at ``n_max`` quanta."""

    omega: float
    eta: float
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ConfigError("n_max must be an integer >= 1", field="mode.n_max")
        if not self.eta >= 0:
            raise ConfigError("eta must be non-negative", field="mode.eta")
        if not self.omega > 0:
            raise ConfigError("omega must be positive", field="mode.omega")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self):
        return self.n_max + 1

    @cached_property
    def annihilation(self):
        return np.diag(np.sqrt(np.arange(1, self.dim, dtype=float)), 1)

    @cached_property
    def _position_eig(self):
        a = self.annihilation
        lam, vec = np.linalg.eigh(a + a.T)
        return lam, vec.astype(complex)

    @property
    def position_eigenvalues(self):
        """Eigenvalues of the truncated ``a + a^dagger``."""
        return self._position_eig[0]

    @property
    def position_eigenvectors(self):
        return self._position_eig[1]

    def phases(self, t):
        """Diagonal of ``exp(i omega t a^dagger a)``."""
        return np.exp(1j * self.omega * t * np.arange(self.dim))

    def kick(self, scale, t=0.0):
        """``exp(i scale (a e^{-i omega t} + a^dagger e^{i omega t}))`` via the position eigenbasis."""
        lam, V = self._position_eig
        d0 = (V * np.exp(1j * scale * lam)) @ V.conj().T
        p = self.phases(t)
        return p[:, None] * d0 * p.conj()[None, :]


def kick_operator(mode, scale, t=0.0):
    """Recoil operator ``exp[i s (a e^{-i w t} + a^dagger e^{i w t})]`` on the truncated basis.

    The exponential of the truncated Hermitian generator is exactly unitary on
    the kept subspace.
    """
    a = mode.annihilation.astype(complex)
    ph = np.exp(-1j * mode.omega * t)
    gen = scale * (a * ph + a.T * np.conj(ph))
    return expm(1j * gen)


@dataclass(frozen=True)
class LevelScheme:
    """Two ground and two excited sublevels with their couplings and decay.

    ``branching[j][k]`` is the probability that e_k decays to g_j and
    ``polarization[j][k]`` the dipole pattern of that channel.
    """

    zeeman: float = C.ZEEMAN_SPLITTING
    detuning: float = C.RAMAN_DETUNING
    linewidth: float = C.MG24_LINEWIDTH
    branching: tuple = DEFAULT_BRANCHING
    polarization: tuple = DEFAULT_POLARIZATION

    def __post_init__(self):
        c2 = np.asarray(self.branching, dtype=float)
        if c2.shape != (2, 2):
            raise ConfigError("branching table must be 2x2", field="scheme.branching")
        if np.any(c2 < 0) or np.any(c2 > 1):
            raise ConfigError("branching entries must lie in [0, 1]", field="scheme.branching")
        if np.any(np.abs(c2.sum(axis=0) - 1) > 1e-12):
            raise ConfigError("branching from each excited level must sum to 1",
                              field="scheme.branching")
        pol = tuple(tuple(str(p) for p in row) for row in self.polarization)
        if len(pol) != 2 or any(len(r) != 2 for r in pol) or \
                any(p not in POLARIZATIONS for r in pol for p in r):
            raise ConfigError("polarization tags must be a 2x2 table of 'pi'/'sigma'",
                              field="scheme.polarization")
        if not self.linewidth >= 0:
            raise ConfigError("linewidth must be non-negative", field="scheme.linewidth")
        object.__setattr__(self, "branching", tuple(tuple(float(v) for v in r) for r in c2))
        object.__setattr__(self, "polarization", pol)

    @property
    def levels(self):
        return GROUND_LEVELS + EXCITED_LEVELS

    @property
    def c2(self):
        return np.array(self.branching)

    def with_detuning(self, detuning):
        return LevelScheme(self.zeeman, detuning, self.linewidth, self.branching,
                           self.polarization)


@dataclass(frozen=True)
class RamanDrive:
    """Raman beam pair.

    ``beams`` switches the four single-photon couplings on or off, in the
    order g1-e1 (upper beam), g2-e2 (upper beam), g2-e1 (lower beam),
    g1-e2 (lower beam).
    """

    rabi: float = C.RAMAN_RABI
    detuning: float = 0.0
    duration: float = 0.0
    beams: tuple = (True, True, True, True)

    def __post_init__(self):
        if not self.rabi >= 0:
            raise ConfigError("rabi frequency must be non-negative", field="drive.rabi")
        if not self.duration >= 0:
            raise ConfigError("duration must be non-negative", field="drive.duration")
        if len(self.beams) != 4:
            raise ConfigError("beams mask needs four entries", field="drive.beams")
        object.__setattr__(self, "beams", tuple(bool(b) for b in self.beams))


@dataclass(frozen=True)
class CouplingTerm:
    """One term ``exp(i freq t) K |e_excited><g_ground|`` of the drive.

    ``kick`` is +1 for D and -1 for D^dagger. ``freq`` excludes the common
    single-photon detuning.
    """

    excited: int
    ground: int
    kick: int
    freq: float


def coupling_terms(scheme, drive):
    d = scheme.zeeman
    dl = drive.detuning
    terms = (
        CouplingTerm(0, 0, +1, dl),
        CouplingTerm(1, 1, +1, dl - 2 * d / 3),
        CouplingTerm(0, 1, -1, 0.0),
        CouplingTerm(1, 0, -1, 4 * d / 3),
    )
    return [t for t, on in zip(terms, drive.beams) if on]


@dataclass(frozen=True)
class EmissionGeometry:
    """Quantization axis e_z at ``angle`` to the motional axis e_t, and the
    solid-angle quadrature used to average recoil kicks."""

    angle: float = C.QUANTIZATION_ANGLE
    n_polar: int = 16
    n_azimuth: int = 16

    def __post_init__(self):
        if self.n_polar < 1 or self.n_azimuth < 1:
            raise ConfigError("quadrature needs at least one node per axis",
                              field="geometry.quadrature")

    @cached_property
    def _nodes(self):
        c, wc = leggauss(self.n_polar)
        phi = (np.arange(self.n_azimuth) + 0.5) * 2 * pi / self.n_azimuth
        s = np.sqrt(1 - c ** 2)
        # projection of the emission direction on e_t, with e_t in the x-z plane
        proj = (s[:, None] * np.cos(phi)[None, :]) * np.sin(self.angle) + \
            c[:, None] * np.cos(self.angle)
        base = wc[:, None] * np.full((1, self.n_azimuth), 2 * pi / self.n_azimuth)
        return c, proj.ravel(), base

    @staticmethod
    def pattern(polarization, cos_z):
        """Normalized dipole emission pattern versus the cosine to e_z."""
        c2 = np.asarray(cos_z) ** 2
        if polarization == "pi":
            return 3 / (8 * pi) * (1 - c2)
        if polarization == "sigma":
            return 3 / (16 * pi) * (1 + c2)
        raise ConfigError(f"unknown polarization {polarization!r}", field="polarization")

    def nodes(self, polarization):
        """Projections ``k.e_t`` and weights normalized against the pattern."""
        c, proj, base = self._nodes
        w = (base * self.pattern(polarization, c)[:, None]).ravel()
        total = w.sum()
        if abs(total - 1) > 1e-8:
            raise ConfigError(f"emission quadrature integrates the {polarization} pattern "
                              f"to {total:.12g}, not 1", field="geometry.quadrature")
        return proj, w / total

    def projection_moment(self, polarization, power=2):
        proj, w = self.nodes(polarization)
        return float(w @ proj ** power)


class RecoilMap:
    """Average of ``K rho K^dagger`` over emission directions for one dipole pattern.

    ``K = kick(eta * (k.e_t) / sqrt(2), t)``. Every kick is diagonal in the
    eigenbasis of ``a + a^dagger``, so the average reduces to a Hadamard
    product with a precomputed kernel in that basis.
    """

    def __init__(self, mode, geom, polarization):
        self.mode = mode
        self.polarization = polarization
        proj, w = geom.nodes(polarization)
        lam = mode.position_eigenvalues
        s = mode.eta / sqrt(2)
        diff = lam[:, None] - lam[None, :]
        self.kernel = np.tensordot(np.exp(1j * s * diff[:, :, None] * proj[None, None, :]), w,
                                   axes=([2], [0]))

    def __call__(self, rho, t=0.0):
        V = self.mode.position_eigenvectors
        p = self.mode.phases(t)
        vt = p[:, None] * V
        y = vt.conj().T @ rho @ vt
        return vt @ (self.kernel * y) @ vt.conj().T


def recoil_average(rho_block, mode, geom, polarization, t=0.0):
    """Motional state after one spontaneous emission with the given dipole pattern."""
    rho_block = np.asarray(rho_block, dtype=complex)
    if not np.allclose(rho_block, rho_block.conj().T, atol=1e-10):
        raise DomainError("recoil average needs a Hermitian block")
    return RecoilMap(mode, geom, polarization)(rho_block, t)


@dataclass
class DensityState:
    """Density matrix on (internal levels) x (Fock space) at a time."""

    matrix: np.ndarray
    n_levels: int
    time: float = 0.0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.matrix.shape[0]
        if self.matrix.shape != (d, d) or d % self.n_levels:
            raise DomainError(f"matrix shape {self.matrix.shape} does not fit "
                              f"{self.n_levels} levels")

    @property
    def n_fock(self):
        return self.matrix.shape[0] // self.n_levels

    @classmethod
    def from_populations(cls, populations, n_levels, level=0, time=0.0):
        """Diagonal state with Fock populations placed in one internal level."""
        p = np.asarray(populations, dtype=float)
        n = p.size
        m = np.zeros((n_levels * n, n_levels * n), dtype=complex)
        m[level * n:(level + 1) * n, level * n:(level + 1) * n] = np.diag(p)
        return cls(m, n_levels, time)

    @classmethod
    def fock(cls, n, n_fock, n_levels, level=0, time=0.0):
        p = np.zeros(n_fock)
        p[n] = 1.0
        return cls.from_populations(p, n_levels, level, time)

    def block(self, i, j):
        n = self.n_fock
        return self.matrix[i * n:(i + 1) * n, j * n:(j + 1) * n]

    def level_populations(self):
        n = self.n_fock
        d = np.real(np.diag(self.matrix))
        return d.reshape(self.n_levels, n).sum(axis=1)

    def fock_populations(self, levels=None):
        n = self.n_fock
        d = np.real(np.diag(self.matrix)).reshape(self.n_levels, n)
        if levels is not None:
            d = d[list(levels)]
        return d.sum(axis=0)

    def ground_block(self):
        """Sub-matrix on the two ground levels."""
        n = self.n_fock
        return self.matrix[:2 * n, :2 * n]

    def invariants(self):
        m = self.matrix
        return {
            "hermiticity": float(np.abs(m - m.conj().T).max()),
            "trace_error": float(abs(np.trace(m) - 1)),
            "min_eigenvalue": float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0]),
        }

    def check(self, herm_tol=1e-10, trace_tol=1e-8, eig_floor=-1e-6):
        """Return the invariant report, raising if any bound is violated."""
        rep = self.invariants()
        bad = []
        if rep["hermiticity"] > herm_tol:
            bad.append("hermiticity")
        if rep["trace_error"] > trace_tol:
            bad.append("trace")
        if rep["min_eigenvalue"] < eig_floor:
            bad.append("positivity")
        if bad:
            raise IntegrationError(f"density matrix violates {', '.join(bad)} at t = {self.time:.6g} s",
                                   time=self.time, report=rep)
        return rep

    def copy(self):
        return DensityState(self.matrix.copy(), self.n_levels, self.time)


@dataclass
class Trajectory:
    """Stored states along an integration plus the integrated scattering."""

    states: list
    photons: float = 0.0
    steps: int = 0
    dt: float = 0.0
    rate_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def times(self):
        return np.array([s.time for s in self.states])

    @property
    def final(self):
        return self.states[-1]


def rk4(model, state, duration, dt, store_every=0, check=True, tolerances=None):
    """Fixed-step fourth-order Runge-Kutta for ``d rho/dt = model.rhs(t, rho)``.

    The photon count ``int model.scatter_rate dt`` is integrated alongside
    with the same weights. States are stored every ``store_every`` steps (0
    keeps only the endpoints) and checked against the density-matrix
    invariants when stored.
    """
    if duration < 0:
        raise DomainError("duration must be non-negative")
    if not dt > 0:
        raise DomainError("time step must be positive")
    tol = tolerances or {}
    steps = int(np.ceil(duration / dt - 1e-9)) if duration > 0 else 0
    h = duration / steps if steps else 0.0
    t = state.time
    rho = state.matrix.copy()
    nl = state.n_levels
    states = [DensityState(rho.copy(), nl, t)]
    if check:
        states[0].check(**tol)
    rate_t = np.empty(steps + 1)
    rate_v = np.empty(steps + 1)
    rate_t[0] = t
    rate_v[0] = model.scatter_rate(t, rho)
    photons = 0.0
    f, g = model.rhs, model.scatter_rate
    for i in range(steps):
        k1 = f(t, rho)
        r2 = rho + (h / 2) * k1
        k2 = f(t + h / 2, r2)
        r3 = rho + (h / 2) * k2
        k3 = f(t + h / 2, r3)
        r4 = rho + h * k3
        k4 = f(t + h, r4)
        photons += h / 6 * (rate_v[i] + 2 * g(t + h / 2, r2) + 2 * g(t + h / 2, r3) + g(t + h, r4))
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = state.time + (i + 1) * h
        rate_t[i + 1] = t
        rate_v[i + 1] = g(t, rho)
        last = i == steps - 1
        if last or (store_every and (i + 1) % store_every == 0):
            s = DensityState(rho.copy(), nl, t)
            if check:
                try:
                    s.check(**tol)
                except IntegrationError as exc:
                    raise IntegrationError(str(exc), step=i + 1, time=t, report=exc.report) from exc
            states.append(s)
    return Trajectory(states, float(photons), steps, h, rate_t, rate_v)


class FullModel:
    """Master equation of the four-level ion with recoil on every decay."""

    n_levels = 4

    def __init__(self, scheme, drive, mode, geom=None):
        self.scheme = scheme
        self.drive = drive
        self.mode = mode
        self.geom = geom or EmissionGeometry()
        self.terms = coupling_terms(scheme, drive)
        n = mode.dim
        self._n = n
        d0 = mode.kick(mode.eta / 2)
        # couplings at t = 0; time enters through scalar phases and the mode rotation
        self._static = np.zeros((len(self.terms), 4 * n, 4 * n), dtype=complex)
        for i, term in enumerate(self.terms):
            e = 2 + term.excited
            g = term.ground
            self._static[i, e * n:(e + 1) * n, g * n:(g + 1) * n] = \
                d0 if term.kick > 0 else d0.conj().T
        self._freqs = np.array([scheme.detuning + t.freq for t in self.terms])
        self._maps = {p: RecoilMap(mode, self.geom, p) for p in POLARIZATIONS}
        self._channels = [(j, k, scheme.c2[j, k], scheme.polarization[j][k])
                          for k in range(2) for j in range(2) if scheme.c2[j, k]]
        self._exc = np.arange(2 * n, 4 * n)

    def hamiltonian(self, t):
        if not self.terms:
            return np.zeros(self._static.shape[1:], dtype=complex)
        coef = (self.drive.rabi / 2) * np.exp(1j * self._freqs * t)
        h = np.tensordot(coef, self._static, axes=1)
        u = np.tile(self.mode.phases(t), 4)
        h *= u[:, None] * u.conj()[None, :]
        return h + h.conj().T

    def rhs(self, t, rho):
        h = self.hamiltonian(t)
        out = -1j * (h @ rho - rho @ h)
        gam = self.scheme.linewidth
        if gam:
            n = self._n
            e = self._exc
            out[e, :] -= (gam / 2) * rho[e, :]
            out[:, e] -= (gam / 2) * rho[:, e]
            vt = self.mode.phases(t)[:, None] * self.mode.position_eigenvectors
            vth = vt.conj().T
            rotated = {}
            for j, k, c2, pol in self._channels:
                if k not in rotated:
                    ek = slice((2 + k) * n, (3 + k) * n)
                    rotated[k] = vth @ rho[ek, ek] @ vt
                fed = vt @ (self._maps[pol].kernel * rotated[k]) @ vth
                out[j * n:(j + 1) * n, j * n:(j + 1) * n] += (gam * c2) * fed
        return out

    def scatter_rate(self, t, rho):
        return self.scheme.linewidth * float(np.real(np.trace(rho[2 * self._n:, 2 * self._n:])))

    def default_dt(self):
        """Step resolving the fastest phase with 50 points per radian."""
        fast = [abs(self.scheme.detuning), abs(self.scheme.zeeman), self.mode.omega,
                abs(self.drive.detuning), self.drive.rabi, self.scheme.linewidth]
        fast += [abs(f) for f in self._freqs]
        return 1.0 / (50 * max(fast))


def hamiltonian(scheme, drive, mode, t):
    """Interaction-picture Hamiltonian on (g1, g2, e1, e2) x Fock."""
    return FullModel(scheme, drive, mode).hamiltonian(t)


def evolve_full(rho0, scheme, drive, mode, geom=None, dt=None, store_every=0, check=True):
    """Integrate the full master equation over ``drive.duration``."""
    if rho0.n_levels != 4:
        raise DomainError("the full model needs a four-level state")
    if rho0.n_fock != mode.dim:
        raise DomainError("state and mode truncations differ")
    model = FullModel(scheme, drive, mode, geom)
    return rk4(model, rho0, drive.duration, dt or model.default_dt(), store_every, check)


def scattered_photons(trajectory):
    """Mean number of spontaneously scattered photons along a trajectory."""
    return trajectory.photons
