"""Ground-manifold master equation with the excited levels eliminated.

Each far-detuned coupling ``exp(i f t) K |e_k><g_j|`` contributes to an
amplitude operator ``A`` from the ground manifold into e_k. Terms that share
an excited level and are close in frequency are summed into one amplitude,
so their interference survives. Pairs separated by more than the secular
cutoff are kept apart, which discards their rapidly rotating cross terms.
The generator is

    d rho/dt = -i [H, rho] - (1/2) {L, rho}
               + sum_jk c2_jk |g_j> R_jk(sum_{c -> e_k} G'_c A_c rho A_c^dagger) <g_j|

with ``H = sum_c h_c A_c^dagger A_c`` and ``L = sum_c G'_c A_c^dagger A_c``.
For an amplitude seen at detuning ``D`` from its excited level,
``h = -D / ((Gamma/2)^2 + D^2)`` and ``G' = Gamma / ((Gamma/2)^2 + D^2)``.
``R_jk`` is the recoil average for the dipole pattern of the channel.
"""
import warnings
from dataclasses import dataclass, field
from math import pi

import numpy as np

from . import constants as C
from .dynamics import (POLARIZATIONS, CouplingTerm, DensityState, EmissionGeometry,
                       RamanDrive, RecoilMap, Trajectory, coupling_terms, evolve_full, rk4)
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class PopulationDistribution:
    """Vibrational populations ``P_n`` for n = 0..n_max."""

    probabilities: np.ndarray
    provenance: str = "simulated"

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("populations must be a non-empty vector")
        if np.any(p < -1e-7):
            raise DomainError("populations must be non-negative")
        if abs(p.sum() - 1) > 1e-6:
            raise DomainError(f"populations sum to {p.sum():.9g}, not 1")
        object.__setattr__(self, "probabilities", np.clip(p, 0.0, None))

    @property
    def n_max(self):
        return self.probabilities.size - 1

    @property
    def nbar(self):
        return float(np.arange(self.probabilities.size) @ self.probabilities)

    @property
    def p0(self):
        return float(self.probabilities[0])


class ReducedGenerator:
    """Adiabatically eliminated generator on {g1, g2} x Fock.

    Parameters
    ----------
    terms : list of CouplingTerm
        Single-photon couplings, each with amplitude ``rabi / 2``.
    detuning : float
        Common single-photon detuning from the excited manifold.
    secular_cutoff : float
        Terms reaching the same excited level are merged into one amplitude
        when their frequencies differ by at most this much.
    spontaneous_emission : bool
        With False, only the coherent part ``-i[H, rho]`` is kept.
    cluster_detunings : bool
        Evaluate ``h`` and ``G'`` for each amplitude at its own detuning
        ``detuning + mean(freq)`` (default). This keeps the differential light
        shift between the ground sublevels. With False every amplitude uses the
        common detuning, which drops that shift.
    """

    n_levels = 2

    def __init__(self, scheme, mode, geom, terms, rabi, detuning, secular_cutoff,
                 spontaneous_emission=True, cluster_detunings=True):
        self.scheme = scheme
        self.mode = mode
        self.geom = geom
        self.terms = list(terms)
        self.rabi = float(rabi)
        self.detuning = float(detuning)
        self.secular_cutoff = float(secular_cutoff)
        self.spontaneous_emission = bool(spontaneous_emission)
        self.gamma_prime, self.shift_coefficient = self._coefficients(self.detuning)
        self._loss = self.gamma_prime if self.spontaneous_emission else 0.0
        self.clusters = self._cluster()
        shifts, losses = [], []
        for _, group in self.clusters:
            d = self.detuning + (np.mean([t.freq for t in group]) if cluster_detunings else 0.0)
            g, h = self._coefficients(d)
            shifts.append(h)
            losses.append(g if self.spontaneous_emission else 0.0)
        self._shifts = np.array(shifts)
        self._losses = np.array(losses)
        self._d0 = mode.kick(mode.eta / 2)
        self._maps = {p: RecoilMap(mode, geom, p) for p in POLARIZATIONS}
        self._cache = {}

    def _coefficients(self, detuning):
        gam = self.scheme.linewidth
        denom = (gam / 2) ** 2 + detuning ** 2
        if denom == 0:
            raise DomainError("elimination needs a nonzero linewidth or detuning")
        return gam / denom, -detuning / denom

    def _cluster(self):
        clusters = []
        for k in (0, 1):
            group = [t for t in self.terms if t.excited == k]
            # single-linkage grouping on frequency
            group.sort(key=lambda t: t.freq)
            current = []
            for t in group:
                if current and t.freq - current[-1].freq > self.secular_cutoff:
                    clusters.append((k, current))
                    current = []
                current.append(t)
            if current:
                clusters.append((k, current))
        return clusters

    def _kick(self, sign, t):
        p = self.mode.phases(t)
        d = p[:, None] * self._d0 * p.conj()[None, :]
        return d if sign > 0 else d.conj().T

    def _operators(self, t):
        # these depend only on t; the integrator asks for them several times per step
        hit = self._cache.get(t)
        if hit is None:
            amps = self.amplitudes(t)
            prods = [a.conj().T @ a for _, a in amps]
            hit = (amps, np.tensordot(self._shifts, prods, axes=1),
                   np.tensordot(self._losses, prods, axes=1))
            if len(self._cache) > 4:
                self._cache.clear()
            self._cache[t] = hit
        return hit

    def amplitudes(self, t):
        """List of ``(excited level, A_c)`` with ``A_c`` of shape (N, 2N)."""
        n = self.mode.dim
        amp = self.rabi / 2
        kicks = {+1: self._kick(+1, t)}
        kicks[-1] = kicks[+1].conj().T
        out = []
        for k, group in self.clusters:
            a = np.zeros((n, 2 * n), dtype=complex)
            for term in group:
                a[:, term.ground * n:(term.ground + 1) * n] += \
                    amp * np.exp(1j * term.freq * t) * kicks[term.kick]
            out.append((k, a))
        return out

    def feeding_operator(self, t, amps=None):
        """``M = sum_c A_c^dagger A_c``, the rate operator into the excited manifold."""
        amps = self.amplitudes(t) if amps is None else amps
        return sum(a.conj().T @ a for _, a in amps)

    def hamiltonian(self, t):
        """Effective Hamiltonian ``sum_c h_c A_c^dagger A_c`` (light shifts and two-photon couplings)."""
        return self._operators(t)[1].copy()

    def jump_terms(self, t, rho, amps=None):
        """Ground-manifold state fed back by spontaneous emission."""
        n = self.mode.dim
        amps = self.amplitudes(t) if amps is None else amps
        out = np.zeros_like(rho)
        if not self._loss:
            return out
        fed = [np.zeros((n, n), dtype=complex), np.zeros((n, n), dtype=complex)]
        for (k, a), loss in zip(amps, self._losses):
            fed[k] += loss * (a @ rho @ a.conj().T)
        c2 = self.scheme.c2
        for k in (0, 1):
            if not np.any(fed[k]):
                continue
            for j in (0, 1):
                if c2[j, k]:
                    pol = self.scheme.polarization[j][k]
                    out[j * n:(j + 1) * n, j * n:(j + 1) * n] += \
                        c2[j, k] * self._maps[pol](fed[k], t)
        return out

    def rhs(self, t, rho):
        amps, h, loss = self._operators(t)
        out = -1j * (h @ rho - rho @ h)
        if self._loss:
            out -= 0.5 * (loss @ rho + rho @ loss)
            out += self.jump_terms(t, rho, amps)
        return out

    def scatter_rate(self, t, rho):
        if not self._loss:
            return 0.0
        loss = self._operators(t)[2]
        return float(np.real(np.vdot(loss.conj().T, rho)))

    def default_dt(self):
        """Step resolving the fastest retained frequency with 50 points per radian.

        A phase common to one amplitude cancels in ``A^dagger A``, so only the
        spread of frequencies inside a cluster enters.
        """
        amp2 = self.rabi ** 2 / 2
        fast = [self.mode.omega, np.abs(self._shifts).max() * amp2,
                np.abs(self._losses).max() * amp2]
        fast += [max(t.freq for t in g) - min(t.freq for t in g) for _, g in self.clusters]
        return 1.0 / (50 * max(fast))


def _secular_cutoff(mode, drive):
    return 10 * max(mode.omega, abs(drive.detuning))


def build_reduced(scheme, drive, mode, geom=None, spontaneous_emission=True,
                  warn_ratio=5.0, secular_cutoff=None, cluster_detunings=True):
    """Reduced generator for a Raman pulse.

    Warns, without failing, when ``|Delta| <= warn_ratio * Gamma`` since the
    elimination then loses accuracy.
    """
    geom = geom or EmissionGeometry()
    if abs(scheme.detuning) <= warn_ratio * scheme.linewidth:
        warnings.warn(f"detuning {scheme.detuning:.4g} rad/s is within {warn_ratio} linewidths; "
                      "adiabatic elimination may be inaccurate", RuntimeWarning, stacklevel=2)
    cutoff = _secular_cutoff(mode, drive) if secular_cutoff is None else secular_cutoff
    return ReducedGenerator(scheme, mode, geom, coupling_terms(scheme, drive), drive.rabi,
                            scheme.detuning, cutoff, spontaneous_emission, cluster_detunings)


def evolve_reduced(rho0, gen, duration, dt=None, store_every=0, check=True):
    """Integrate the reduced master equation for ``duration`` seconds."""
    if rho0.n_levels != 2:
        raise DomainError("the reduced model needs a two-level (ground manifold) state")
    if rho0.n_fock != gen.mode.dim:
        raise DomainError("state and mode truncations differ")
    return rk4(gen, rho0, duration, dt or gen.default_dt(), store_every, check)


@dataclass(frozen=True)
class OpticalPump:
    """Resonant repumper driving g2 -> e1 (kick D^dagger).

    Pumping runs in chunks of ``chunk`` seconds until the g2 population is
    below ``threshold`` or ``max_duration`` has elapsed.
    """

    rabi: float = 2 * pi * 5e6
    detuning: float = 0.0
    threshold: float = 1e-3
    max_duration: float = 50e-6
    chunk: float = 1e-6

    def __post_init__(self):
        if not self.rabi > 0:
            raise ConfigError("pump rabi frequency must be positive", field="pump.rabi")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)", field="pump.threshold")
        if not (self.chunk > 0 and self.max_duration > 0):
            raise ConfigError("pump durations must be positive", field="pump.chunk")


@dataclass
class PumpResult:
    state: DensityState
    photons: float
    duration: float
    converged: bool
    residual: float


def build_pump(scheme, pump, mode, geom=None):
    geom = geom or EmissionGeometry()
    term = CouplingTerm(excited=0, ground=1, kick=-1, freq=0.0)
    return ReducedGenerator(scheme, mode, geom, [term], pump.rabi, pump.detuning,
                            secular_cutoff=0.0)


def optical_pump(rho, scheme, pump, mode, geom=None, dt=None, gen=None):
    """Pump population from g2 back to g1, including recoil from every photon."""
    gen = gen or build_pump(scheme, pump, mode, geom)
    dt = dt or gen.default_dt()
    state = rho
    photons = 0.0
    elapsed = 0.0
    while True:
        residual = float(state.level_populations()[1])
        if residual < pump.threshold:
            return PumpResult(state, photons, elapsed, True, residual)
        if elapsed >= pump.max_duration * (1 - 1e-12):
            warnings.warn(f"pump left {residual:.3g} in g2 after {elapsed:.3g} s",
                          RuntimeWarning, stacklevel=2)
            return PumpResult(state, photons, elapsed, False, residual)
        span = min(pump.chunk, pump.max_duration - elapsed)
        traj = rk4(gen, state, span, dt)
        state = traj.final
        photons += traj.photons
        elapsed += span


def ideal_pump(rho):
    """Move all g2 population to g1 without recoil or coherence."""
    n = rho.n_fock
    m = np.zeros_like(rho.matrix)
    m[:n, :n] = rho.block(0, 0) + rho.block(1, 1)
    return DensityState(m, 2, rho.time)


@dataclass(frozen=True)
class CoolingSchedule:
    """Alternating Raman pulses and optical pumping."""

    cycles: int = C.COOLING_CYCLES
    raman: RamanDrive = field(default_factory=RamanDrive)
    pump: OpticalPump = field(default_factory=OpticalPump)

    def __post_init__(self):
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise ConfigError("cycles must be an integer >= 1", field="schedule.cycles")
        if not self.raman.duration > 0:
            raise ConfigError("Raman pulse duration must be positive",
                              field="schedule.raman.duration")

    @classmethod
    def red_sideband(cls, mode, duration, cycles=C.COOLING_CYCLES, rabi=C.RAMAN_RABI,
                     pump=None):
        """Pulses tuned to the first red sideband of ``mode``."""
        return cls(int(cycles), RamanDrive(rabi, mode.omega, duration), pump or OpticalPump())


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    nbar: float
    p0: float
    raman_photons: float
    pump_photons: float

    @property
    def photons(self):
        return self.raman_photons + self.pump_photons


@dataclass
class CoolingResult:
    distribution: PopulationDistribution
    log: list
    state: DensityState


def cooling_time_step(mode, points_per_period=5):
    """Step used by :func:`cool` unless overridden: ``1 / (points * omega)``."""
    return 1.0 / (points_per_period * mode.omega)


def cool(rho0, schedule, scheme, mode, geom=None, dt=None, spontaneous_emission=True,
         pump_model="reduced", check=True, cluster_detunings=True):
    """Run the pulse/pump cycle and log the motional state after each cycle.

    Parameters
    ----------
    rho0 : DensityState
        Two-level state, usually thermal in g1.
    dt : float, optional
        Integration step for both phases; defaults to
        :func:`cooling_time_step`.
    pump_model : {"reduced", "ideal"}
        ``"ideal"`` resets g2 to g1 instantly with no recoil.
    cluster_detunings : bool
        Passed to :func:`build_reduced` for the Raman pulses.
    """
    if pump_model not in ("reduced", "ideal"):
        raise ConfigError(f"unknown pump model {pump_model!r}", field="pump_model")
    geom = geom or EmissionGeometry()
    raman = build_reduced(scheme, schedule.raman, mode, geom, spontaneous_emission,
                          cluster_detunings=cluster_detunings)
    pump_gen = build_pump(scheme, schedule.pump, mode, geom)
    dt = dt or cooling_time_step(mode)
    state = rho0
    log = []
    for c in range(1, schedule.cycles + 1):
        traj = rk4(raman, state, schedule.raman.duration, dt, check=check)
        state = traj.final
        if pump_model == "ideal":
            state, pump_photons = ideal_pump(state), 0.0
        else:
            res = optical_pump(state, scheme, schedule.pump, mode, geom, dt, pump_gen)
            state, pump_photons = res.state, res.photons
        p = state.fock_populations()
        dist = PopulationDistribution(p / p.sum())
        log.append(CycleRecord(c, dist.nbar, dist.p0, traj.photons, pump_photons))
    return CoolingResult(dist, log, state)


def raman_pulse_photons(scheme, mode, duration, rabi=C.RAMAN_RABI, geom=None, n=1, dt=None):
    """Photons scattered during a red-sideband pulse started in ``|g1, n>``."""
    drive = RamanDrive(rabi, mode.omega, duration)
    gen = build_reduced(scheme, drive, mode, geom)
    rho = DensityState.fock(n, mode.dim, 2)
    traj = evolve_reduced(rho, gen, duration, dt or cooling_time_step(mode, 20))
    return traj.photons


def effective_rabi(gen, t=0.0, n=0):
    """Two-photon coupling ``|<g2, n|h M|g1, n>|`` between the ground sublevels."""
    h = gen.hamiltonian(t)
    d = gen.mode.dim
    return float(abs(h[d + n, n]))


def trace_distance(a, b):
    """Half the trace norm of ``a - b``."""
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


@dataclass(frozen=True)
class FullComparison:
    """Reduced-versus-full agreement after one pulse.

    ``trace_distance`` and ``photons_reduced`` are keyed by detuning model,
    ``"common"`` or ``"cluster"`` (see :class:`ReducedGenerator`).
    """

    trace_distance: dict
    excited_population: float
    photons_full: float
    photons_reduced: dict
    duration: float
    full_steps: int


def compare_with_full(scheme, mode, rabi, duration, nbar0=0.5, geom=None, full_dt=None,
                      detuning_models=("common", "cluster")):
    """Run one red-sideband pulse in both models from a thermal state in g1.

    Compares the full model's ground-manifold block with each reduced state
    and reports the excited population left in the full model.
    """
    from .thermometry import thermal_distribution

    geom = geom or EmissionGeometry()
    drive = RamanDrive(rabi, mode.omega, duration)
    p = thermal_distribution(nbar0, mode.n_max).probabilities
    full = evolve_full(DensityState.from_populations(p, 4), scheme, drive, mode, geom, full_dt)
    g = full.final.ground_block()
    dist, photons = {}, {}
    for name in detuning_models:
        if name not in ("common", "cluster"):
            raise ConfigError(f"unknown detuning model {name!r}", field="detuning_models")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            gen = build_reduced(scheme, drive, mode, geom, cluster_detunings=name == "cluster")
        red = evolve_reduced(DensityState.from_populations(p, 2), gen, duration)
        dist[name] = trace_distance(g, red.final.matrix)
        photons[name] = red.photons
    return FullComparison(dist, 1 - float(np.real(np.trace(g))), full.photons, photons,
                          duration, full.steps)


__all__ = [
    "PopulationDistribution", "ReducedGenerator", "build_reduced", "evolve_reduced",
    "OpticalPump", "PumpResult", "build_pump", "optical_pump", "ideal_pump",
    "CoolingSchedule", "CycleRecord", "CoolingResult", "cool", "cooling_time_step",
    "raman_pulse_photons", "effective_rabi", "trace_distance", "Trajectory",
    "FullComparison", "compare_with_full",
]
