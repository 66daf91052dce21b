"""Pseudopotential model of a two-ion, two-species crystal in a linear Paul trap.

Positions are 3-vectors ordered (axial, x2, x3). The reference ion (``x``)
sets the mass unit ``m`` in which all curvatures are quoted; the partner ion
(``y``) has mass ``mu * m``. Static curvatures act equally on both ions
(charge-limited), the RF pseudopotential scales as ``1/mu``.
"""
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np

from . import constants as const
from .errors import ConfigError, DomainError, InstabilityError, SolverError

AXIAL, RADIAL_2, RADIAL_3 = 0, 1, 2


@dataclass(frozen=True)
class IonSpecies:
    name: str
    mass: float
    charge: float = const.ELEMENTARY_CHARGE
    transition_wavelength: float = 280e-9
    linewidth: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError("mass must be positive", field=f"{self.name}.mass")
        if not self.charge > 0:
            raise ConfigError("charge must be positive", field=f"{self.name}.charge")
        if not self.transition_wavelength > 0:
            raise ConfigError("wavelength must be positive",
                              field=f"{self.name}.transition_wavelength")
        if not self.linewidth >= 0:
            raise ConfigError("linewidth must be non-negative",
                              field=f"{self.name}.linewidth")

    @classmethod
    def beryllium9(cls):
        return cls("9Be+", const.BE9_ATOMIC_MASS_U * const.AMU - const.ELECTRON_MASS,
                   transition_wavelength=const.BE9_WAVELENGTH,
                   linewidth=const.BE9_LINEWIDTH)

    @classmethod
    def magnesium24(cls):
        return cls("24Mg+", const.MG24_ATOMIC_MASS_U * const.AMU - const.ELECTRON_MASS,
                   transition_wavelength=const.MG24_WAVELENGTH,
                   linewidth=const.MG24_LINEWIDTH)


@dataclass(frozen=True)
class TrapConfig:
    """Curvatures of the trap, all in rad/s for the reference species.

    ``omega2`` adds to and ``omega3`` subtracts from the RF curvature, so the
    radial curvatures of the reference ion are ``omega0**2 + omega2**2`` and
    ``omega0**2 - omega3**2``.
    """

    omega0: float
    omega1: float
    omega2: float
    omega3: float
    omega_rf: float
    reference: IonSpecies = field(default_factory=IonSpecies.beryllium9)
    partner: IonSpecies = field(default_factory=IonSpecies.magnesium24)
    quantization_angle: float = pi / 4

    def __post_init__(self):
        if not self.omega1 > 0:
            raise ConfigError("axial curvature frequency must be positive", field="omega1")
        if not self.omega_rf > self.omega0:
            raise ConfigError("RF drive must exceed the pseudopotential frequency",
                              field="omega_rf")
        kx, ky = self.spring_constants()
        if min(kx[1:]) <= 0:
            raise ConfigError("reference species is not radially confined", field="omega3")
        if min(ky[1:]) <= 0:
            raise ConfigError("partner species is not radially confined", field="omega3")

    @property
    def mass_ratio(self):
        return self.partner.mass / self.reference.mass

    @property
    def charge_ratio(self):
        return self.partner.charge / self.reference.charge

    def spring_constants(self):
        """Diagonal curvatures per ion, divided by the reference mass."""
        w0, w1, w2, w3 = self.omega0 ** 2, self.omega1 ** 2, self.omega2 ** 2, self.omega3 ** 2
        c = self.charge_ratio
        pseudo = c * c * w0 / self.mass_ratio
        kx = np.array([w1, w0 + w2, w0 - w3])
        ky = np.array([c * w1, pseudo + c * w2, pseudo - c * w3])
        return kx, ky

    def scaled(self, s):
        """Copy with every curvature frequency and the RF drive multiplied by ``s``."""
        return TrapConfig(self.omega0 * s, self.omega1 * s, self.omega2 * s, self.omega3 * s,
                          self.omega_rf * s, self.reference, self.partner,
                          self.quantization_angle)

    @classmethod
    def micromotion_study(cls):
        """Trap used for the stray-field analysis."""
        return cls(const.OMEGA_RF_PSEUDO, const.OMEGA_AXIAL, const.OMEGA_STATIC_2,
                   const.OMEGA_STATIC_3, const.OMEGA_RF_DRIVE)

    @classmethod
    def cooling_experiment(cls):
        """Radial curvatures of the micromotion study, axial curvature set so the
        lower axial mode sits at 2.05 MHz."""
        base = cls.micromotion_study()
        w1 = axial_curvature_for_com(const.COM_FREQUENCY, base.mass_ratio)
        return cls(base.omega0, w1, base.omega2, base.omega3, base.omega_rf)


@dataclass(frozen=True)
class StrayField:
    """Static transverse field expressed as the reference-ion displacement ``a``."""

    a: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.a >= 0:
            raise ConfigError("displacement scale must be non-negative", field="a")
        object.__setattr__(self, "theta", float(self.theta) % (2 * pi))

    def direction(self):
        return np.array([0.0, np.cos(self.theta), np.sin(self.theta)])

    def electric_field(self, cfg):
        """Field vector in V/m."""
        scale = self.a * cfg.reference.mass * cfg.omega0 ** 2 / cfg.reference.charge
        return scale * self.direction()


@dataclass(frozen=True)
class CrystalEquilibrium:
    x: np.ndarray
    y: np.ndarray
    residual_gradient_norm: float
    iterations: int = 0

    @property
    def separation(self):
        return self.y - self.x


@dataclass(frozen=True)
class Mode:
    index: int
    frequency: float
    eigenvector: np.ndarray
    label: str
    species: tuple

    def block(self, ion):
        """3-component slice of the mass-weighted eigenvector for one ion."""
        i = _ion_index(self.species, ion)
        return self.eigenvector[3 * i:3 * i + 3]


@dataclass(frozen=True)
class ModeStructure:
    frequencies: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple
    species: tuple
    equilibrium: CrystalEquilibrium = None

    def __len__(self):
        return len(self.frequencies)

    def __getitem__(self, key):
        if isinstance(key, str):
            try:
                key = self.labels.index(key)
            except ValueError:
                raise KeyError(f"no mode labelled {key!r}; have {self.labels}") from None
        return Mode(int(key), float(self.frequencies[key]), self.eigenvectors[:, key],
                    self.labels[key], self.species)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def gram(self):
        return self.eigenvectors.T @ self.eigenvectors


@dataclass(frozen=True)
class RamanGeometry:
    delta_k: np.ndarray

    def __post_init__(self):
        dk = np.asarray(self.delta_k, dtype=float)
        if dk.shape != (3,) or not np.linalg.norm(dk) > 0:
            raise ConfigError("difference wavevector must be a nonzero 3-vector",
                              field="delta_k")
        object.__setattr__(self, "delta_k", dk)

    @classmethod
    def perpendicular(cls, wavelength, axis=(1.0, 0.0, 0.0)):
        """Two beams crossing at 90 degrees with the difference vector along ``axis``."""
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        return cls(sqrt(2.0) * 2 * pi / wavelength * axis)


def _ion_index(species, ion):
    if isinstance(ion, (int, np.integer)):
        if ion not in (0, 1):
            raise DomainError(f"ion index must be 0 or 1, got {ion}")
        return int(ion)
    if isinstance(ion, str):
        if ion == "reference":
            return 0
        if ion == "partner":
            return 1
        names = [s.name for s in species]
        if ion in names:
            return names.index(ion)
        raise DomainError(f"unknown ion {ion!r}")
    for i, s in enumerate(species):
        if s == ion:
            return i
    raise DomainError(f"{ion!r} is not part of this crystal")


def _coulomb_strength(cfg):
    return const.COULOMB_K * cfg.reference.charge * cfg.partner.charge


def _stray_forces(cfg, stray):
    m = cfg.reference.mass
    base = stray.a * m * cfg.omega0 ** 2 * stray.direction()
    return base, base * cfg.charge_ratio


def potential_energy(cfg, stray, x, y):
    """Total pseudopotential, Coulomb and stray-field energy in joules."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(x - y)
    if r == 0:
        raise DomainError("ions at coincident positions")
    m = cfg.reference.mass
    kx, ky = cfg.spring_constants()
    fx, fy = _stray_forces(cfg, stray)
    return (0.5 * m * (kx @ x ** 2 + ky @ y ** 2)
            + _coulomb_strength(cfg) / r
            + fx @ x + fy @ y)


def potential_gradient(cfg, stray, x, y):
    """Gradient with respect to (x, y) as a 6-vector."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = np.linalg.norm(d)
    if r == 0:
        raise DomainError("ions at coincident positions")
    m = cfg.reference.mass
    kx, ky = cfg.spring_constants()
    fx, fy = _stray_forces(cfg, stray)
    gc = -_coulomb_strength(cfg) * d / r ** 3
    return np.concatenate([m * kx * x + gc + fx, m * ky * y - gc + fy])


def potential_hessian(cfg, x, y):
    """6x6 Hessian; independent of the (uniform) stray field."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d)
    if r == 0:
        raise DomainError("ions at coincident positions")
    m = cfg.reference.mass
    kx, ky = cfg.spring_constants()
    hc = _coulomb_strength(cfg) * (3.0 * np.outer(d, d) / r ** 5 - np.eye(3) / r ** 3)
    h = np.empty((6, 6))
    h[:3, :3] = np.diag(m * kx) + hc
    h[3:, 3:] = np.diag(m * ky) + hc
    h[:3, 3:] = -hc
    h[3:, :3] = -hc
    return h


def axial_separation(cfg):
    """Field-free equilibrium separation from the axial force balance."""
    k = cfg.reference.mass * cfg.omega1 ** 2
    return (2.0 * _coulomb_strength(cfg) / k) ** (1.0 / 3.0)


def find_equilibrium(cfg, stray=StrayField(), tol=1e-12, max_iter=100, seed=None):
    """Damped Newton minimisation of the crystal energy.

    Parameters
    ----------
    tol : float
        Convergence threshold on the gradient norm, relative to the
        characteristic force ``m * omega1**2 * d``.
    seed : (x, y), optional
        Starting positions. Defaults to the field-free axial solution with the
        reference ion on the negative side of the axis.
    """
    d0 = axial_separation(cfg)
    if seed is None:
        z = np.array([-d0 / 2, 0, 0, d0 / 2, 0, 0], dtype=float)
    else:
        z = np.concatenate([np.asarray(seed[0], float), np.asarray(seed[1], float)])
    order = np.sign(z[3] - z[0])
    force_scale = cfg.reference.mass * cfg.omega1 ** 2 * d0

    def energy(v):
        return potential_energy(cfg, stray, v[:3], v[3:])

    gnorm = np.inf
    for it in range(max_iter):
        g = potential_gradient(cfg, stray, z[:3], z[3:])
        gnorm = np.linalg.norm(g)
        if gnorm < tol * force_scale:
            break
        h = potential_hessian(cfg, z[:3], z[3:])
        try:
            step = -np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            step = -g / force_scale * d0
        if g @ step >= 0:
            # not a descent direction: fall back to scaled steepest descent
            step = -g * (d0 / force_scale)
        e0 = energy(z)
        lam = 1.0
        while lam > 1e-8:
            trial = z + lam * step
            if np.linalg.norm(trial[:3] - trial[3:]) > 0:
                # energy differences fall below rounding near the minimum,
                # so a drop in |grad| also counts as progress
                if energy(trial) <= e0 + 1e-4 * lam * (g @ step):
                    break
                gt = potential_gradient(cfg, stray, trial[:3], trial[3:])
                if np.linalg.norm(gt) < (1 - 1e-4 * lam) * gnorm:
                    break
            lam *= 0.5
        z = z + lam * step
    else:
        g = potential_gradient(cfg, stray, z[:3], z[3:])
        gnorm = np.linalg.norm(g)
        if gnorm >= tol * force_scale:
            raise SolverError(f"equilibrium not converged after {max_iter} iterations "
                              f"(|grad| = {gnorm:.3e} N)",
                              last=CrystalEquilibrium(z[:3].copy(), z[3:].copy(), gnorm, max_iter))
        it = max_iter
    if np.sign(z[3] - z[0]) != order:
        raise SolverError("ion order along the axis changed during minimisation",
                          last=CrystalEquilibrium(z[:3].copy(), z[3:].copy(), gnorm, it))
    return CrystalEquilibrium(z[:3].copy(), z[3:].copy(), float(gnorm), it)


def normal_modes(cfg, eq):
    """Eigen-decomposition of the mass-weighted Hessian at ``eq``.

    Frequencies are sorted ascending; eigenvector columns are orthonormal in
    mass-weighted coordinates ``q = sqrt(m) * x``.
    """
    h = potential_hessian(cfg, eq.x, eq.y)
    masses = np.repeat([cfg.reference.mass, cfg.partner.mass], 3)
    w = 1.0 / np.sqrt(masses)
    hm = h * np.outer(w, w)
    hm = 0.5 * (hm + hm.T)
    evals, evecs = np.linalg.eigh(hm)
    scale = np.max(np.abs(evals))
    for i, ev in enumerate(evals):
        if ev <= 1e-12 * scale:
            raise InstabilityError(f"mode {i} has non-positive curvature {ev:.3e} s^-2",
                                   mode_index=i, eigenvalue=float(ev))
    # fix sign: reference-ion block has a non-negative leading component
    for j in range(6):
        k = np.argmax(np.abs(evecs[:, j]))
        if evecs[k, j] < 0:
            evecs[:, j] *= -1
    species = (cfg.reference, cfg.partner)
    labels = label_modes(evecs, masses)
    return ModeStructure(np.sqrt(evals), evecs, labels, species, eq)


def label_modes(evecs, masses):
    """Assign com/stretch/radial labels by dominant eigenvector character."""
    n = evecs.shape[1]
    disp = evecs / np.sqrt(masses)[:, None]
    weight = np.array([[evecs[a, j] ** 2 + evecs[a + 3, j] ** 2 for j in range(n)]
                       for a in range(3)])
    labels = [None] * n
    taken = set()
    for axis, name in ((AXIAL, "{}"), (RADIAL_2, "x2-{}"), (RADIAL_3, "x3-{}")):
        cand = [j for j in np.argsort(-weight[axis], kind="stable") if j not in taken][:2]
        cand.sort()  # frequency order
        names = ("com", "stretch") if axis == AXIAL else ("inphase", "rocking")
        in_phase = [disp[axis, j] * disp[axis + 3, j] > 0 for j in cand]
        if in_phase == [False, True]:
            cand.reverse()
        for nm, j in zip(names, cand):
            labels[j] = name.format(nm)
            taken.add(j)
    return tuple(labels)


def lamb_dicke(mode, ion, geom):
    """Signed Lamb-Dicke parameter of ``mode`` for a Raman pair acting on ``ion``."""
    if not mode.frequency > 0:
        raise DomainError("mode frequency must be positive")
    i = _ion_index(mode.species, ion)
    mass = mode.species[i].mass
    b = mode.block(i)
    return float(geom.delta_k @ b / sqrt(mass) * sqrt(const.HBAR / (2.0 * mode.frequency)))


def axial_mode_frequencies(omega1, mu):
    """Closed-form (com, stretch) frequencies for equal charges and no stray field."""
    inv = 1.0 / mu
    s = sqrt(1.0 - inv + inv * inv)
    return omega1 * sqrt(1.0 + inv - s), omega1 * sqrt(1.0 + inv + s)


def axial_curvature_for_com(com_frequency, mu):
    """Axial curvature frequency that places the lower axial mode at ``com_frequency``."""
    lo, _ = axial_mode_frequencies(1.0, mu)
    return com_frequency / lo
