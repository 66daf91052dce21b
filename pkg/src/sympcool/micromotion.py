"""Stray-field micromotion metrology.

Two routes to the same stray field: the carrier/sideband fluorescence ratio of
a probe beam, and the shift of the crystal's mode spectrum that a transverse
field causes when the two ions have different masses.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import pi, sqrt

import numpy as np
from scipy.optimize import bisect, least_squares
from scipy.special import j0, j1, jn_zeros

from .errors import ConfigError, DomainError, FitError, SolverError
from .trapmodel import (RamanGeometry, StrayField, find_equilibrium, lamb_dicke,
                        normal_modes)

J0_FIRST_ZERO = float(jn_zeros(0, 1)[0])
# bracket end for the inversion; the ratio diverges at the J0 zero
_KU_MAX = 2.4


@dataclass(frozen=True)
class ProbeBeam:
    wavelength: float
    direction: np.ndarray = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ConfigError("wavelength must be positive", field="probe.wavelength")
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if not n > 0:
            raise ConfigError("direction must be nonzero", field="probe.direction")
        if abs(n - 1.0) > 1e-9:
            raise ConfigError("direction must be a unit vector", field="probe.direction")
        object.__setattr__(self, "direction", d)

    @property
    def wavevector(self):
        return 2 * pi / self.wavelength * self.direction


@dataclass(frozen=True)
class MicromotionReport:
    u: np.ndarray
    k_dot_u: float
    R: float


@dataclass(frozen=True)
class SpectrumSweep:
    theta: np.ndarray
    stretch_shift: np.ndarray
    eta1: np.ndarray
    a: float = 0.0

    def summary(self):
        mag = np.abs(self.stretch_shift)
        return {
            "a_m": self.a,
            "max_abs_stretch_shift_hz": float(mag.max()),
            "min_abs_stretch_shift_hz": float(mag.min()),
            "max_abs_eta1": float(np.abs(self.eta1).max()),
        }


def micromotion_amplitude(cfg, stray, static_correction=True):
    """RF micromotion amplitude vector of the reference ion.

    With ``static_correction=False`` the static-curvature factors are set to
    one, which is the approximation used when RF confinement dominates.
    """
    w0 = cfg.omega0 ** 2
    if static_correction:
        c2 = w0 / (w0 + cfg.omega2 ** 2)
        c3 = w0 / (w0 - cfg.omega3 ** 2)
    else:
        c2 = c3 = 1.0
    pref = stray.a * cfg.omega0 * sqrt(2.0) / cfg.omega_rf
    return pref * np.array([0.0, c2 * np.cos(stray.theta), c3 * np.sin(stray.theta)])


def fluorescence_ratio(k_dot_u):
    """Sideband-to-carrier scattering ratio J1^2/J0^2 of the modulation index."""
    x = abs(float(k_dot_u))
    if x >= J0_FIRST_ZERO:
        raise DomainError(f"|k.u| = {x} is at or beyond the first zero of J0")
    return float((j1(x) / j0(x)) ** 2)


def ratio_to_modulation(R):
    """Invert :func:`fluorescence_ratio` on the branch below the first J0 zero."""
    R = float(R)
    r_max = fluorescence_ratio(_KU_MAX)
    if not 0 <= R < r_max:
        raise DomainError(f"ratio {R} outside the invertible range [0, {r_max:.4g})")
    if R == 0:
        return 0.0
    return bisect(lambda x: fluorescence_ratio(x) - R, 0.0, _KU_MAX, xtol=1e-16, maxiter=200)


def stray_from_ratio(R, probe, cfg):
    """Stray displacement scale ``a`` inferred from a measured ratio ``R``.

    Assumes the probe is aligned with the micromotion and that RF confinement
    dominates the radial curvature.
    """
    ku = ratio_to_modulation(R)
    k = 2 * pi / probe.wavelength
    return ku / (k * cfg.omega0 * sqrt(2.0) / cfg.omega_rf)


def report(cfg, stray, probe, static_correction=True):
    u = micromotion_amplitude(cfg, stray, static_correction)
    ku = float(probe.wavevector @ u)
    return MicromotionReport(u, ku, fluorescence_ratio(ku))


def _tracked(ms, ref_vec):
    return int(np.argmax(np.abs(ms.eigenvectors.T @ ref_vec)))


def spectrum_observables(cfg, stray, geom, ion="reference", unperturbed=None):
    """Stretch-mode shift (Hz) and axial Lamb-Dicke parameter of the x2 rocking mode.

    Perturbed modes are matched to the field-free ``stretch`` and
    ``x2-rocking`` modes by eigenvector overlap.
    """
    if unperturbed is None:
        unperturbed = normal_modes(cfg, find_equilibrium(cfg))
    st0 = unperturbed["stretch"]
    rock0 = unperturbed["x2-rocking"]
    if stray.a == 0:
        ms = unperturbed
    else:
        ms = normal_modes(cfg, find_equilibrium(cfg, stray))
    i_st = _tracked(ms, st0.eigenvector)
    i_rk = _tracked(ms, rock0.eigenvector)
    shift = (ms.frequencies[i_st] - st0.frequency) / (2 * pi)
    eta1 = lamb_dicke(ms[i_rk], ion, geom)
    return float(shift), float(eta1)


def _sweep_point(args):
    cfg, a, theta, geom, ion, unperturbed = args
    try:
        return spectrum_observables(cfg, StrayField(a, theta), geom, ion, unperturbed)
    except SolverError as exc:
        raise SolverError(f"theta = {theta!r}: {exc}", last=exc.last) from exc


def default_theta_grid(points=721):
    return np.linspace(0.0, 2 * pi, points, endpoint=False)


def spectrum_sweep(cfg, R, probe, geom, theta_grid=None, ion="reference", jobs=1,
                   a=None):
    """Mode-spectrum signature of a stray field of fixed size versus its direction.

    Parameters
    ----------
    R : float
        Fluorescence ratio fixing the field size via :func:`stray_from_ratio`.
        Ignored when ``a`` is given.
    ion : str or int
        Ion addressed by the Raman pair that defines ``geom``.
    jobs : int
        Worker processes; results are assembled in grid order.
    """
    theta = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, float)
    if theta.size == 0:
        raise DomainError("theta grid is empty")
    if theta.size > 1 and np.any(np.diff(theta) <= 0):
        raise DomainError("theta grid must be strictly increasing")
    if a is None:
        a = stray_from_ratio(R, probe, cfg)
    unperturbed = normal_modes(cfg, find_equilibrium(cfg))
    tasks = [(cfg, a, float(t), geom, ion, unperturbed) for t in theta]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_sweep_point(t) for t in tasks]
    out = np.array(results)
    return SpectrumSweep(theta, out[:, 0], out[:, 1], float(a))


@dataclass(frozen=True)
class StrayFit:
    stray: StrayField
    residual: float
    predicted_shift: float
    predicted_eta1: float


def fit_stray(observed_shift, observed_eta1, cfg, probe=None, geom=None, ion="reference",
              a_max=None, shift_scale=1e3, eta_scale=1e-3, tol=1e-3):
    """Least-squares stray field (a, theta) reproducing two spectrum observables.

    The forward model is symmetric under ``theta -> -theta`` and
    ``theta -> theta + pi``, so the returned angle lies in ``[0, pi/2]``.

    Parameters
    ----------
    observed_shift : float
        Stretch-mode frequency shift in Hz.
    observed_eta1 : float
        Magnitude of the rocking-mode Lamb-Dicke parameter.
    a_max : float, optional
        Upper bound on ``a``; defaults to the value for a fluorescence ratio of 0.5.
    tol : float
        Largest acceptable scaled residual norm.
    """
    if geom is None:
        geom = RamanGeometry.perpendicular(cfg.reference.transition_wavelength)
    if a_max is None:
        if probe is None:
            probe = ProbeBeam(cfg.reference.transition_wavelength)
        a_max = stray_from_ratio(0.5, probe, cfg)
    unperturbed = normal_modes(cfg, find_equilibrium(cfg))
    target = np.array([observed_shift / shift_scale, abs(observed_eta1) / eta_scale])
    if np.all(target == 0):
        return StrayFit(StrayField(0.0, 0.0), 0.0, 0.0, 0.0)

    def forward(p):
        a, th = p
        s, e = spectrum_observables(cfg, StrayField(max(a, 0.0), th), geom, ion, unperturbed)
        return np.array([s / shift_scale, abs(e) / eta_scale])

    def resid(p):
        return forward(p) - target

    # coarse grid: observables scale as a^2 (shift) and a (eta1)
    best = None
    for th in np.linspace(0, pi / 2, 7):
        for a in np.linspace(0.1, 1.0, 4) * a_max:
            r = np.linalg.norm(resid((a, th)))
            if best is None or r < best[0]:
                best = (r, a, th)
    sol = least_squares(resid, x0=[best[1], best[2]], bounds=([0, 0], [a_max, pi / 2]),
                        x_scale=[a_max, 1.0], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    a, th = sol.x
    res = float(np.linalg.norm(sol.fun))
    s, e = forward(sol.x)
    fit = StrayFit(StrayField(float(a), float(th)), res, s * shift_scale, e * eta_scale)
    if res > tol:
        raise FitError(f"no stray field in range reproduces the observables "
                       f"(best residual {res:.3g})", best=fit, residual=res)
    return fit
