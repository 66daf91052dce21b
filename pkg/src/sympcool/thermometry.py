"""Thermal states, sideband thermometry and qubit spontaneous-emission estimates."""
from dataclasses import dataclass
from math import pi

import numpy as np
from scipy.special import eval_genlaguerre

from . import constants as C
from .errors import ConfigError, DomainError
from .reduced import PopulationDistribution


def thermal_distribution(nbar, n_max):
    """Thermal populations ``nbar^n / (1 + nbar)^(n+1)``, renormalized on 0..n_max."""
    if not nbar >= 0:
        raise DomainError("mean occupation must be non-negative")
    if int(n_max) != n_max or n_max < 0:
        raise DomainError("n_max must be a non-negative integer")
    n = np.arange(int(n_max) + 1)
    if nbar == 0:
        p = (n == 0).astype(float)
    else:
        # log form avoids overflow for large n
        p = np.exp(n * np.log(nbar / (1 + nbar)) - np.log1p(nbar))
    return PopulationDistribution(p / p.sum(), provenance="thermal")


@dataclass(frozen=True)
class SidebandProbe:
    """Sideband probe pulse.

    With ``exact`` the sideband Rabi frequencies include the Debye-Waller and
    Laguerre factors instead of the leading Lamb-Dicke form ``eta sqrt(n)``.
    """

    eta: float
    rabi: float
    duration: float
    exact: bool = False

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError("probe duration must be positive", field="probe.duration")
        if not self.eta >= 0:
            raise ConfigError("eta must be non-negative", field="probe.eta")

    @classmethod
    def blue_pi(cls, eta, rabi=1.0, exact=False):
        """Probe lasting a blue-sideband pi time from the ground state."""
        return cls(eta, rabi, pi / (eta * rabi), exact)

    def rabi_frequencies(self, n_max):
        """Red and blue sideband Rabi frequencies for n = 0..n_max."""
        n = np.arange(n_max + 1)
        e = self.eta
        if not self.exact:
            return self.rabi * e * np.sqrt(n), self.rabi * e * np.sqrt(n + 1)
        dw = np.exp(-e ** 2 / 2)
        blue = self.rabi * dw * e / np.sqrt(n + 1) * eval_genlaguerre(n, 1, e ** 2)
        red = np.zeros(n.size)
        red[1:] = blue[:-1]
        return np.abs(red), np.abs(blue)


def sideband_signals(dist, probe):
    """Red and blue sideband excitation probabilities after the probe pulse."""
    p = dist.probabilities if isinstance(dist, PopulationDistribution) else np.asarray(dist)
    red_f, blue_f = probe.rabi_frequencies(p.size - 1)
    t = probe.duration
    return float(p @ np.sin(red_f * t / 2) ** 2), float(p @ np.sin(blue_f * t / 2) ** 2)


def sideband_ratio(dist, probe):
    red, blue = sideband_signals(dist, probe)
    if blue == 0:
        raise DomainError("blue sideband signal vanishes for this probe")
    return red / blue


def ratio_to_occupation(r):
    """Mean occupation and ground-state population of a thermal state with sideband ratio r."""
    if not 0 <= r < 1:
        raise DomainError(f"sideband ratio {r} must lie in [0, 1)")
    return r / (1 - r), 1 - r


def default_transition_separation():
    """Angular frequency gap between the 280 nm and 313 nm transitions."""
    return C.wavelength_to_angular(C.MG24_WAVELENGTH) - C.wavelength_to_angular(C.BE9_WAVELENGTH)


@dataclass(frozen=True)
class DecoherenceParams:
    """Inputs for the spontaneous-emission estimate on the qubit ion.

    ``gamma`` is the qubit ion's linewidth and ``delta_star`` the gap between
    the qubit and coolant transitions, both angular.
    """

    eta: float = C.COM_LAMB_DICKE
    detuning: float = C.RAMAN_DETUNING
    rabi: float = C.RAMAN_RABI
    gamma: float = C.BE9_LINEWIDTH
    delta_star: float = None

    def __post_init__(self):
        if self.delta_star is None:
            object.__setattr__(self, "delta_star", default_transition_separation())
        for name in ("eta", "detuning", "rabi", "gamma", "delta_star"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be positive", field=f"decoherence.{name}")


@dataclass(frozen=True)
class DecoherenceEstimate:
    tau_pi: float
    rate: float
    probability: float


def decoherence_estimates(p):
    """Cooling pi time, qubit scattering rate and scattering probability per pulse."""
    tau = 2 * pi * p.detuning / (p.eta * p.rabi ** 2)
    rate = 1.5 * p.gamma * p.rabi ** 2 / p.delta_star ** 2
    return DecoherenceEstimate(tau, rate, rate * tau)
