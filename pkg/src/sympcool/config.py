"""JSON run configuration.

Every frequency field ``name`` may be given either as ``name`` in rad/s or as
``name_over_2pi_hz`` in Hz, but not both. Unknown sections or keys are
rejected with the offending path in the message.
"""
import copy
import json
from dataclasses import dataclass
from math import pi
from pathlib import Path

from . import constants as C
from .dynamics import EmissionGeometry, FockMode, LevelScheme, RamanDrive
from .errors import ConfigError, SympcoolError
from .micromotion import ProbeBeam
from .reduced import CoolingSchedule, OpticalPump
from .thermometry import DecoherenceParams
from .trapmodel import IonSpecies, RamanGeometry, StrayField, TrapConfig

FREQ, FLOAT, INT, STR, BOOL, LIST = "freq", "float", "int", "str", "bool", "list"

_MODE_FIELDS = {
    "frequency": (FREQ, None),
    "eta": (FLOAT, None),
    "pulse": (FLOAT, None),
    "nbar0": (FLOAT, None),
}

SCHEMA = {
    "trap": {
        "preset": (STR, "micromotion_study"),
        "omega0": (FREQ, None),
        "omega1": (FREQ, None),
        "omega2": (FREQ, None),
        "omega3": (FREQ, None),
        "omega_rf": (FREQ, None),
        "com_frequency": (FREQ, None),
        "quantization_angle": (FLOAT, None),
        "reference": (STR, "Be9"),
        "partner": (STR, "Mg24"),
        "partner_mass_amu": (FLOAT, None),
    },
    "stray": {"a": (FLOAT, 0.0), "theta": (FLOAT, 0.0)},
    "raman": {
        "rabi": (FREQ, C.RAMAN_RABI),
        "detuning": (FREQ, C.RAMAN_DETUNING),
        "zeeman": (FREQ, C.ZEEMAN_SPLITTING),
        "linewidth": (FREQ, C.MG24_LINEWIDTH),
        "wavelength": (FLOAT, C.MG24_WAVELENGTH),
    },
    "pump": {
        "rabi": (FREQ, 2 * pi * 5e6),
        "detuning": (FREQ, 0.0),
        "threshold": (FLOAT, 1e-3),
        "max_duration": (FLOAT, 50e-6),
        "chunk": (FLOAT, 1e-6),
    },
    "geometry": {
        "angle": (FLOAT, C.QUANTIZATION_ANGLE),
        "n_polar": (INT, 16),
        "n_azimuth": (INT, 16),
    },
    "cooling": {
        "cycles": (INT, C.COOLING_CYCLES),
        "n_max": (INT, 30),
        "points_per_period": (FLOAT, 5.0),
        "mode_source": (STR, "quoted"),
        "pump_model": (STR, "reduced"),
        "cluster_detunings": (BOOL, True),
        "com": (_MODE_FIELDS, {"frequency": C.COM_FREQUENCY, "eta": C.COM_LAMB_DICKE,
                               "pulse": C.COM_PULSE, "nbar0": C.COM_INITIAL_NBAR}),
        "stretch": (_MODE_FIELDS, {"frequency": C.STRETCH_FREQUENCY,
                                   "eta": C.STRETCH_LAMB_DICKE, "pulse": C.STRETCH_PULSE,
                                   "nbar0": C.STRETCH_INITIAL_NBAR}),
    },
    "micromotion": {
        "ratio": (FLOAT, 0.1),
        "probe_wavelength": (FLOAT, C.BE9_WAVELENGTH),
        "raman_wavelength": (FLOAT, C.BE9_WAVELENGTH),
        "grid_points": (INT, 721),
        "ion": (STR, "reference"),
        "static_correction": (BOOL, True),
    },
    "estimate": {
        "eta": (FLOAT, C.COM_LAMB_DICKE),
        "gamma": (FREQ, C.BE9_LINEWIDTH),
        "delta_star": (FREQ, None),
    },
    "validation": {
        "detuning_linewidths": (FLOAT, 20.0),
        "rabi": (FREQ, 2 * pi * 33e6),
        "n_max": (INT, 8),
        "nbar0": (FLOAT, 0.5),
        "mode": (STR, "com"),
        "steps_per_radian": (FLOAT, 10.0),
    },
    "sweep": {
        "target": (STR, "cool"),
        "parameter": (STR, "raman.rabi"),
        "values": (LIST, []),
        "mode": (STR, "com"),
    },
}

SPECIES = {"Be9": IonSpecies.beryllium9, "Mg24": IonSpecies.magnesium24}
SUFFIX = "_over_2pi_hz"


def _coerce(kind, value, path):
    try:
        if kind in (FREQ, FLOAT):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == INT:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind == STR:
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind == BOOL:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind == LIST:
            if not isinstance(value, list):
                raise TypeError
            return list(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected {kind}, got {value!r}", field=path) from None
    raise ConfigError(f"unsupported field kind {kind}", field=path)


def _parse_section(raw, schema, path, fill_defaults=True):
    if not isinstance(raw, dict):
        raise ConfigError("expected an object", field=path)
    out = {}
    seen = set()
    for key, value in raw.items():
        name = key[: -len(SUFFIX)] if key.endswith(SUFFIX) else key
        spec = schema.get(name)
        if spec is None or (key != name and spec[0] != FREQ):
            raise ConfigError("unknown key", field=f"{path}.{key}")
        if name in seen:
            raise ConfigError(f"given both as {name} and {name}{SUFFIX}", field=f"{path}.{name}")
        seen.add(name)
        kind, _ = spec
        if isinstance(kind, dict):
            out[name] = _parse_section(value, kind, f"{path}.{key}", fill_defaults=False)
            continue
        v = _coerce(kind, value, f"{path}.{key}")
        out[name] = 2 * pi * v if key != name else v
    if not fill_defaults:
        return out
    for name, (kind, default) in schema.items():
        if name in out:
            if isinstance(kind, dict):
                merged = dict(default)
                merged.update(out[name])
                out[name] = merged
            continue
        out[name] = copy.deepcopy(default)
    return out


@dataclass
class RunConfig:
    """Validated configuration with SI values and angular frequencies."""

    sections: dict
    document: dict

    def __getitem__(self, key):
        return self.sections[key]

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object", field="<root>")
        for key in doc:
            if key not in SCHEMA:
                raise ConfigError("unknown section", field=key)
        sections = {name: _parse_section(doc.get(name, {}), schema, name)
                    for name, schema in SCHEMA.items()}
        cfg = cls(sections, copy.deepcopy(doc))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError("file not found", field=str(path)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}",
                              field=str(path)) from None
        return cls.from_dict(doc)

    def with_override(self, dotted, value):
        """Copy with one ``section.key`` replaced, as a sweep would do."""
        section, _, key = dotted.partition(".")
        doc = copy.deepcopy(self.document)
        sec = doc.setdefault(section, {})
        name = key[: -len(SUFFIX)] if key.endswith(SUFFIX) else key
        sec.pop(name, None)
        sec.pop(name + SUFFIX, None)
        sec[key] = value
        return RunConfig.from_dict(doc)

    def validate(self):
        """Build every sub-configuration once so invalid values fail before any work."""
        try:
            self.trap_config()
            self.stray()
            self.level_scheme()
            self.geometry()
            OpticalPump(**self._pump_kwargs())
            for name in ("com", "stretch"):
                self.cooling_schedule(name)
                self.fock_mode(name)
            self.decoherence_params()
            ProbeBeam(self["micromotion"]["probe_wavelength"])
            RamanGeometry.perpendicular(self["micromotion"]["raman_wavelength"])
        except ConfigError:
            raise
        except SympcoolError as exc:
            raise ConfigError(str(exc)) from exc
        c = self["cooling"]
        if c["mode_source"] not in ("quoted", "trap"):
            raise ConfigError("must be 'quoted' or 'trap'", field="cooling.mode_source")
        if c["pump_model"] not in ("reduced", "ideal"):
            raise ConfigError("must be 'reduced' or 'ideal'", field="cooling.pump_model")
        if c["points_per_period"] <= 0:
            raise ConfigError("must be positive", field="cooling.points_per_period")
        m = self["micromotion"]
        if m["grid_points"] < 1:
            raise ConfigError("must be at least 1", field="micromotion.grid_points")
        if not 0 <= m["ratio"]:
            raise ConfigError("must be non-negative", field="micromotion.ratio")
        if m["ion"] not in ("reference", "partner"):
            raise ConfigError("must be 'reference' or 'partner'", field="micromotion.ion")
        v = self["validation"]
        if v["mode"] not in ("com", "stretch"):
            raise ConfigError("must be 'com' or 'stretch'", field="validation.mode")
        if v["n_max"] < 1 or v["steps_per_radian"] <= 0 or v["detuning_linewidths"] <= 0:
            raise ConfigError("n_max, steps_per_radian and detuning_linewidths must be positive",
                              field="validation")
        if self["sweep"]["target"] not in ("cool", "estimate", "modes"):
            raise ConfigError("must be 'cool', 'estimate' or 'modes'", field="sweep.target")

    def _species(self, key):
        name = self["trap"][key]
        if name not in SPECIES:
            raise ConfigError(f"unknown species {name!r}", field=f"trap.{key}")
        return SPECIES[name]()

    def trap_config(self):
        t = self["trap"]
        presets = {"micromotion_study": TrapConfig.micromotion_study,
                   "cooling_experiment": TrapConfig.cooling_experiment}
        if t["preset"] not in presets:
            raise ConfigError(f"unknown preset {t['preset']!r}", field="trap.preset")
        base = presets[t["preset"]]()
        partner = self._species("partner")
        if t["partner_mass_amu"] is not None:
            partner = IonSpecies(partner.name, t["partner_mass_amu"] * C.AMU, partner.charge,
                                 partner.transition_wavelength, partner.linewidth)
        kw = dict(omega0=base.omega0, omega1=base.omega1, omega2=base.omega2,
                  omega3=base.omega3, omega_rf=base.omega_rf,
                  reference=self._species("reference"), partner=partner,
                  quantization_angle=base.quantization_angle)
        for key in ("omega0", "omega1", "omega2", "omega3", "omega_rf", "quantization_angle"):
            if t[key] is not None:
                kw[key] = t[key]
        if t["com_frequency"] is not None:
            if t["omega1"] is not None:
                raise ConfigError("give either omega1 or com_frequency", field="trap.com_frequency")
            from .trapmodel import axial_curvature_for_com
            mu = kw["partner"].mass / kw["reference"].mass
            kw["omega1"] = axial_curvature_for_com(t["com_frequency"], mu)
        try:
            return TrapConfig(**kw)
        except ConfigError as exc:
            field = f"trap.{exc.field}" if exc.field else "trap"
            raise ConfigError(exc.message, field=field) from None

    def stray(self):
        s = self["stray"]
        return StrayField(s["a"], s["theta"])

    def level_scheme(self):
        r = self["raman"]
        return LevelScheme(zeeman=r["zeeman"], detuning=r["detuning"], linewidth=r["linewidth"])

    def geometry(self):
        g = self["geometry"]
        return EmissionGeometry(g["angle"], g["n_polar"], g["n_azimuth"])

    def _pump_kwargs(self):
        return dict(self["pump"])

    def mode_parameters(self, name):
        """Frequency (rad/s), eta, pulse and initial occupation for ``com`` or ``stretch``."""
        if name not in ("com", "stretch"):
            raise ConfigError(f"unknown mode {name!r}", field="cooling.mode")
        p = dict(self["cooling"][name])
        for key in ("pulse", "nbar0"):
            if p[key] is None or p[key] < 0:
                raise ConfigError("must be non-negative", field=f"cooling.{name}.{key}")
        if self["cooling"]["mode_source"] == "trap":
            from .trapmodel import find_equilibrium, lamb_dicke, normal_modes
            cfg = self.trap_config()
            mode = normal_modes(cfg, find_equilibrium(cfg))[name]
            geom = RamanGeometry.perpendicular(self["raman"]["wavelength"])
            p["frequency"] = mode.frequency
            p["eta"] = abs(lamb_dicke(mode, "partner", geom))
        return p

    def fock_mode(self, name, n_max=None):
        p = self.mode_parameters(name)
        return FockMode(p["frequency"], p["eta"], n_max or self["cooling"]["n_max"])

    def cooling_schedule(self, name):
        p = self.mode_parameters(name)
        r = self["raman"]
        return CoolingSchedule(self["cooling"]["cycles"],
                               RamanDrive(r["rabi"], p["frequency"], p["pulse"]),
                               OpticalPump(**self._pump_kwargs()))

    def decoherence_params(self, eta=None):
        e = self["estimate"]
        r = self["raman"]
        return DecoherenceParams(eta=eta if eta is not None else e["eta"], detuning=r["detuning"],
                                 rabi=r["rabi"], gamma=e["gamma"], delta_star=e["delta_star"])
