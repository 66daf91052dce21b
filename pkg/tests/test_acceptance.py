"""Acceptance criteria 1-8, one verdict line each.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
repeated in the terminal summary under "acceptance criteria".
"""
import time
from math import pi, sqrt

import numpy as np
import pytest

from conftest import random_density, record_criterion
from sympcool import constants as C
from sympcool.cli import cooling_summary, validation_setup
from sympcool.config import RunConfig
from sympcool.dynamics import (DensityState, EmissionGeometry, FockMode, LevelScheme,
                               RamanDrive, evolve_full, recoil_average)
from sympcool.micromotion import (ProbeBeam, default_theta_grid, fluorescence_ratio,
                                  ratio_to_modulation, spectrum_sweep)
from sympcool.reduced import (CoolingSchedule, build_reduced, compare_with_full, cool,
                              evolve_reduced, raman_pulse_photons)
from sympcool.thermometry import (DecoherenceParams, SidebandProbe, decoherence_estimates,
                                  sideband_ratio, thermal_distribution)
from sympcool.trapmodel import (IonSpecies, RamanGeometry, StrayField, TrapConfig,
                                axial_mode_frequencies, find_equilibrium, lamb_dicke,
                                normal_modes, potential_gradient, potential_hessian)


def within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def axial_pair(cfg):
    ms = normal_modes(cfg, find_equilibrium(cfg))
    return ms["com"].frequency, ms["stretch"].frequency


def test_criterion_1_mode_structure():
    t0 = time.perf_counter()
    be = IonSpecies.beryllium9()
    twin = IonSpecies("9Be+b", be.mass)
    base = TrapConfig.micromotion_study()
    equal = TrapConfig(base.omega0, base.omega1, base.omega2, base.omega3, base.omega_rf,
                       be, twin)
    lo, hi = axial_pair(equal)
    sqrt3_err = abs(hi / lo / sqrt(3) - 1)

    # 2.121 = sqrt(9/2) is the closed form at mass ratio 24/9
    nominal = TrapConfig(base.omega0, base.omega1, base.omega2, base.omega3, base.omega_rf,
                         IonSpecies("9Be", 9 * C.AMU), IonSpecies("24Mg", 24 * C.AMU))
    lo_n, hi_n = axial_pair(nominal)
    oracle_lo, oracle_hi = axial_mode_frequencies(nominal.omega1, 24 / 9)
    ratio_nominal = hi_n / lo_n
    oracle_err = abs(ratio_nominal / (oracle_hi / oracle_lo) - 1)

    lo_c, hi_c = axial_pair(base)
    ratio_codata = hi_c / lo_c
    codata_lo, codata_hi = axial_mode_frequencies(base.omega1, base.mass_ratio)
    codata_err = abs(ratio_codata / (codata_hi / codata_lo) - 1)
    f_com, f_st = lo_c / (2 * pi), hi_c / (2 * pi)
    elapsed = time.perf_counter() - t0

    checks = {
        "sqrt3": sqrt3_err <= 1e-9,
        "ratio": abs(ratio_nominal - 2.121) <= 1e-3 and oracle_err <= 1e-9 and codata_err <= 1e-9,
        "com": within(f_com, 2.05e6, 0.02),
        "stretch": within(f_st, 4.3e6, 0.02),
        "runtime": elapsed < 1.0,
    }
    detail = (f"equal-mass ratio/sqrt3-1={sqrt3_err:.1e}; Be/Mg ratio {ratio_nominal:.5f} "
              f"(mass numbers), {ratio_codata:.5f} (atomic masses), oracle gap "
              f"{max(oracle_err, codata_err):.1e}; trap curvatures give com "
              f"{f_com / 1e6:.4f} MHz ({f_com / 2.05e6 - 1:+.1%}) and stretch "
              f"{f_st / 1e6:.4f} MHz ({f_st / 4.3e6 - 1:+.1%}); {elapsed:.2f} s; "
              f"failed: {[k for k, v in checks.items() if not v] or 'none'}")
    assert record_criterion(1, all(checks.values()), detail)


def test_criterion_2_lamb_dicke():
    t0 = time.perf_counter()
    cfg = TrapConfig.cooling_experiment()
    ms = normal_modes(cfg, find_equilibrium(cfg))
    geom = RamanGeometry.perpendicular(280e-9)
    eta_com = abs(lamb_dicke(ms["com"], "partner", geom))
    eta_st = abs(lamb_dicke(ms["stretch"], "partner", geom))
    elapsed = time.perf_counter() - t0
    ok = within(eta_com, 0.30, 0.05) and within(eta_st, 0.082, 0.05) and elapsed < 1.0
    detail = (f"eta com {eta_com:.4f} (target 0.30), stretch {eta_st:.4f} (target 0.082), "
              f"{elapsed:.2f} s")
    assert record_criterion(2, ok, detail)


def test_criterion_3_micromotion_sweep():
    t0 = time.perf_counter()
    cfg = TrapConfig.micromotion_study()
    probe = ProbeBeam(C.BE9_WAVELENGTH)
    geom = RamanGeometry.perpendicular(C.BE9_WAVELENGTH)
    sweep = spectrum_sweep(cfg, 0.1, probe, geom, default_theta_grid(721))
    s = sweep.summary()
    elapsed = time.perf_counter() - t0
    mx, mn, eta = (s["max_abs_stretch_shift_hz"], s["min_abs_stretch_shift_hz"],
                   s["max_abs_eta1"])
    ok = (within(mx, 90e3, 0.15) and within(mn, 7e3, 0.15) and within(eta, 0.05, 0.15)
          and elapsed < 30)
    detail = (f"a={s['a_m'] * 1e6:.4f} um; max shift {mx / 1e3:.2f} kHz, min shift "
              f"{mn / 1e3:.2f} kHz, max eta1 {eta:.4f}; 721 points in {elapsed:.1f} s")
    assert record_criterion(3, ok, detail)


@pytest.fixture(scope="module")
def cooling_runs():
    out = {}
    for variant, flag in (("cluster", True), ("common", False)):
        cfg = RunConfig.from_dict({"cooling": {"cluster_detunings": flag}})
        for name in ("com", "stretch"):
            t0 = time.perf_counter()
            _, s = cooling_summary(cfg, name)
            s["seconds"] = time.perf_counter() - t0
            out[variant, name] = s
    return out


def test_criterion_4_cooling(cooling_runs):
    targets = {"com": (0.80, 0.18), "stretch": (0.77, 0.23)}

    def verdict(variant):
        ok = True
        for name, (p0, r) in targets.items():
            s = cooling_runs[variant, name]
            ok &= abs(s["p0"] - p0) <= 0.03 and abs(s["sideband_ratio"] - r) <= 0.02
        return ok

    def describe(variant):
        return ", ".join(f"{n} P0={cooling_runs[variant, n]['p0']:.3f} "
                         f"r={cooling_runs[variant, n]['sideband_ratio']:.3f}"
                         for n in targets)

    seconds = sum(s["seconds"] for s in cooling_runs.values())
    detail = (f"per-amplitude detunings (default): {describe('cluster')}; "
              f"common detuning: {describe('common')} "
              f"({'passes' if verdict('common') else 'fails'}); {seconds:.0f} s for 4 runs")
    assert record_criterion(4, verdict("cluster"), detail)


def test_criterion_5_scattered_photons():
    cfg = RunConfig.from_dict({})
    scheme = cfg.level_scheme()
    got = {}
    for name, target in (("com", 0.55), ("stretch", 2.0)):
        mode = cfg.fock_mode(name, n_max=12)
        tau = decoherence_estimates(DecoherenceParams(eta=mode.eta)).tau_pi
        got[name] = (raman_pulse_photons(scheme, mode, tau, cfg["raman"]["rabi"],
                                         cfg.geometry(), n=1), target, tau)
    ok = all(within(v, t, 0.20) for v, t, _ in got.values())
    detail = ", ".join(f"{n} {v:.3f} over {tau * 1e6:.2f} us (target {t})"
                       for n, (v, t, tau) in got.items())
    assert record_criterion(5, ok, detail + "; pulses start in |g1, n=1>")


def test_criterion_6_full_versus_reduced():
    t0 = time.perf_counter()
    cfg = RunConfig.from_dict({})
    scheme, mode, rabi, duration, dt = validation_setup(cfg)
    cmp = compare_with_full(scheme, mode, rabi, duration, cfg["validation"]["nbar0"],
                            cfg.geometry(), dt)
    elapsed = time.perf_counter() - t0
    d = cmp.trace_distance
    ok = d["cluster"] <= 0.02 and elapsed < 300
    detail = (f"Delta=20 Gamma, Omega=2pi x {rabi / 2 / pi / 1e6:.0f} MHz, pulse "
              f"{duration * 1e6:.2f} us: trace distance {d['cluster']:.4f} with "
              f"per-amplitude detunings (default), {d['common']:.4f} with a common detuning; "
              f"photons full {cmp.photons_full:.4f} vs reduced "
              f"{cmp.photons_reduced['cluster']:.4f}; {cmp.full_steps} full steps, "
              f"{elapsed:.0f} s")
    assert record_criterion(6, ok, detail)


def test_criterion_7_property_suites():
    rng = np.random.default_rng(7)
    results = {}

    # invariants at every step of a full-model and a reduced-model trajectory
    scheme = LevelScheme()
    s20 = scheme.with_detuning(20 * scheme.linewidth)
    mode = FockMode(2 * pi * 2.05e6, 0.3, 4)
    drive = RamanDrive(2 * pi * 33e6, mode.omega, 30e-9)
    rho4 = DensityState(np.kron(np.diag([0.7, 0.2, 0.05, 0.05]),
                                random_density(rng, mode.dim)), 4)
    full = evolve_full(rho4, s20, drive, mode, store_every=1, check=False)
    red_mode = FockMode(2 * pi * 2.05e6, 0.3, 10)
    gen = build_reduced(scheme, RamanDrive(2 * pi * 30e6, red_mode.omega, 2e-6), red_mode)
    rho2 = DensityState.from_populations(thermal_distribution(2.0, 10).probabilities, 2)
    red = evolve_reduced(rho2, gen, 2e-6, store_every=1, check=False)
    sched = CoolingSchedule.red_sideband(red_mode, 2e-6, cycles=2)
    cooled = cool(rho2, sched, scheme, red_mode, check=True)
    worst = {"hermiticity": 0.0, "trace_error": 0.0, "min_eigenvalue": 0.0}
    for st in full.states + red.states + [cooled.state]:
        rep = st.invariants()
        worst["hermiticity"] = max(worst["hermiticity"], rep["hermiticity"])
        worst["trace_error"] = max(worst["trace_error"], rep["trace_error"])
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], rep["min_eigenvalue"])
    results["trajectories"] = (worst["hermiticity"] <= 1e-10 and worst["trace_error"] <= 1e-8
                               and worst["min_eigenvalue"] >= -1e-6)

    geom = EmissionGeometry()
    recoil_err = 0.0
    for _ in range(20):
        m = FockMode(2 * pi * 2e6, rng.uniform(0.05, 0.5), int(rng.integers(2, 25)))
        rho = random_density(rng, m.dim)
        for pol in ("pi", "sigma"):
            out = recoil_average(rho, m, geom, pol, rng.uniform(0, 1e-6))
            recoil_err = max(recoil_err, abs(np.trace(out) - 1))
    results["recoil"] = recoil_err <= 1e-10

    ratio_err = 0.0
    for _ in range(10):
        nbar = rng.uniform(0.05, 5)
        probe = SidebandProbe(0.1, 1.0, rng.uniform(0.1, 60.0))
        r = sideband_ratio(thermal_distribution(nbar, 300), probe)
        ratio_err = max(ratio_err, abs(r - nbar / (1 + nbar)))
    results["thermal_ratio"] = ratio_err <= 1e-6

    trap = TrapConfig.micromotion_study()
    eq = find_equilibrium(trap, StrayField(2e-7, 0.3))
    z = np.concatenate([eq.x, eq.y]) + 1e-7 * rng.normal(size=6)
    h = 1e-11
    fd = np.empty((6, 6))
    for i in range(6):
        e = np.zeros(6)
        e[i] = h
        fd[i] = (potential_gradient(trap, StrayField(), (z + e)[:3], (z + e)[3:])
                 - potential_gradient(trap, StrayField(), (z - e)[:3], (z - e)[3:])) / (2 * h)
    hess = potential_hessian(trap, z[:3], z[3:])
    hess_err = np.linalg.norm(fd - hess) / np.linalg.norm(hess)
    results["hessian"] = hess_err <= 1e-6

    xs = rng.uniform(0, 2.3, 50)
    trip_err = max(abs(ratio_to_modulation(fluorescence_ratio(x)) - x) for x in xs)
    results["micromotion_round_trip"] = trip_err <= 1e-10

    detail = (f"{len(full.states) + len(red.states)} stored states: max hermiticity "
              f"{worst['hermiticity']:.1e}, max trace error {worst['trace_error']:.1e}, "
              f"min eigenvalue {worst['min_eigenvalue']:.1e}; recoil trace {recoil_err:.1e}; "
              f"thermal ratio {ratio_err:.1e}; Hessian vs FD {hess_err:.1e}; ratio round trip "
              f"{trip_err:.1e}; failed: {[k for k, v in results.items() if not v] or 'none'}")
    assert record_criterion(7, all(results.values()), detail)


def test_criterion_8_estimators():
    com = decoherence_estimates(DecoherenceParams(eta=0.3))
    st = decoherence_estimates(DecoherenceParams(eta=0.082))
    ok = (0.5 <= com.probability / 4e-11 <= 2 and within(com.tau_pi, 2.8e-6, 0.05)
          and within(st.tau_pi, 10e-6, 0.05) and com.probability == com.rate * com.tau_pi
          and st.probability == st.rate * st.tau_pi)
    detail = (f"P_SE {com.probability:.3e} (target 4e-11 within x2), tau_pi com "
              f"{com.tau_pi * 1e6:.3f} us, stretch {st.tau_pi * 1e6:.3f} us, "
              f"R_SE {com.rate:.3e} /s, P_SE - R_SE tau_pi = {com.probability - com.rate * com.tau_pi}")
    assert record_criterion(8, ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
