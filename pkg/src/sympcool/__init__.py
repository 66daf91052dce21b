"""Sympathetic Raman sideband cooling of a two-species ion crystal.

Modules
-------
trapmodel    equilibrium, normal modes and Lamb-Dicke parameters
micromotion  stray-field metrology from fluorescence and mode spectra
dynamics     four-level master equation with photon recoil
reduced      ground-manifold model, optical pumping and the cooling cycle
thermometry  thermal states, sideband ratios and scattering estimates
"""
__version__ = "0.1.0"
