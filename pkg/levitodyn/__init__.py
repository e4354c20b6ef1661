"""Optomechanics of levitated ellipsoidal nanoparticles: trap, gas, Langevin, spectra, cooling, sensing."""

__version__ = "0.3.0"
