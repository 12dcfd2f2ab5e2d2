"""Complex Langevin dynamics, Borel-resummed moment flows and Fokker-Planck spectra
for complex quartic and quadratic actions."""

__version__ = "0.1.0"
