"""
Computation layer for QuasiLab.
Contains the cocycle, spectra, localization, dynamics and kicked-rotor
kernels plus the sweep workflow, separate from the command line.
"""
