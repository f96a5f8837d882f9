"""Elastic cavity scattering with Fourier transparent boundaries."""
