"""Desk-scale computational ghost imaging toolkit.

Simulated pattern illumination and bucket detection, four reconstruction
routes (correlation, ISTA compressed sensing, and two block-wise neural
refiners), PSNR/SSIM metrics, and a comparison harness.
"""

__version__ = "0.1.0"
