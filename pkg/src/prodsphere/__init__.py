"""Isotropic positive definite kernels on products of spheres."""
__version__ = "0.1.0"
