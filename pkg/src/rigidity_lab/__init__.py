"""Numerical laboratory for sharp gradient estimates on rotationally symmetric model balls."""
