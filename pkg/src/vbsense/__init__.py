"""Simulation and analysis toolkit for boron-vacancy (V_B-) spin defects in hBN."""

__version__ = "0.1.0"
