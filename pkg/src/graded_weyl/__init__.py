"""Numerical Weyl laws for hypoelliptic operators on graded Lie groups."""

__version__ = "0.1.0"
