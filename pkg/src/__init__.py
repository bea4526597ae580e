"""
Incidence Lab: exact line / 2-flat incidence experiments in R^4.
"""
__version__ = "0.1.0"
