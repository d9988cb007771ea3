"""Symbolic-numeric workbench for pseudohermitian and CR tractor calculus."""

__version__ = "0.1.0"
