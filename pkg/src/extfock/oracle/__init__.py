"""Truncated-Fock numerical oracle."""
from .backend import available, current, use
from .checks import (
    Report, check_commutatorV, check_glimm, check_ibc, check_overlap, check_overlap_random,
    check_pullback, check_pullthrough, check_sector_distribution, default_lattice,
    random_windowed, self_energy_crosscheck, truncation_scan,
)
from .fock import BudgetError, FockSpace, GridSpec, Lattice, Ops, build_ops, padding

__all__ = [
    "BudgetError", "FockSpace", "GridSpec", "Lattice", "Ops", "Report", "available",
    "build_ops", "check_commutatorV", "check_glimm", "check_ibc", "check_overlap",
    "check_overlap_random", "check_pullback", "check_pullthrough", "check_sector_distribution",
    "current", "default_lattice", "padding", "random_windowed", "self_energy_crosscheck",
    "truncation_scan", "use",
]
