"""Frozen reference scaling tables.

Columns: beta_theta, beta_omega, beta_v, beta_V, m_theta, m_omega, m_v, m_V.
"""
from fractions import Fraction as F

NONRELATIVISTIC = {
    "Nelson, massless": (2, 1, F(-1, 2), -2, 2, 1, F(-1, 2), -2),
    "Nelson, massive": (2, 0, F(-1, 2), -1, 2, 1, F(-1, 2), -2),
    "Froehlich polaron": (2, 0, -1, -2, 0, 0, -1, -2),
}
P_DEPENDENT = {
    "Pauli-Fierz": (2, 1, F(-1, 2), -2, 2, 1, F(-1, 2), -2),
    "Dipole": (2, 1, F(1, 2), 0, 2, 1, F(1, 2), 0),
}
TABLES = {"nonrelativistic": NONRELATIVISTIC, "p-dependent": P_DEPENDENT}

# printed entries contradicting their own model definition:
# theta = p^2/2m scales with m_theta = 2, which the verdict theorem also uses
ERRATA = {("Froehlich polaron", "m_theta"): (0, 2)}
