"""Concrete models used by the worked examples."""

from ..core import Lattice
from .base import LocalTableModel, as_fraction, conservative_table_model, constant_entry


def two_species_gamma(r1, r2, r3, r4, r5) -> dict:
    """Conservative jump table ``(k, source value, target value) -> rate`` on W = {0, 1, 2}."""
    r1, r2, r3, r4, r5 = map(as_fraction, (r1, r2, r3, r4, r5))
    return {
        (1, 1, 0): r3,  # (1 0) -> (0 1)
        (2, 2, 0): r1,  # (2 0) -> (0 2)
        (1, 2, 0): r5,  # (2 0) -> (1 1)
        (1, 1, 1): r2,  # (1 1) -> (0 2)
        (1, 2, 1): r4,  # (2 1) -> (1 2)
    }


def two_species_rates(r1, r2, r3, r4, r5) -> LocalTableModel:
    """Symmetric one-dimensional two-species exclusion (values 0, 1, 2)."""
    return conservative_table_model(two_species_gamma(r1, r2, r3, r4, r5), N=2, name="two-species")


def two_species_attractive(r1, r2, r3, r4, r5) -> bool:
    """The condition chain ``r1 v r2 <= r3 ^ r4 <= r3 v r4 <= r1 + r5``."""
    r1, r2, r3, r4, r5 = map(as_fraction, (r1, r2, r3, r4, r5))
    return max(r1, r2) <= min(r3, r4) and max(r3, r4) <= r1 + r5


def nonconservative_example_rates(mu1, mu2, gamma1, gamma2, alpha1, alpha2, beta, N=5):
    """The pair of constant-rate models of the non-conservative worked example.

    The first model has single and double deaths, conservative single moves
    and moves where one individual leaves and two arrive.  The second has
    single and double arrivals, the same deaths and conservative single moves.
    """
    first = LocalTableModel(
        [
            constant_entry("dep", 1, mu1),
            constant_entry("dep", 2, mu2),
            constant_entry("mig", 1, gamma1, l=1),
            constant_entry("mig", 1, gamma2, l=2),
        ],
        N,
        Lattice(1),
        name="nonconservative-first",
    )
    second = LocalTableModel(
        [
            constant_entry("arr", 1, alpha1),
            constant_entry("arr", 2, alpha2),
            constant_entry("dep", 1, mu1),
            constant_entry("dep", 2, mu2),
            constant_entry("mig", 1, beta, l=1),
        ],
        N,
        Lattice(1),
        name="nonconservative-second",
    )
    return first, second


__all__ = [
    "nonconservative_example_rates",
    "two_species_attractive",
    "two_species_gamma",
    "two_species_rates",
]
