"""Resolution refinement for adiabatic state preparation.

Prepare a ground state in a small model space, lift it into a larger one and
evolve adiabatically to the large-space ground state.
"""

__version__ = "0.1.0"
