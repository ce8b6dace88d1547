"""geomech: symbolic verification of geometric structures of dynamics.

The engine constructs and verifies the tensorial ingredients of
Lagrangian, Hamiltonian and finite Weyl descriptions of dynamical
systems on coordinate charts, transports them under diffeomorphisms,
and checks candidate alternative descriptions.
"""

__version__ = "0.1.0"
