"""Algebraic tomography of finite-dimensional non-Hermitian Floquet systems.

Observable trace sequences zeta_n = Tr(O M^n) of a monodromy matrix M are
turned back into the characteristic polynomial, the spectrum and Jordan
structure, the observable dressing, a similarity-class realization, and (with
calibrated micromotion) the exact matrix in a fixed basis.

Modules
-------
monodromy     propagators, monodromy, spectral/Jordan decomposition
traces        ordinary, fundamental, adjoint and time-shifted trace sequences
spectral      characteristic polynomial, OSD/ORS/ODSD, T-system, windings
reconstruct   Hankel rank, Prony, Schur stencils, block realization
algebra       generated algebras, commutants, D_obs, exact reconstruction
models        driven transmon qutrit and non-Hermitian Floquet SSH chain
cli           command-line front end
"""

__version__ = "0.1.0"
