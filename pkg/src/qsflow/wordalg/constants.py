"""Phase conventions for the noncommutative torus.

With ``(U u)_{m,n} = u_{m+1,n}`` and ``(V u)_{m,n} = lambda^m u_{m,n+1}`` on
``l2(Z^2)`` one finds ``V U = lambda^{-1} U V``, hence

    (U^m V^n)(U^p V^q) = lambda^(PHASE_SIGN * n * p) U^(m+p) V^(n+q)
    (U^m V^n)*         = lambda^(ADJOINT_SIGN * m * n) U^(-m) V^(-n)

Both signs are re-derived from the lattice representation in the test suite.
"""

PHASE_SIGN = -1
ADJOINT_SIGN = -1
