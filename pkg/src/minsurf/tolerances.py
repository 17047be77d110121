"""Numerical defaults shared by the modules.

All values can be overridden per call; the CLI exposes the important ones.
"""

TOL_CURVE = 1e-12        # relative residual of the defining curve relation
TIE_TOL = 1e-6           # sheet ambiguity threshold (relative)
CLEARANCE_MIN = 1e-3     # chart distance kept from branch values
MIN_STEP = 1e-8          # smallest continuation step before giving up
CONTINUITY_TOL = 0.25    # fraction of local root spacing allowed per step
QUAD_TOL = 1e-10         # absolute tolerance of path quadrature
QUAD_LIMIT = 20000       # max adaptive panels per path piece
ANGLE_TOL = 1e-6         # classify_curve tolerance (radians)
TRUNC_EPS = 2.0 ** -6    # chart distance to a puncture where meshes stop
TRUNC_R = 2.0 ** 6       # outer radius for planar domains
END_TILT = 0.02          # max normal tilt (radians) on an end's cutoff ring
WELD_TOL = 1e-7          # relative to mesh scale
PERIOD_TOL = 1e-7        # period-free test used before meshing
THRESHOLD_GUARD = 0.05   # spectral guard band around eigenvalue 2
ROUNDOFF_REL = 1e-13         # quadrature floor relative to integrand scale x length
