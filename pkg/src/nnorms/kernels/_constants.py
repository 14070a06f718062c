# Shared tuning of the slot solver; both backends read these.
MU0 = 0.1
MU_DECAY = 0.1
MU_MIN = 1e-8
# p=inf is smoothed by a finite exponent min(P_INF_CAP, 0.5/mu); the exact max
# is restored when iterates are scored, so the cap only limits how close the
# final iterate gets (relative loss <= n**(1/P_INF_CAP) - 1).
P_INF_CAP = 1e4
ARMIJO = 0.25
MIN_STEP = 1e-12
PIVOT_RTOL = 1e-14
