"""Correction constants for the small-argument kernel branches.

Generated by tools/calibrate_series.py against 40-digit elliptic-integral
values; do not edit by hand.  See that script for the series layout."""

# max relative error 1.64e-12 on u in [1e-7, 4e-3]
F_U1_LOG = 0.75
F_U1 = -0.75
F_U2_LOG = 0.5156185492126973
F_U2 = -0.6327737670369966
F_U3_LOG = 0.4074944733545388
F_U3 = -0.4939229687046118

# max relative error 1.73e-15 on u in [1e-7, 4e-3]
F1_U1_LOG = 0.234375
F1_U1 = -0.11328125
F1_U2_LOG = 0.029296681900337698
F1_U2 = -0.048826965490212884
F1_U3_LOG = 0.016165602234033207
F1_U3 = -0.02132580042990685

# max relative error 3.62e-14 on u in [1e-7, 4e-3]
F2_U1_LOG = -0.375
F2_U1 = 0.25
F2_U2_LOG = -0.023437386929486718
F2_U2 = 0.08203056949604297
F2_U3_LOG = -0.013479039105094343
F2_U3 = 0.030748201905909194

