"""Fault-tolerant cellular automata on trees and hyperbolic tessellations.

Simulation of majority-vote automata under transient, manufacturing and
adversarial faults, the error-probability recursion and degree bounds that
certify tolerance, and the information-theoretic lower bound on the degree.
"""

import warnings

# numba falls back to another threading layer when the installed TBB is too
# old; the fallback is fine, the warning is noise.
warnings.filterwarnings("ignore", message="The TBB threading layer", module="numba")

__version__ = "0.1.0"
