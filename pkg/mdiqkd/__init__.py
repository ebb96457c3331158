"""
Simulation of qudit based measurement-device-independent quantum key
distribution: entanglement swapping over GF(2^n) Bell states, the round-robin
differential-phase-shift and Chau15 schemes (Bell measurement and linear
optics variants), a cheating relay, and classical post-processing.
"""
