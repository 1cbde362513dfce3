"""effdual: exact-arithmetic effective Pontryagin duality toolkit.

Submodules
----------
abelian     integer matrices, Smith normal form, f.g. abelian invariants
simplicial  finite complexes, contiguity, integral (co)homology
discrete    enumerated/c.e.-presented discrete groups, rank-1 membership
circle      exact circle & product-of-circles arithmetic, solenoid systems
nerve       metric-nerve towers, H^1 towers, direct limits, dual extraction
tdlc        t.d.l.c. presentations, cocycle extensions, the stage machine
mindchange  mind-change schedules and the interval-system simulator
cli         batch driver
"""

__version__ = "0.1.0"
