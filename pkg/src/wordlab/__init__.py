"""Description-game word learning laboratory.

A tutor names objects in a continuous meaning space with the ``k`` words
whose (masked) prototypes lie closest; a suite of from-scratch multi-label
learners tries to reproduce the tutor's productions.
"""

__version__ = "0.1.0"
