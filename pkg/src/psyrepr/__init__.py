"""Compare word representations from text, behavior and brain data.

Representational similarity analysis (:mod:`psyrepr.rsa`) relates
representations to each other; representational content analysis
(:mod:`psyrepr.rca`, :mod:`psyrepr.ensemble`) probes them against word norms.
"""

__version__ = "0.1.0"
