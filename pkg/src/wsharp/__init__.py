"""wsharp: numerical nonsmooth analysis and weak-sharp-minima certification.

Subpackages
-----------
geometry
    Convex polytopes in V-representation, support oracles, min-norm point.
qdcalc
    Expression language with exact quasidifferential calculus.
demyanov
    Demyanov difference of polytopes and the derived generalized gradient.
exhauster
    Lower exhausters and numerical Hadamard derivative estimators.
certify
    Grid-based certification of weak sharp minimality and error bounds.
cli
    Problem-file parsing and the ``wsharp`` command line tool.
"""

__version__ = "0.1.0"
