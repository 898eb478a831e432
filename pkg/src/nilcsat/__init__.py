"""Circuit satisfiability and equivalence over the nilpotent algebras D[p1,...,ph]."""
from .algebra import AlgebraSpec, DElem
from .canonical import CanonicalForm, canonicalize, evaluate_canonical
from .cnf import CnfFormula, parse_dimacs
from .terms import Circuit, Term, evaluate, parse, to_text

__version__ = "0.1.0"

__all__ = [
    "AlgebraSpec", "DElem", "CanonicalForm", "canonicalize", "evaluate_canonical",
    "CnfFormula", "parse_dimacs", "Circuit", "Term", "evaluate", "parse", "to_text",
]
