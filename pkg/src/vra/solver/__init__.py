"""Reference solutions: savings construction, guided local search, exact oracle."""

from .exact import solve_exact
from .gls import GLSResult, SolverConfig, guided_local_search, improve_gls
from .savings import solve_savings

__all__ = ["GLSResult", "SolverConfig", "guided_local_search", "improve_gls", "solve_exact", "solve_savings"]
