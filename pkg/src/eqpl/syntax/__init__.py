"""Syntax layer: AST nodes, parser, renderer, expansion, symbol extraction."""

from .expand import (
    amp_of, cond_nonetg_equations, expand, fold_cconj, fold_qconj, fold_qdisj,
    fold_rsum, free_symbols, prob_sum, sq_abs, unit_sum, vector_components,
    vector_eq, vector_subseteq,
)
from .nodes import *  # noqa: F401,F403 -- the node vocabulary is the API
from .nodes import QuantumAtom, QuantumFormula, Term
from .parser import parse, parse_formula_file
from .render import qubit_name, render, render_const
