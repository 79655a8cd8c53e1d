"""eqpl: a workbench for exogenous quantum propositional logic.

Submodules:
    syntax      -- ASTs, parser, renderer, abbreviation expansion
    structures  -- finite-frame quantum interpretation structures
    semantics   -- denotation and satisfaction
    arithmetic  -- variable-only arithmetic evaluation and validity oracle
    calculus    -- axiom schemas, derivation checking, theorem corpus
    modelfinder -- satisfiability search via polynomial constraint systems
    model_io    -- the JSON model-file format
    cli         -- the `eqpl` command-line tool
"""

__version__ = "0.1.0"
