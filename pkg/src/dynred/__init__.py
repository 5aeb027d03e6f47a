"""Dynamic Lipton reduction for small guarded-command concurrent programs.

Pipeline: parse (``lang``), analyse (``analysis``, ``movers``), instrument
(``instrument``), then explore explicitly (``explicit``, ``reduce``) or
symbolically (``encode``).  ``axioms`` checks the correctness conditions
on explicit state spaces.
"""

from .lang import ParseError, load_program, lower_sugar, parse_program, print_program
from .explicit import BudgetExceeded, build_ts, check_program, reach_error
from .analysis import analyze
from .movers import synthesize_all, verify_both_mover
from .instrument import instrument, classify_phase, state_bisim
from .reduce import reduced_reach
from .axioms import check_cross_equivalence, check_pas, check_thread_bisim
from .encode import block_denotation, emit_bmc, enumerate_blocks, ground_decide

__all__ = [
    "ParseError", "load_program", "lower_sugar", "parse_program", "print_program",
    "BudgetExceeded", "build_ts", "check_program", "reach_error", "analyze",
    "synthesize_all", "verify_both_mover", "instrument", "classify_phase", "state_bisim",
    "reduced_reach", "check_cross_equivalence", "check_pas", "check_thread_bisim",
    "block_denotation", "emit_bmc", "enumerate_blocks", "ground_decide",
]
