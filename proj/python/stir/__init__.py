# SPDX-License-Identifier: Apache-2.0
"""Stable iterative refinement laboratory."""

from ._stir import (
    cond_estimate,
    gen_conditioned,
    gen_decay_spd,
    gen_uniform_random,
    line_search_alpha,
    matrix_market,
    read_matrix_market,
    round_to,
    solve,
)

__all__ = [
    "cond_estimate",
    "gen_conditioned",
    "gen_decay_spd",
    "gen_uniform_random",
    "line_search_alpha",
    "matrix_market",
    "read_matrix_market",
    "round_to",
    "solve",
]
