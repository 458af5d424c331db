"""1-D wavelet scattering transforms on periodic grids.

Filter banks live in :mod:`scatterlab.filterbank`, the cascade in
:mod:`scatterlab.scatter`; the remaining modules build measurements and
experiments on top of those two.
"""

from scatterlab.filterbank import (
    ConvergenceError,
    FilterBank,
    FrequencyGrid,
    admissibility_alpha,
    box_spline_rho,
    build_battle_lemarie_mother,
    build_filter_bank,
    littlewood_paley_deviation,
)
from scatterlab.scatter import (
    Coefficient,
    ScatteringOutput,
    energy_budget,
    format_path,
    one_step_propagator,
    parse_path,
    scatter,
    scattering_distance,
    u_path,
)

__all__ = [
    "Coefficient",
    "ConvergenceError",
    "FilterBank",
    "FrequencyGrid",
    "ScatteringOutput",
    "admissibility_alpha",
    "box_spline_rho",
    "build_battle_lemarie_mother",
    "build_filter_bank",
    "energy_budget",
    "format_path",
    "littlewood_paley_deviation",
    "one_step_propagator",
    "parse_path",
    "scatter",
    "scattering_distance",
    "u_path",
]

__version__ = "0.1.0"
