"""SIC fiducials, qplex geometry, MIC frames and qplectic cone foil theories."""

from .cone_foils import build_cone, f_inverse, f_map, jordan_param_count, polygonal_number
from .mic import Mic, mic_from_sic, self_duality_gap
from .qplex import QplexParams, make_params, probs_to_state, state_to_probs, urgleichung
from .sic import Sic, search_fiducial, sic_verify, wh_displacement, wh_orbit

__all__ = [
    "Mic",
    "QplexParams",
    "Sic",
    "build_cone",
    "f_inverse",
    "f_map",
    "jordan_param_count",
    "make_params",
    "mic_from_sic",
    "polygonal_number",
    "probs_to_state",
    "search_fiducial",
    "self_duality_gap",
    "sic_verify",
    "state_to_probs",
    "urgleichung",
    "wh_displacement",
    "wh_orbit",
]
