"""Wavelet-persistence channel maps for grayscale images."""

__version__ = "0.1.0"

from .estimators import ChannelExtractor, TopologicalProbe
from .persistence import Diagram, compute_diagram, filter_h0, truncate_h1
from .vectorize import ChannelStack, GatingParams, build_channel_stack, concat_input, gate, subband_map
from .wavelet import SubbandPyramid, dwt2, idwt2, tau

__all__ = [
    "__version__",
    "ChannelExtractor",
    "TopologicalProbe",
    "Diagram",
    "compute_diagram",
    "filter_h0",
    "truncate_h1",
    "ChannelStack",
    "GatingParams",
    "build_channel_stack",
    "concat_input",
    "gate",
    "subband_map",
    "SubbandPyramid",
    "dwt2",
    "idwt2",
    "tau",
]
