"""Robust adaptive JPEG steganography over a recompression channel."""
from .channel import ChannelModel, coefficient_diff, recompress
from .costs import compute_costs
from .domain import DOMAIN_NAMES, DOMAIN_SIZES, get_domain
from .embedder import (
    CoverAnalysis,
    EmbedConfig,
    RobustnessReport,
    StegoRecipe,
    auto_extract,
    embed,
    extract,
    message_length,
    random_message,
)
from .errors import StegError
from .jpeg import CoeffImage, QuantTable, SpatialImage, compress, decompress, parse_jpeg, serialize_jpeg
from .rs import rs_decode, rs_encode
from .stc import StcParams, stc_embed, stc_extract

__version__ = "0.1.0"
