"""Embedding costs: J-UNIWARD, asymmetric polarity costs and dither distances."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import convolve2d

from .errors import InvalidAlpha
from .jpeg import DCT8, CoeffImage, decompress_float, real_dct

# Daubechies-8 decomposition high-pass filter.
DB8_HIGHPASS = np.array([
    -0.05441584224310401, 0.31287159091429995, -0.6756307362972898, 0.5853546836542067,
    0.015829105256349306, -0.2840155429615469, -0.0004724845739132828, 0.12874742662047847,
    0.017369301001807547, -0.044088253930794755, -0.013981027917398282, 0.008746094047405777,
    0.004870352993451574, -0.00039174037337694705, -0.0006754494064505693, -0.00011747678412476953,
])
DB8_LOWPASS = (-1.0) ** np.arange(16) * DB8_HIGHPASS[::-1]

# LH, HL, HH directional kernels
WAVELET_FILTERS = (
    np.outer(DB8_LOWPASS, DB8_HIGHPASS),
    np.outer(DB8_HIGHPASS, DB8_LOWPASS),
    np.outer(DB8_HIGHPASS, DB8_HIGHPASS),
)
SIGMA = 2.0 ** -6
WET_COST = 1e13
PAD = 16
IMPACT = 8 + 16 - 1  # support of one 8x8 block change after a 16-tap filter


@dataclass(frozen=True, eq=False)
class CostMaps:
    rho: np.ndarray
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    alpha: float


@dataclass(frozen=True, eq=False)
class DitherInfo:
    """Dither-modulation state of every coefficient of a cover.

    ``interval`` is the index k of the quantization interval holding the
    real-valued coefficient; ``cover_bit`` is its parity.
    """

    interval: np.ndarray
    cover_bit: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray
    dequant_real: np.ndarray
    xi_plus: np.ndarray | None = None
    xi_minus: np.ndarray | None = None


def _step_plane(cover: CoeffImage) -> np.ndarray:
    return np.tile(cover.table.array, (cover.block_rows, cover.block_cols)).astype(np.float64)


def wavelet_residuals(canvas: np.ndarray) -> list[np.ndarray]:
    """Full 2-D convolution of ``canvas`` with each directional kernel."""
    return [convolve2d(canvas, f, mode="full") for f in WAVELET_FILTERS]


def unit_impacts(cover: CoeffImage) -> np.ndarray:
    """|wavelet response| of a +1 change of each DCT mode, shape (3, 64, 23, 23)."""
    q = cover.table.array
    out = np.empty((3, 64, IMPACT, IMPACT))
    for k in range(8):
        for l in range(8):
            patch = np.outer(DCT8[k], DCT8[l]) * q[k, l]
            for f, filt in enumerate(WAVELET_FILTERS):
                out[f, 8 * k + l] = np.abs(convolve2d(patch, filt, mode="full"))
    return out


def juniward_costs(cover: CoeffImage) -> np.ndarray:
    """Symmetric J-UNIWARD cost of changing each coefficient by one step.

    Residuals are taken on the unrounded decompressed cover, symmetrically
    padded by 16 pixels; the padding stays at its cover values when a single
    coefficient is perturbed, so each change touches one 23x23 window.
    """
    spatial = decompress_float(cover)
    canvas = np.pad(spatial, PAD, mode="symmetric")
    impacts = unit_impacts(cover)
    bh, bw = cover.block_rows, cover.block_cols
    rho = np.zeros((bh * bw, 64))
    for f, resid in enumerate(wavelet_residuals(canvas)):
        xi = 1.0 / (SIGMA + np.abs(resid))
        windows = sliding_window_view(xi, (IMPACT, IMPACT))[PAD::8, PAD::8][:bh, :bw]
        rho += windows.reshape(bh * bw, IMPACT * IMPACT) @ impacts[f].reshape(64, -1).T
    rho = rho.reshape(bh, bw, 8, 8).swapaxes(1, 2).reshape(bh * 8, bw * 8)
    rho[~np.isfinite(rho)] = WET_COST
    return np.minimum(rho, WET_COST)


def asymmetric_costs(
    rho: np.ndarray, cover: CoeffImage, alpha: float, dequant_real: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Discount the direction that moves a coefficient toward its real value."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha must lie in [0, 1], got {alpha}")
    if dequant_real is None:
        dequant_real = real_dct(cover)
    target = dequant_real / _step_plane(cover)
    x = cover.coeffs
    rho = np.asarray(rho, dtype=np.float64)
    rho_plus = np.where(x < target, alpha * rho, rho)
    rho_minus = np.where(x > target, alpha * rho, rho)
    return rho_plus, rho_minus


def modification_distances(cover: CoeffImage, dequant_real: np.ndarray | None = None) -> DitherInfo:
    if dequant_real is None:
        dequant_real = real_dct(cover)
    q = _step_plane(cover)
    k = np.copysign(np.floor(np.abs(dequant_real / q) + 0.5), dequant_real).astype(np.int64)
    return DitherInfo(
        interval=k,
        cover_bit=(k % 2).astype(np.uint8),
        d_plus=(k + 1) * q - dequant_real,
        d_minus=dequant_real - (k - 1) * q,
        dequant_real=dequant_real,
    )


def modifying_costs(rho_plus, rho_minus, d_plus, d_minus, table) -> tuple[np.ndarray, np.ndarray]:
    """Scale per-step costs to the de-quantized domain and weight by distance."""
    q = np.asarray(table.array if hasattr(table, "array") else table, dtype=np.float64)
    if q.shape == (8, 8) and np.shape(rho_plus) != (8, 8):
        rows, cols = np.shape(rho_plus)
        q = np.tile(q, (rows // 8, cols // 8))
    return np.asarray(rho_plus) / q * d_plus, np.asarray(rho_minus) / q * d_minus


def compute_costs(cover: CoeffImage, alpha: float = 0.7) -> tuple[CostMaps, DitherInfo]:
    """Run the full cost pipeline once for a cover."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha must lie in [0, 1], got {alpha}")
    xbar = real_dct(cover)
    rho = juniward_costs(cover)
    rho_plus, rho_minus = asymmetric_costs(rho, cover, alpha, xbar)
    dither = modification_distances(cover, xbar)
    xi_plus, xi_minus = modifying_costs(rho_plus, rho_minus, dither.d_plus, dither.d_minus, cover.table)
    costs = CostMaps(rho, rho_plus, rho_minus, float(alpha))
    dither = DitherInfo(
        dither.interval, dither.cover_bit, dither.d_plus, dither.d_minus, xbar, xi_plus, xi_minus
    )
    return costs, dither


_DUMP_MAPS = ("rho", "rho_plus", "rho_minus", "d_plus", "d_minus", "xi_plus", "xi_minus")


def dump_cost_maps(directory, cover: CoeffImage, costs: CostMaps, dither: DitherInfo) -> Path:
    """Write each map as little-endian float64 plus a ``header.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    maps = {
        "rho": costs.rho, "rho_plus": costs.rho_plus, "rho_minus": costs.rho_minus,
        "d_plus": dither.d_plus, "d_minus": dither.d_minus,
        "xi_plus": dither.xi_plus, "xi_minus": dither.xi_minus,
    }
    for name, arr in maps.items():
        np.ascontiguousarray(arr, dtype="<f8").tofile(directory / f"{name}.f64")
    header = {
        "width": cover.width,
        "height": cover.height,
        "shape": list(costs.rho.shape),
        "alpha": costs.alpha,
        "dtype": "<f8",
        "maps": list(_DUMP_MAPS),
    }
    (directory / "header.json").write_text(json.dumps(header, indent=2) + "\n")
    return directory


def load_cost_maps(directory) -> tuple[dict, dict[str, np.ndarray]]:
    directory = Path(directory)
    header = json.loads((directory / "header.json").read_text())
    shape = tuple(header["shape"])
    maps = {
        name: np.fromfile(directory / f"{name}.f64", dtype="<f8").reshape(shape)
        for name in header["maps"]
    }
    return header, maps
