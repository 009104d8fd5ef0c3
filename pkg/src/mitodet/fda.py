"""Fourier domain adaptation: low-frequency amplitude swapping between images.

The style of a reference image is transferred onto a source image in three
steps: transform both to the frequency domain, replace the centered
low-frequency block of the source amplitude with the reference amplitude
(the source phase is kept everywhere), and invert the modified spectrum.
Low frequencies carry illumination/stain style; phase and high frequencies
carry the structures a detector must not lose.

Spectra are stored centered: the zero-frequency bin sits at index
(H//2, W//2). Channels are transformed independently in RGB space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagecore import RasterImage, from_real


@dataclass(frozen=True)
class Spectrum:
    """Per-channel complex frequency grid, centered (DC at (H//2, W//2)).

    ``hermitian`` records whether the spectrum is the unmodified transform
    of a real image; amplitude swapping clears it because the swap breaks
    conjugate symmetry.
    """

    bins: np.ndarray  # complex128, shape (H, W, C)
    hermitian: bool = True

    def __post_init__(self):
        arr = np.asarray(self.bins)
        if arr.ndim != 3:
            raise ValueError(f"spectrum array must be 3-D, got ndim={arr.ndim}")
        if arr.shape[0] <= 0 or arr.shape[1] <= 0:
            raise ValueError(f"spectrum dimensions must be positive, got {arr.shape}")
        arr = np.array(arr, dtype=np.complex128, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "bins", arr)

    @property
    def height(self) -> int:
        return self.bins.shape[0]

    @property
    def width(self) -> int:
        return self.bins.shape[1]

    @property
    def channels(self) -> int:
        return self.bins.shape[2]

    @property
    def amplitude(self) -> np.ndarray:
        """Modulus of each bin (non-negative)."""
        return np.abs(self.bins)

    @property
    def phase(self) -> np.ndarray:
        """Argument of each bin, in (-pi, pi]."""
        return np.angle(self.bins)


@dataclass(frozen=True)
class FdaConfig:
    """Parameters of the amplitude swap.

    beta is the fractional half-size of the swapped center block: the block
    is round(beta*H) x round(beta*W) bins (round = half-up), centered on the
    zero-frequency bin. beta=0 swaps nothing, beta=1 swaps every bin.
    quantize selects 8-bit output from fda_transfer (False keeps the raw
    real-valued reconstruction).
    """

    beta: float = 0.01
    quantize: bool = True

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def low_frequency_window(height: int, width: int, beta: float) -> tuple[slice, slice]:
    """Centered block of swapped bins for a beta value, as (row, col) slices.

    The block is h x w with h = round(beta*H), w = round(beta*W), its top-left
    at (H//2 - h//2, W//2 - w//2) so it is centered on the zero-frequency bin.
    h or w of 0 yields an empty window.
    """
    h = _round_half_up(beta * height)
    w = _round_half_up(beta * width)
    r0 = height // 2 - h // 2
    c0 = width // 2 - w // 2
    return slice(r0, r0 + h), slice(c0, c0 + w)


def forward_spectrum(img: RasterImage) -> Spectrum:
    """Per-channel centered 2-D discrete Fourier transform of an image.

    amplitude = modulus and phase = argument of the returned bins, and
    amplitude * exp(i*phase) recombines to the original bins.
    """
    data = img.pixels.astype(np.float64)
    bins = np.fft.fftshift(np.fft.fft2(data, axes=(0, 1)), axes=(0, 1))
    return Spectrum(bins, hermitian=True)


def inverse_spectrum(spec: Spectrum, max_imag_ratio: float = 1e-6) -> RasterImage:
    """Real part of the inverse transform, as a real-valued image.

    For an unmodified (hermitian) spectrum the imaginary residue of the
    inverse transform must be numerical noise; a residue above
    ``max_imag_ratio`` relative to the signal raises instead of being
    silently dropped. For swapped spectra conjugate symmetry is broken by
    construction and the imaginary part is discarded by contract.
    """
    full = np.fft.ifft2(np.fft.ifftshift(spec.bins, axes=(0, 1)), axes=(0, 1))
    if spec.hermitian:
        scale = max(np.max(np.abs(full)), 1.0)
        residue = np.max(np.abs(full.imag)) / scale
        if residue > max_imag_ratio:
            raise ValueError(
                f"imaginary residue {residue:.3e} exceeds {max_imag_ratio:.1e} "
                "for an unmodified spectrum"
            )
    return RasterImage(full.real)


def swap_low_frequency(source: Spectrum, reference: Spectrum, cfg: FdaConfig) -> Spectrum:
    """Replace the centered low-frequency amplitude of ``source`` with
    ``reference``'s; the phase is the source phase everywhere.

    Bins outside the window are copied from the source bit-exactly, so the
    set of altered bins is always contained in the window.
    """
    if source.bins.shape != reference.bins.shape:
        raise ValueError(
            f"spectrum shapes differ: source {source.bins.shape} "
            f"vs reference {reference.bins.shape}"
        )
    rows, cols = low_frequency_window(source.height, source.width, cfg.beta)
    out = np.array(source.bins, copy=True)
    src_win = source.bins[rows, cols]
    ref_amp = np.abs(reference.bins[rows, cols])
    out[rows, cols] = ref_amp * np.exp(1j * np.angle(src_win))
    return Spectrum(out, hermitian=False)


def fda_transfer(source: RasterImage, reference: RasterImage, cfg: FdaConfig) -> RasterImage:
    """Transfer the reference image's low-frequency style onto the source.

    Source and reference must already have equal dimensions and channel
    counts (the CLI offers reference resizing; this operation does not).
    Output is 8-bit when cfg.quantize, else the raw real-valued grid.
    """
    if (source.height, source.width, source.channels) != (
        reference.height,
        reference.width,
        reference.channels,
    ):
        raise ValueError(
            f"source and reference sizes differ: "
            f"{source.width}x{source.height}x{source.channels} vs "
            f"{reference.width}x{reference.height}x{reference.channels}"
        )
    swapped = swap_low_frequency(forward_spectrum(source), forward_spectrum(reference), cfg)
    result = inverse_spectrum(swapped)
    return from_real(result) if cfg.quantize else result
