"""Poly-INR coordinate-based image generator."""

from ._core import (
    ArgumentError,
    BadMagicError,
    Error,
    FormatError,
    Generator,
    GeneratorConfig,
    IoError,
    NumericError,
    RecordMismatchError,
    StateError,
    TrainingError,
    TruncationError,
    UnsupportedVersionError,
    affine_from_latent,
    affine_from_seed,
    count_params,
    extrapolate,
    fit_single_image,
    heatmap,
    init_generator,
    interpolate,
    invert,
    load_affine,
    psnr,
    random_latent,
    read_png,
    sample,
    save_affine,
    ssim,
    style_mix,
    synthesize,
    upsample,
    write_png,
)

__all__ = [name for name in dir() if not name.startswith("_")]
