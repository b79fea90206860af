from ._noisecodec import (
    Model,
    evaluate_rd,
    ms_ssim,
    ms_ssim_db,
    psnr,
    read_image,
    synth_noise,
    texture_corpus,
    write_image,
)

__all__ = [
    "Model",
    "evaluate_rd",
    "ms_ssim",
    "ms_ssim_db",
    "psnr",
    "read_image",
    "synth_noise",
    "texture_corpus",
    "write_image",
]
