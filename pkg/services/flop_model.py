"""Dominant-term operation counts of the three solvers, with unit constants.

  sd      H W K^2 C D M N_SD
  primal  D K^6 C^3 + D K^4 C^2 H W M
  dual    D H^3 W^3 M^3 + D K^2 C H^2 W^2 M^2
"""
from models.bench import ComplexityConfig

FORMULAS = {
    "sd": "O(H W K^2 C D M N_SD)",
    "primal": "O(D K^6 C^3 + D K^4 C^2 H W M)",
    "dual": "O(D H^3 W^3 M^3 + D K^2 C H^2 W^2 M^2)",
}

# CLI axis names -> ComplexityConfig fields
AXES = {
    "H": "height",
    "W": "width",
    "K": "kernel_size",
    "C": "in_channels",
    "D": "out_channels",
    "M": "samples",
    "N_SD": "iterations",
}


def sd_flops(height: int, width: int, kernel_size: int, in_channels: int,
             out_channels: int, samples: int, iterations: int) -> int:
    return height * width * kernel_size ** 2 * in_channels * out_channels * samples * iterations


def primal_flops(height: int, width: int, kernel_size: int, in_channels: int,
                 out_channels: int, samples: int) -> int:
    factor = out_channels * kernel_size ** 6 * in_channels ** 3
    normal = out_channels * kernel_size ** 4 * in_channels ** 2 * height * width * samples
    return factor + normal


def dual_flops(height: int, width: int, kernel_size: int, in_channels: int,
               out_channels: int, samples: int) -> int:
    rows = height * width * samples
    factor = out_channels * rows ** 3
    gram = out_channels * kernel_size ** 2 * in_channels * rows ** 2
    return factor + gram


def flop_estimate(config: ComplexityConfig) -> int:
    """Evaluate the complexity formula of config.method"""
    dims = dict(
        height=config.height,
        width=config.width,
        kernel_size=config.kernel_size,
        in_channels=config.in_channels,
        out_channels=config.out_channels,
        samples=config.samples,
    )
    if config.method == "sd":
        return sd_flops(iterations=config.iterations, **dims)
    if config.method == "primal":
        return primal_flops(**dims)
    return dual_flops(**dims)
