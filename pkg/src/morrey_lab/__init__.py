"""Numerical laboratory for Morrey norms, vanishing properties, approximation and weighted embeddings."""

__version__ = "0.1.0"

from .approximation import (  # noqa: E402
    ConvolvedField,
    KernelDescriptor,
    converges,
    convolve,
    invariance_experiment,
    mollifier_convergence,
    truncation_convergence,
    young_check,
    zorko_modulus,
)
from .catalog import (  # noqa: E402
    BallIndicator,
    BallSumPhi,
    Constant,
    Gaussian,
    PiecewiseRadialPower,
    RadialPower,
    Scaled,
    SmoothBump,
    Sum,
    Tail,
    Translated,
    Zero,
    ball_truncate,
    evaluate,
    from_dict,
)
from .core import (  # noqa: E402
    MorreyParams,
    SearchConfig,
    ball_average,
    holder_embedding_params,
    morrey_norm,
    scaling_check,
    uniform_lebesgue_norm,
)
from .quadrature import QuadratureConfig  # noqa: E402
from .vanishing import vanishing_profiles  # noqa: E402
from .weighted import PlainPower, PowerLog, PowerWeight, embedding_scan, weighted_norm  # noqa: E402
