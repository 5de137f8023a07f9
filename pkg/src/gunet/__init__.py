"""Guided-filter UNet upsampling workbench.

Implements guided feature upsampling (a fast guided image filter applied
to encoder/decoder feature stacks), four UNet variants built on it or on
conventional upsampling layers, a Fourier-domain bias analysis for the
outputs of freshly initialized networks, and a toy inverse-tone-mapping
training demo. See the CLI (``gunet --help``) for the workbench surface.
"""

from .backends import available_backends, backend_name
from .errors import GunetError, ImageFormatError, NumericsError, ShapeError

__version__ = "0.1.0"


def _api():
    # deferred imports keep `import gunet` light while exposing the surface
    from .guided_filter import GifParams, gif_coefficients, guided_filter, guided_upsample
    from .rng import Rng
    from .spectral import SpectrumReport, model_average_analysis, spectrum_magnitude
    from .unet import FusionKind, Network, NetworkSpec, build_network, forward, param_count
    return locals()


globals().update(_api())

__all__ = [
    "GunetError",
    "ImageFormatError",
    "NumericsError",
    "ShapeError",
    "available_backends",
    "backend_name",
    "GifParams",
    "gif_coefficients",
    "guided_filter",
    "guided_upsample",
    "Rng",
    "SpectrumReport",
    "model_average_analysis",
    "spectrum_magnitude",
    "FusionKind",
    "Network",
    "NetworkSpec",
    "build_network",
    "forward",
    "param_count",
    "__version__",
]
