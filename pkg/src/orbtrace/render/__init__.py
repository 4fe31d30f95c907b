from .film import Film, write_image
from .integrator import InvalidExperimentError, RenderError, birefringent_render_pair, render
from .settings import RenderSettings

__all__ = ["Film", "InvalidExperimentError", "RenderError", "RenderSettings", "birefringent_render_pair",
           "render", "write_image"]
