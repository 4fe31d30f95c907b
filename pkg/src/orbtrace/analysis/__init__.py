from .continuity import ContinuityReport, LineContinuity, measure_line_continuity
from .convergence import ConvergenceFit, NoConvergenceError, fit_fold_convergence, fold_edge_samples
from .image import disk_mask, highlight_mask, image_rmse, interior_mask, luminance
from .inversion import InversionResult, detect_inversion

__all__ = ["ContinuityReport", "ConvergenceFit", "InversionResult", "LineContinuity",
           "NoConvergenceError", "detect_inversion", "disk_mask", "fit_fold_convergence",
           "fold_edge_samples", "highlight_mask", "image_rmse", "interior_mask", "luminance",
           "measure_line_continuity"]
