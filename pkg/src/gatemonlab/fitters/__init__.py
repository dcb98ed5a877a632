from ._lsq import FitResult, levenberg_marquardt, predicted_stderr
from .resonator import (add_complex_noise, fit_circle, fit_notch_resonator, internal_q,
                        loaded_q, notch_s21, synthesize_notch_s21)
from .spectroscopy import (NotBracketedError, crossing_branches, fit_avoided_crossing,
                           fit_lorentzian_dip, fit_sqrt_power_law, lorentzian_dip)
from .timedomain import (FitWarning, decaying_sinusoid, exponential, fit_decaying_sinusoid,
                         fit_exponential)

__all__ = [
    "FitResult", "levenberg_marquardt", "predicted_stderr",
    "add_complex_noise", "fit_circle", "fit_notch_resonator", "internal_q", "loaded_q",
    "notch_s21", "synthesize_notch_s21",
    "NotBracketedError", "crossing_branches", "fit_avoided_crossing", "fit_lorentzian_dip",
    "fit_sqrt_power_law", "lorentzian_dip",
    "FitWarning", "decaying_sinusoid", "exponential", "fit_decaying_sinusoid",
    "fit_exponential",
]
