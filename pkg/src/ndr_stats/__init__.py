"""
ndr_stats
=========

Distribution, moments and Monte-Carlo validation of the normalised
dissimilarity ratio D = |X - Y| / (X + Y) (the Fujii index) for two
correlated Gamma intensities sharing shape ``k`` and scale ``sigma``.

Modules
-------
specfun
    log-Gamma, Beta, modified Bessel I, Gauss 2F1.
dist
    closed-form densities and moments.
sampling
    seeded, stream-parallel generation of the speckle pipeline.
validate
    histogram fits, moment tables and figure data.
cli
    ``ndr-stats`` command line.
"""
__version__ = "0.1.0"

from .dist import (
    FieldParams,
    Formulation,
    GammaPairParams,
    gamma_marginal_pdf,
    intensity_correlation,
    joint_pdf_exponential,
    joint_pdf_gamma,
    ndr_mean_band,
    ndr_moment,
    ndr_moments_all,
    ndr_pdf,
    ndr_transform_pdf,
    ratio_pdf,
)
from .sampling import SeedSpec, sample_batch
from .specfun import ConvergenceError, DomainError, SeriesControl
