"""Defocus-series simulation and pattern-matching tomography of sparse
atomic structures."""

from .errors import (CapacityError, ConfigurationError, ExhaustionError,
                     ParseError, PmtomoError, TruncationError)
from .evaluate import EvaluationReport, assign, estimate_strength
from .forward import (apply_aperture, apply_poisson, apply_thermal,
                      contrast_analytic, contrast_fourier, multislice_series,
                      simulate_series, spectral_paraboloid_check)
from .matcher import (MatchResult, SearchPlan, active_backend, find_atoms,
                      refine_subvoxel, similarity, similarity_map)
from .merge import (filter_duplicates, merge_orientations, rotate_back,
                    truncate_by_similarity)
from .model import (AtomSpecies, DefocusSeries, Grid3, ImagingConfig,
                    SpeciesTable, Structure, aperture_cutoff, convert_kind,
                    derive_wavelength, make_grid)
from .structure import Orientation, center_in_cube, parse_xyz, rotate, write_xyz
from .template import Template, auto_truncate, generate_template, make_template

__version__ = "0.1.0"
