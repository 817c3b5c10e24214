"""Finite-window estimators for mean equicontinuity, mean sensitivity, and
discrete spectrum, with Delone-set classification."""

from .errors import InvalidArgument, SamplingExhausted, UndefinedScore
from .windows import (CONTINUOUS, DISCRETE, DensityEstimate, GroupIndex,
                      Schedule, Window, density, enumerate_window,
                      geometric_schedule, syndetic_probe)
from .systems import (GOLDEN, Observable, SymbolicPoint, SystemHandle,
                      bernoulli_shift, builtin_fixtures, cylinder_indicator,
                      fixture_observables, make_system, orbit_series,
                      product_system, sturmian, substitution_subshift,
                      symbol_at, torus_character, torus_cosine,
                      torus_rotation)
from .pseudometrics import (EquivalenceReport, MetricEstimate,
                            equivalence_check, f_pseudometric,
                            orbit_pseudometric)
from .spectral import (AverageResult, FrequencyGrid, ProbeResult, SpectrumScan,
                       almost_periodicity_probe, birkhoff_average,
                       discrete_spectrum_score, fourier_mode, spectrum_scan)
from .classify import (ClassifyConfig, DichotomyReport, ExpansivityReport,
                       SamplerConfig, Verdict, dichotomy_report,
                       expansivity_fraction, inverse_invariance_check,
                       mean_equicontinuity_test, mean_sensitivity_test,
                       mu_mean_equicontinuity_test)
from .delone import (DeloneClassifyConfig, DeloneSet, DeloneVerdict,
                     DiffractionSpectrum, build_delone, classify_delone,
                     delone_check, diffraction, hull_system, load_points,
                     save_points)

__version__ = "0.1.0"
