"""Stochastic quantum hydrodynamics toolkit."""
__version__ = "0.1.0"

from .errors import ConfigError, NumericalAbort
from .fields import (ComplexField, Grid1D, PhysicalParams, RealField, normalize, polar_from_wave,
                     wave_from_polar)
from .qpotential import QuantumPotentialResult, compute_vqu, quantum_energy
from .noise import NoiseSpec, lambda_c, sample_noise
from .dynamics import (EvolutionConfig, TrajectoryBundle, bohmian_trajectories, continuity_residual,
                       evolve_deterministic, evolve_stochastic)
from .oscillator import HOSpec, energy_expectation, hermite, ho_eigenstate, verify_vqu_identity
from .nonlocality import (INFINITE, PseudoGaussianSpec, TailModel, Typology, case_d_asymptotics,
                          classify_typology, lambda_q, pseudo_gaussian)
from .regimes import (Regime, RegimeReport, critical_temperature, force_vs_fluctuation, regime_report,
                      uncertainty_products)

__all__ = [name for name in dir() if not name.startswith("_")]
