"""Superradiant photonic Otto engine: cavity ignition by coherent atomic clusters."""

__version__ = "0.1.0"

from .errors import (ConfigError, FitError, InsufficientDataError, IntegrityError,  # noqa: E402
                     InvalidStateError, RepresentationError, ResourceLimitError, SrottoError,
                     StiffnessError, UndefinedTemperatureError)
from .hilbert import (DensityMatrix, HilbertSpace, RotationParams, ThermalParams,  # noqa: E402
                      displaced_thermal_state, fidelity, partial_trace, rotate_cluster, tensor,
                      thermal_state)
from .lindblad import (DissipatorSpec, IntegratorConfig, LindbladGenerator,  # noqa: E402
                       SystemModel, build_hamiltonian, evolve, lindblad_rhs)
from .protocol import (ProtocolConfig, decoherence_sweep, run_ignition,  # noqa: E402
                       steady_state_stats)
from .otto import (OttoCycleSpec, effective_temperature, otto_quantities,  # noqa: E402
                   work_curve, work_from_photon_numbers)
from .fitting import (fit_quadratic_scaling, fit_thermal_coherent_state,  # noqa: E402
                      micromaser_intensity)
from .cost import CostParams, total_cost_report  # noqa: E402
