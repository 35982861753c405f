"""ringlab: a vortex-blob laboratory for the axisymmetric Euler equations
without swirl.

Simulates vortex-ring initial data with a regularized-particle method and
measures the functionals behind the ring's global dynamics: Kelvin-Hicks
translation, concentration of the weighted vorticity, the moving axial
barrier, and linear-in-time filamentation of fat rings.
"""

__version__ = "0.1.0"

from .kernels import (KernelConfig, KernelPoint, KernelValue,
                      biot_savart_kernel, eval_F, eval_F1, eval_F2)
from .cloud import (AssumptionConstants, AssumptionReport, Cloud, Particle,
                    PatchSpec, RadialProfile, generate_blob,
                    generate_filamentation_data, get_profile, load_cloud,
                    mirror_z, normalize, save_cloud, scale,
                    validate_assumptions)
from .velocity import (Tree, TreeNode, VelocitySample, build_tree,
                       velocity_direct, velocity_treecode)
from .integrator import (AxisCrossError, IntegratorConfig, RunResult, RunSink,
                         adaptive_dt, core_spacing, load_checkpoint, run, step)
from .diagnostics import (DiagnosticsConfig, DiagnosticsRecord, barycenter_z,
                          compute_record, diam_z, energy_E, energy_E1,
                          filament_thickness, find_center, fit_speed,
                          fits_from_records, kelvin_hicks_speed, moments,
                          pair_concentration, weighted_axial_moment)
from .presets import fat_ring, thin_ring

__all__ = [name for name in dir() if not name.startswith("_")]
