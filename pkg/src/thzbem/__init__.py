"""2D boundary-element Helmholtz solver with a circulant + skeleton +
Woodbury fast direct solver, for THz scattering and skin dosimetry."""

from .analytic import dielectric_cylinder_fields, pec_cylinder_current
from .fds import (CirculantOperator, ScenarioSolver, Skeleton, SolveResult,
                  WoodburyInverse, adaptive_skeleton, circulant_counterpart,
                  circulant_solve, solve_scenario, woodbury_apply)
from .fields import FieldGrid, field_map_skin, radiate
from .formulations import (BlockSystem, CalderonCfie, PlaneWave,
                           assemble_cfie, assemble_cfie_preconditioned,
                           assemble_pmchwt, assemble_rhs, build_block_system,
                           complexified_wavenumber)
from .geometry import (BoundaryMesh, CurveSpec, average_curvature_radius,
                       build_mesh, elements_for_wavenumber, hat_basis_eval,
                       load_mesh, save_mesh)
from .media import (DebyeParams, Medium, SKIN_DEBYE, air, conductor_skin_depth,
                    debye_permittivity, from_permittivity, pec,
                    penetration_length, skin_debye)
from .operators import (OperatorKind, OperatorMatrix, assemble, assemble_many,
                        dump_matrix, load_matrix, matvec)

__version__ = "0.1.0"
