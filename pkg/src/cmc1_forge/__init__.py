"""Numerical construction of CMC-1 surfaces in hyperbolic 3-space from spherical triangles."""

from .lin import INF, IntegrityError
from .monodromy import (EdgeMonodromies, KillResult, classify_representation, compute_edge_monodromies,
                        irreducibility_certificate, kill_period, verify_single_valuedness)
from .recipes import (SurfaceRecipe, check_theorem_hypotheses, classify_ends, dihedral_recipe,
                      recipe_by_name, table_rows, tetrahedral_recipe, torus_recipe)
from .surface import (build_fundamental_patch, build_mesh, expand_by_reflections, export_mesh,
                      gauss_relation_check, total_curvature)
from .triangle import TriangleAngles, build_developing_map, reflection_matrices, validate_triangle

__version__ = "0.1.0"
