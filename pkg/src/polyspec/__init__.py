"""Laplace spectra of planar polygons under deformation and constant-curvature metrics."""
from .assembly import DIRICHLET, NEUMANN, FormPair, assemble, assemble_pullback, rescale_metric
from .deform import (
    BranchDiagram,
    Certificate,
    DegeneracyReport,
    ProbeResult,
    certify_simple,
    locate_degeneracy,
    min_gap,
    random_gap_probe,
    random_polygon,
    sweep_kappa,
    sweep_t,
)
from .eigensolve import Spectrum, dense_eigenpairs, smallest_eigenpairs
from .errors import InvalidInput, NumericalFailure, PolyspecError
from .geometry import (
    DeformationPath,
    Polygon,
    TriMesh,
    delete_vertex_path,
    fem_mesh,
    linear_path,
    map_mesh,
    pl_family,
    rectangle,
    rectangle_mesh,
    rectangle_width_path,
    refine,
    triangulate_steiner,
    triangulate_structural,
    validate_polygon,
)
from .metric import MetricSpec, metric_tensor, volume_density
from .oracle import RectSpec, rect_branch, rect_crossing, rect_is_simple, rect_spectrum

__version__ = "0.1.0"
