"""Computational convex geometry of tensorial bodies.

Symmetric convex bodies are represented by gauge, support and polar
oracles (``bodies``).  On top of them the package builds projective,
injective and Hilbertian tensor products (``products``), Löwner
ellipsoids (``lowner``), retractions, homotopies and a tensoriality
certificate (``calculus``), Hausdorff and containment metrics
(``convex``) and Banach-Mazur estimates (``bm``).
"""
from .bm import BMResult, bm_estimate, containment_factor, orbit_invariance_check
from .bodies import (Body, ConvexHullUnion, Ellipsoid, HPolytope, Intersection, LinearImage,
                     MinkowskiSum, Polar, Polytope, ProjectiveProduct, SliceBody, VPolytope,
                     numeric_tolerance)
from .calculus import (Certificate, certify_tensorial, conv_tensor, crossnorm_error, ell_tensor,
                       eta_retract, extract_factors, homotopy_eval, homotopy_F, homotopy_G,
                       homotopy_W, lift_error_bound, lift_eval, lowner_factors, polygonal_path,
                       shared_factor_sum, slice_normalize)
from .convex import (conv_union, convert_rep, gauge, hausdorff, hausdorff_lower_bound,
                     inscribed_polygon, intersect, linear_image, minkowski_combination,
                     minkowski_sum, nu, polar, provably_contained, support)
from .errors import (ComplexityError, DimensionError, NumericalError, PreconditionError,
                     TensorBodiesError)
from .factories import lp_ball, random_polytope, random_tensorial
from .io import BodyFileError, load_body, save_body
from .linalg import FactorMap, TensorShape, kron_vec, random_factor_map
from .lowner import lowner, mvee, normalize_lowner, xi
from .products import (euclidean_product, hilbert_product, injective_product, projective_product,
                       tensor_product)

__version__ = "0.1.0"
