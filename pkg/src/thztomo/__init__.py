"""2D terahertz tomography toolkit: refracted-ray forward simulation through
objects with known interfaces and algebraic reconstruction of the complex
refractive index, next to conventional ART and FBP baselines."""

from .geometry import (Arc, Corner, GeometryError, InterfaceSet, Segment,
                       SurfaceHit, corner_normal, load_interfaces, nearest_hit,
                       normal_at, save_interfaces)
from .model import (C0_MM_PER_S, GridSpec, MaterialField, ScanGeometry,
                    absorbance_from_tau, alpha_from_kappa, kappa_from_alpha,
                    path_difference_integrand, read_grid_channel,
                    write_grid_channel)
from .optics import (OpticsError, RefractionEvent, fresnel_reflectance,
                     probe_two_sided, snell)
from .raytrace import (CrossingEvent, GrazingIncidenceError, PartialRay,
                       RayPath, SparseRow, dump_path_csv, next_offset,
                       refract_direction, trace, traverse_pixels)
from .phantom import (Disk, Polygon, Rect, circle_with_rectangle,
                      footprint_mask, glued_blocks, interfaces_of,
                      load_phantom, rasterize, save_phantom)
from .forward import (Sinogram, add_noise, read_sinogram_csv, simulate,
                      write_sinogram_csv)
from .recon import (ReconConfig, ReconError, SystemMatrix,
                    build_system_matrix, conventional_art, filter_rays,
                    kaczmarz_sweep, modified_art)
from .fbp import FilterSpec, fbp_reconstruct, filter_kernel

__version__ = "0.1.0"
