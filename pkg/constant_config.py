import os.path

from dotenv import load_dotenv

# load env variables from .env if any
load_dotenv()

# Full local path of the directory where all files created by the command line front end are saved
BASE_DATA_FOLDER_PATH = os.environ.get("TENSORAY_DATA_FOLDER", os.path.join(os.getcwd(), "TENSORAY_DATA"))

# Full local path of the folder where attenuation packs (integrating factor tables) are cached as pickle files
ATTENUATION_PACK_CACHE_FOLDER_PATH = os.path.join(BASE_DATA_FOLDER_PATH, "ATTENUATION_PACKS")

# Maximum number of worker threads used by the grid sweeps (fan assembly, interior evaluations)
TENSORAY_THREADS = int(os.environ.get("TENSORAY_THREADS", str(os.cpu_count() or 1)))

# Radius of the disk
DEFAULT_RADIUS = 1.0
# Number of uniform boundary nodes (even, at least 8)
DEFAULT_BOUNDARY_NODES = 256
# Number of uniform direction nodes (even, at least 2N+2)
DEFAULT_ANGLE_NODES = 256
# Angular mode truncation
DEFAULT_MODE_TRUNCATION = 24
# Spacing of the interior Cartesian grid
DEFAULT_GRID_STEP = 0.02
# Distance from the boundary below which the Bukhgeim-Cauchy integrals are not evaluated (fraction of the radius)
DEFAULT_MARGIN_FRACTION = 0.02
# Ray quadrature step (fraction of the radius)
DEFAULT_RAY_STEP_FRACTION = 1e-3
# Width of the band of directions |theta . n| <= eps declared tangent
DEFAULT_TANGENCY_EPS = 1e-9
# Radon / beam table spacing (fraction of the radius)
DEFAULT_RADON_STEP_FRACTION = 1.0 / 256
# Zero padding factor of the classical Hilbert transform
DEFAULT_HILBERT_PADDING = 4
# Width of the smooth cutoff extending the attenuation outside the disk (fraction of the radius)
DEFAULT_CUTOFF_FRACTION = 0.2

# Tolerances (empirical, see DESIGN.md)
DEFAULT_TOL_RANGE = 5e-3
DEFAULT_TOL_COMPAT = 5e-3
DEFAULT_TOL_CONV = 1e-8
DEFAULT_TOL_NEG = 1e-6
DEFAULT_TOL_DISCARDED_MASS = 1e-4
DEFAULT_MIN_ATTENUATION = 1e-6
DEFAULT_TOL_ROUNDTRIP_FREE = 2e-2
DEFAULT_TOL_ROUNDTRIP_ATTENUATED = 5e-2
# Identity suite of the integrating factor
DEFAULT_TOL_TRANSPORT = 1e-3
DEFAULT_TOL_PRODUCT = 1e-10
DEFAULT_TOL_RECURSION = 1e-3
