"""dendrite2d: finite-element simulation of dendritic electrodeposition.

A phase field distinguishes the metal electrode from the electrolyte and
evolves by anisotropic interface dynamics forced by electrode-reaction
kinetics; ion concentration and electric potential are coupled through
transport and a Poisson equation.  See README.md for usage.
"""

from .anisotropy import AnisotropyParams
from .config import Params, parse_config, serialize_config
from .fem import Field
from .materials import MaterialParams, compute_C1_C2
from .mesh import Mesh, build_rectangle
from .stepper import Model, SchemeParams, SeedParams, State, advance, initial_state

__version__ = "0.1.0"

__all__ = [
    "AnisotropyParams",
    "Field",
    "MaterialParams",
    "Mesh",
    "Model",
    "Params",
    "SchemeParams",
    "SeedParams",
    "State",
    "advance",
    "build_rectangle",
    "compute_C1_C2",
    "initial_state",
    "parse_config",
    "serialize_config",
    "__version__",
]
