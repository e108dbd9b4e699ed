from baxtertq.errors import (BaxterError, ConfigError, ContourPinchError, CrossCheckError, DegeneracyError,
                             DomainError, NonConvergenceError, PoleProximityError)
from baxtertq.model import ModelKind, ModelSpec, RootFamily, RootSet
from baxtertq.specfun import ModularPair, ThetaProductConfig
