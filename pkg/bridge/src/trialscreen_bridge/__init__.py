"""HTTP bridge serving transformer backends for the screening pipeline."""

from .errors import BridgeError
from .hashing import model_id_for
from .schemas import Example, Hyperparams, PredictRequest, TrainRequest
from .service import create_app
from .store import ModelStore
from .toybert import build_toy_checkpoint

__version__ = "0.1.0"

__all__ = [
    "BridgeError",
    "Example",
    "Hyperparams",
    "ModelStore",
    "PredictRequest",
    "TrainRequest",
    "build_toy_checkpoint",
    "create_app",
    "model_id_for",
    "__version__",
]
