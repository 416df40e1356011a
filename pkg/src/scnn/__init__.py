"""Linear two-layer sparse coding network with baselines and experiment runners."""

from .model import (Hyperparams, NumericalError, ScnnModel, TrainReport, decode, encode,
                    energy, fit, learning_rates, relearn_codes, soft_threshold)

__all__ = ["Hyperparams", "NumericalError", "ScnnModel", "TrainReport", "decode", "encode",
           "energy", "fit", "learning_rates", "relearn_codes", "soft_threshold"]
__version__ = "0.1.0"
