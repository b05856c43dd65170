"""rnnlab: a small laboratory for training and dissecting vanilla RNNs.

Modules: linalg (dense kernel + spectral tools), model (network, losses,
checkpoints), grad (BPTT and its temporal decomposition), regularizer
(norm-preservation penalty), tasks (synthetic long-memory generators),
optim (clipped SGD loop), analysis (dynamics diagnostics), cli.
"""

__version__ = "0.1.0"

from .model import (Activation, IDENTITY, LossSpec, RnnParams, SIGMOID, TANH,
                    Trajectory, forward, init_params, load_checkpoint, readout,
                    save_checkpoint)
from .tasks import TaskSample, TaskSpec

__all__ = [
    "Activation", "IDENTITY", "LossSpec", "RnnParams", "SIGMOID", "TANH",
    "TaskSample", "TaskSpec", "Trajectory", "forward", "init_params",
    "load_checkpoint", "readout", "save_checkpoint", "__version__",
]
