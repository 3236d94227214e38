"""Loss, analytic gradients, Adam and the training loop."""

from qmwf.training.backward import (
    Gradients,
    SentencePass,
    Triplet,
    backward,
    backward_pass,
    batch_backward,
    batch_loss,
    forward_pass,
)
from qmwf.training.gradcheck import (
    check_batch_gradients,
    check_triplet_gradients,
    numerical_gradient,
    relative_error,
)
from qmwf.training.hyper import HyperParams
from qmwf.training.loss import hinge_grad, pairwise_hinge_loss
from qmwf.training.optimizer import AdamState, adam_step
from qmwf.training.sweep import SweepRecord, SweepResult, sweep
from qmwf.training.trainer import EpochRecord, TrainResult, build_triplets, evaluate_dev, train

__all__ = [
    "Gradients",
    "SentencePass",
    "Triplet",
    "backward",
    "backward_pass",
    "batch_backward",
    "batch_loss",
    "forward_pass",
    "check_batch_gradients",
    "check_triplet_gradients",
    "numerical_gradient",
    "relative_error",
    "HyperParams",
    "hinge_grad",
    "pairwise_hinge_loss",
    "AdamState",
    "adam_step",
    "SweepRecord",
    "SweepResult",
    "sweep",
    "EpochRecord",
    "TrainResult",
    "build_triplets",
    "evaluate_dev",
    "train",
]
