"""Adam training loop with early stopping and best-weights restore."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from mhd_shred.errors import ConfigurationError, TrainingError
from mhd_shred.dataset.preprocessing import LaggedBatch
from mhd_shred.schemas import TrainConfig
from mhd_shred.shred.model import ShredModel, backward, loss, predict_batch


@dataclass
class OptimizerState:
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]
    t: int = 0


class AdamOptimizer:
    """Adaptive moment estimation over a dict of parameter tensors"""

    def __init__(self, params: Dict[str, np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.state = OptimizerState(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        s = self.state
        s.t += 1
        c1 = 1.0 - self.beta1 ** s.t
        c2 = 1.0 - self.beta2 ** s.t
        for k, g in grads.items():
            s.m[k] = self.beta1 * s.m[k] + (1.0 - self.beta1) * g
            s.v[k] = self.beta2 * s.v[k] + (1.0 - self.beta2) * g * g
            m_hat = s.m[k] / c1
            v_hat = s.v[k] / c2
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


@dataclass
class TrainingHistory:
    epochs: List[int] = field(default_factory=list)
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"epoch": self.epochs, "train_loss": self.train_loss, "val_loss": self.val_loss})

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path


def evaluate_loss(model: ShredModel, batch: LaggedBatch) -> float:
    return loss(predict_batch(model, batch.inputs), batch.targets)


def _dropout_masks(model: ShredModel, n: int, rng: np.random.Generator) -> Optional[List[np.ndarray]]:
    rate = model.arch.dropout
    if rate <= 0.0:
        return None
    keep = 1.0 - rate
    return [(rng.random((n, w)) < keep) / keep for w in model.arch.decoder_widths]


def train(model: ShredModel, train_batch: LaggedBatch, val_batch: LaggedBatch, config: TrainConfig,
          verbose: bool = False, debug: bool = False,
          on_epoch: Optional[Callable[[int, float, float], None]] = None):
    """
    Mini-batch Adam with per-epoch shuffling and early stopping on the
    validation loss. The returned model carries the weights of the best
    validation epoch.
    """
    if len(train_batch) == 0 or len(val_batch) == 0:
        raise ConfigurationError("Training needs non-empty train and validation batches")
    model = model.copy()
    rng = np.random.default_rng(config.seed)
    optimizer = AdamOptimizer(model.params, lr=config.learning_rate)
    history = TrainingHistory()
    best_params = {k: v.copy() for k, v in model.params.items()}
    best_val = np.inf
    waited = 0
    n = len(train_batch)

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        grad_norm = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            masks = _dropout_masks(model, idx.size, rng)
            value, grads = backward(train_batch.inputs[idx], train_batch.targets[idx], model, masks)
            if not np.isfinite(value):
                raise TrainingError("Training loss became non-finite", epoch)
            optimizer.step(model.params, grads)
            total += value * idx.size
            if debug:
                grad_norm = max(grad_norm, float(np.sqrt(sum(np.sum(g * g) for g in grads.values()))))
        train_loss = total / n
        val_loss = evaluate_loss(model, val_batch)
        if not np.isfinite(val_loss):
            raise TrainingError("Validation loss became non-finite", epoch)

        history.epochs.append(epoch)
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        if debug:
            print(f"[DEBUG] epoch {epoch}: train={train_loss:.6e} val={val_loss:.6e} max|grad|={grad_norm:.3e}")
        if on_epoch is not None:
            on_epoch(epoch, train_loss, val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_params = {k: v.copy() for k, v in model.params.items()}
            history.best_epoch = epoch
            waited = 0
        else:
            waited += 1
            if waited >= config.patience:
                history.stopped_early = True
                if verbose:
                    print(f"⏹️  [SHRED] Early stop at epoch {epoch}; best validation loss {best_val:.4e} "
                          f"at epoch {history.best_epoch}")
                break

    model.params = best_params
    if verbose:
        print(f"✅ [SHRED] Trained {len(history.epochs)} epochs, best validation loss {best_val:.4e}")
    return model, history
