from mhd_shred.shred.model import (
    Prediction,
    ShredArchitecture,
    ShredModel,
    backward,
    forward,
    init_model,
    load_model,
    loss,
    lstm_forward,
    predict,
    predict_batch,
    save_model,
    sdn_forward,
)
from mhd_shred.shred.training import AdamOptimizer, OptimizerState, TrainingHistory, evaluate_loss, train
