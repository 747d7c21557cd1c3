from polspell.neural.io import external_layers_load, load_model, save_model
from polspell.neural.lstm import LstmCell, lstm_step
from polspell.neural.model import (
    HookShape,
    Seq2SeqModel,
    batch_loss,
    correct_token,
    decode_greedy,
    encode,
    hook_state,
    step_distribution,
)
from polspell.neural.train import Adam, TrainConfig, TrainingError, gradient_check, train
from polspell.neural.vocab import CharVocab

__all__ = [
    "Adam",
    "CharVocab",
    "HookShape",
    "LstmCell",
    "Seq2SeqModel",
    "TrainConfig",
    "TrainingError",
    "batch_loss",
    "correct_token",
    "decode_greedy",
    "encode",
    "external_layers_load",
    "gradient_check",
    "hook_state",
    "load_model",
    "lstm_step",
    "save_model",
    "step_distribution",
    "train",
]
