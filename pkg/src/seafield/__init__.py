"""Seasonality-aware traffic forecasting: conditional neural fields fused into
convolutional and graph forecasters."""
from .conv import InceptionForecaster, InceptionModule
from .data import (DatasetError, DegenerateInputError, NormStats, SplitSpec, TimeSeriesDataset,
                   WindowSet, denormalize, load_dataset, make_windows, normalize, save_dataset,
                   split, synthesize_seasonal)
from .evaluation import MetricsReport, evaluate, reconstruction_experiment, run_ablation
from .field import ConditionalNeuralField, NodeEmbedding, RFFEncoder
from .fusion import GatedFusion, align_global
from .graph import GraphForecaster, GraphLearner, MixHop
from .metrics import mae, mape, rmse, smape
from .models import ABLATION_VARIANTS, MODEL_KINDS, build_model
from .timefeatures import coords_for_window, extract_coords
from .training import TrainConfig, load_checkpoint, predict, save_checkpoint, train

__version__ = "0.1.0"
