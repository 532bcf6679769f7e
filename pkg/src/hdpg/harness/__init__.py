"""Training loop, push benchmark, comparisons, plot data and the CLI."""
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, restore_agent, save_checkpoint
from .compare import Comparison, PairStats, compare, final_window_mean, parse_seeds, sign_test
from .config import ConfigError, RunConfig, load_config, parse_config
from .evaluate import EvalReport, evaluate_push, run_trial, standing_actor_checkpoint
from .plot import emit_plotdata, trailing_mean
from .seeding import STREAMS, child_rng
from .train import TrainingDiverged, TrainResult, read_metrics, train
