"""Training E, W and the decoder end-to-end through the unrolled learner, and the
online inference loop that uses them.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from models.learner import TrainingSample
from models.memory import MemoryConfig
from models.toy import IouStats, ToySequence, ToyTrainConfig
from models.tracking import BoxEstimate, SearchRegion
from .errors import EmptyTargetError, TrainingError
from .learner import solve_sd
from .learner_grad import backward, solve_sd_traced
from .sample_memory import SampleMemory, should_update
from .target_estimator import mask_to_box, search_region
from .tensor_ops import conv2d, conv2d_transpose
from .toy_data import downsample_sequence, generate_sequence, iou
from .toy_modules import ToyModules, bce_with_logits, grad_norm, sigmoid

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["step", "train_loss", "test_iou", "grad_norm_E", "grad_norm_W"]
LABEL_PARAMS = ("label_kernel", "label_bias")
WEIGHT_PARAMS = ("weight_kernel", "weight_bias")


@dataclass
class InferenceResult:
    masks: List[np.ndarray]
    ious: List[float]
    boxes: List[BoxEstimate]
    regions: List[Optional[SearchRegion]]
    memory: SampleMemory

    @property
    def mean_iou(self) -> float:
        return float(np.mean(self.ious)) if self.ious else 1.0


@dataclass
class _Unrolled:
    """Forward state of one training sequence, kept for the backward pass"""
    loss: float
    label_inputs: List[np.ndarray] = field(default_factory=list)
    label_pre: List[Optional[np.ndarray]] = field(default_factory=list)
    tapes: list = field(default_factory=list)
    tape_frames: List[List[int]] = field(default_factory=list)
    caches: list = field(default_factory=list)
    logit_grads: List[np.ndarray] = field(default_factory=list)


def _sample(modules: ToyModules, features: np.ndarray, mask: np.ndarray) -> Tuple[TrainingSample, Optional[np.ndarray]]:
    labels, pre = modules.labels(mask)
    return TrainingSample(features, labels, modules.importance(mask)), pre


def _next_box(prediction: np.ndarray, box: BoxEstimate, frame: int) -> BoxEstimate:
    prev_size = box.size if min(box.size) > 0 else None
    try:
        return mask_to_box(prediction > 0.5, prev_size=prev_size)
    except EmptyTargetError:
        logger.warning(f"Empty predicted mask at frame {frame}, keeping the previous box")
        return box


def run_inference(modules: ToyModules, sequence: ToySequence, memory_config: Optional[MemoryConfig] = None,
                  lam: float = 0.05, kernel_size: int = 3) -> InferenceResult:
    """Track the target through a sequence given only its first-frame mask"""
    config = memory_config or MemoryConfig()
    lam = modules.lam(lam)
    memory = SampleMemory(config)
    image_size = sequence.image_size

    first, _ = _sample(modules, sequence.features[0], sequence.masks[0])
    memory.insert(0, first)
    _, budget = should_update(config, 0)
    problem = memory.problem(lam, kernel_size, 0)
    tau, _ = solve_sd(problem, problem.zeros_filter(), budget)

    box = mask_to_box(sequence.masks[0])
    masks = [sequence.masks[0]]
    boxes = [box]
    regions = [search_region(box, image_size, out_resolution=image_size) if min(box.size) > 0 else None]
    ious: List[float] = []
    for frame in range(1, len(sequence)):
        features = sequence.features[frame]
        logits, _ = modules.decode(features, conv2d(features, tau))
        prediction = sigmoid(logits)
        masks.append(prediction)
        ious.append(iou(prediction, sequence.masks[frame]))

        box = _next_box(prediction, box, frame)
        boxes.append(box)
        regions.append(search_region(box, image_size, out_resolution=image_size) if min(box.size) > 0 else None)

        sample, _ = _sample(modules, features, prediction)
        memory.insert(frame, sample)
        update, budget = should_update(config, frame)
        if update and budget > 0:
            tau, _ = solve_sd(memory.problem(lam, kernel_size, frame), tau, budget)

    logger.debug(f"Inference over {len(sequence)} frames, mean IoU {np.mean(ious) if ious else 1.0:.3f}")
    return InferenceResult(masks=masks, ious=ious, boxes=boxes, regions=regions, memory=memory)


def evaluate_toy(modules: ToyModules, sequences: Sequence[ToySequence],
                 memory_config: Optional[MemoryConfig] = None, lam: float = 0.05,
                 kernel_size: int = 3) -> IouStats:
    """Mean IoU over frames 1.. of each sequence, aggregated across sequences"""
    per_sequence = [run_inference(modules, seq, memory_config, lam, kernel_size).mean_iou for seq in sequences]
    values = np.asarray(per_sequence)
    return IouStats(
        per_sequence=per_sequence,
        mean=float(values.mean()),
        median=float(np.median(values)),
        minimum=float(values.min()),
    )


def _unroll(modules: ToyModules, sequence: ToySequence, config: ToyTrainConfig, lam: float) -> _Unrolled:
    memory = SampleMemory(MemoryConfig(k_max=len(sequence), eta=config.eta, n_init=config.n_init,
                                       n_update=config.n_update))
    state = _Unrolled(loss=0.0)
    scale = 1.0 / (len(sequence) - 1)

    first, pre = _sample(modules, sequence.features[0], sequence.masks[0])
    state.label_inputs.append(sequence.masks[0])
    state.label_pre.append(pre)
    memory.insert(0, first)
    problem = memory.problem(lam, config.kernel_size, 0)
    tau, tape = solve_sd_traced(problem, problem.zeros_filter(), config.n_init)
    state.tapes.append(tape)
    state.tape_frames.append(memory.frame_indices)

    for frame in range(1, len(sequence)):
        features = sequence.features[frame]
        logits, cache = modules.decode(features, conv2d(features, tau))
        loss, logits_bar = bce_with_logits(logits, sequence.masks[frame])
        state.loss += scale * loss
        state.caches.append(cache)
        state.logit_grads.append(scale * logits_bar)
        if frame == len(sequence) - 1:
            break
        # pseudo-label is treated as a constant
        pseudo = sigmoid(logits)
        sample, pre = _sample(modules, features, pseudo)
        state.label_inputs.append(pseudo)
        state.label_pre.append(pre)
        memory.insert(frame, sample)
        tau, tape = solve_sd_traced(memory.problem(lam, config.kernel_size, frame), tau, config.n_update)
        state.tapes.append(tape)
        state.tape_frames.append(memory.frame_indices)
    return state


def _backprop(modules: ToyModules, state: _Unrolled, kernel_size: int, lam: float) -> Dict[str, np.ndarray]:
    grads = modules.zero_grads()
    tau_bars = [np.zeros_like(tape.tau) for tape in state.tapes]
    for position, (cache, logits_bar) in enumerate(zip(state.caches, state.logit_grads)):
        encoding_bar = modules.decode_backward(cache, logits_bar, grads)
        tau_bars[position] += conv2d_transpose(encoding_bar, cache.features, kernel_size)

    frames = len(state.label_inputs)
    label_bars = [None] * frames
    importance_bars = [None] * frames
    lam_bar = 0.0
    for k in reversed(range(len(state.tapes))):
        learner_grads = backward(state.tapes[k], tau_bars[k])
        lam_bar += learner_grads.lam
        for position, frame in enumerate(state.tape_frames[k]):
            e_bar = learner_grads.labels[position]
            w_bar = learner_grads.importance[position]
            label_bars[frame] = e_bar if label_bars[frame] is None else label_bars[frame] + e_bar
            importance_bars[frame] = w_bar if importance_bars[frame] is None else importance_bars[frame] + w_bar
        if k > 0:
            tau_bars[k - 1] += learner_grads.tau0

    for frame in range(frames):
        if label_bars[frame] is None:
            continue
        modules.labels_backward(state.label_inputs[frame], state.label_pre[frame], label_bars[frame], grads)
        modules.importance_backward(state.label_inputs[frame], importance_bars[frame], grads)
    if modules.learns_lambda:
        grads["log_lambda"] += lam_bar * lam
    return grads


def _clip(grads: Dict[str, np.ndarray], max_norm: Optional[float]) -> None:
    if max_norm is None:
        return
    total = grad_norm(grads, *grads.keys())
    if total > max_norm:
        for value in grads.values():
            value *= max_norm / total


def training_sequence(config: ToyTrainConfig, seed: int, length: Optional[int] = None) -> ToySequence:
    sequence = generate_sequence(seed, config.height, config.width, config.channels,
                                 length or config.sequence_length)
    return downsample_sequence(sequence, config.stride)


def held_out_sequences(config: ToyTrainConfig) -> List[ToySequence]:
    seeds = np.random.default_rng([config.seed, 1]).integers(0, 2 ** 31, size=config.eval_sequences)
    return [training_sequence(config, int(s), config.eval_length) for s in seeds]


def train_toy(config: ToyTrainConfig) -> Tuple[ToyModules, pd.DataFrame]:
    """Train E, W and the decoder on random synthetic sequences.

    Returns the trained modules and a per-step metrics frame; test_iou is
    filled on evaluation steps only.
    """
    modules = ToyModules.initialize(config.out_channels, config.channels, config.kernel_size, seed=config.seed,
                                    fixed_labels=config.fixed_labels,
                                    lam=config.lam if config.learn_lambda else None,
                                    learn_weights=config.learn_weights)
    rows: List[dict] = []
    if config.steps == 0:
        return modules, pd.DataFrame(rows, columns=METRIC_COLUMNS)

    rng = np.random.default_rng(config.seed)
    test_sequences = held_out_sequences(config)
    eval_memory = MemoryConfig(eta=config.eta, n_init=config.n_init, n_update=config.n_update)
    velocity = {name: np.zeros_like(value) for name, value in modules.params.items()}
    logger.info(f"Training toy model: D={config.out_channels}, fixed_labels={config.fixed_labels}, "
                f"learn_weights={modules.learns_weights}, {config.steps} steps")
    try:
        for step in range(config.steps):
            sequence = training_sequence(config, int(rng.integers(0, 2 ** 31)))
            lam = modules.lam(config.lam)
            state = _unroll(modules, sequence, config, lam)
            if not math.isfinite(state.loss):
                raise TrainingError(f"training loss became {state.loss} at step {step}", step=step)
            grads = _backprop(modules, state, config.kernel_size, lam)
            row = {
                "step": step,
                "train_loss": state.loss,
                "test_iou": float("nan"),
                "grad_norm_E": grad_norm(grads, *LABEL_PARAMS),
                "grad_norm_W": grad_norm(grads, *WEIGHT_PARAMS),
            }
            _clip(grads, config.grad_clip)
            for name, value in modules.params.items():
                velocity[name] = config.momentum * velocity[name] + grads[name]
                value -= config.learning_rate * velocity[name]
                if not np.all(np.isfinite(value)):
                    raise TrainingError(f"parameter {name} became non-finite at step {step}", step=step)

            last = step == config.steps - 1
            if last or (config.eval_every and (step + 1) % config.eval_every == 0):
                stats = evaluate_toy(modules, test_sequences, eval_memory, config.lam, config.kernel_size)
                row["test_iou"] = stats.mean
                logger.info(f"step {step + 1}/{config.steps}: train loss {state.loss:.4f}, test IoU {stats.mean:.3f}")
            rows.append(row)
    except Exception as e:
        logger.error(f"Toy training failed: {str(e)}")
        raise
    return modules, pd.DataFrame(rows, columns=METRIC_COLUMNS)
