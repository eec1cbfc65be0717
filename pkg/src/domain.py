"""Module which encapsulates the core domain objects.

"""
import dataclasses
import enum
import typing

import numpy as np

from src.model.exceptions import ModelValidationError
from src.model.exceptions import ShapeError


class ActivationKind(enum.IntEnum):
    """Enumeration of per-neuron activation kinds.

    """
    RELU = 0
    GRAFTED_LINEAR = 1
    IDENTITY = 2

    @staticmethod
    def from_name(name: str) -> 'ActivationKind':
        """Find an enumeration member by its name.

        Parameters
        ----------
        name : str
            The name to search for.

        Raises
        ------
        NameError
            If no enumeration member can be found for the given name.

        """
        name_upper = name.upper()
        for kind in ActivationKind:
            if name_upper == kind.name:
                return kind
        raise NameError(name)


@dataclasses.dataclass(frozen=True)
class Activation:
    """Activation of a single neuron. Slope and intercept are only
    meaningful for grafted neurons.

    """
    kind: ActivationKind
    slope: float = 0.0
    intercept: float = 0.0


class NeuronId(typing.NamedTuple):
    """Hidden neuron address. The natural tuple order (layer, then index)
    is the tie-break order used throughout.

    """
    layer: int
    index: int


def _frozen_array(values: typing.Any, dtype: typing.Any) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclasses.dataclass(frozen=True, eq=False)
class Layer:
    """Affine map followed by per-neuron activations.

    """
    weights: np.ndarray
    bias: np.ndarray
    kinds: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        weights = _frozen_array(self.weights, np.float64)
        if weights.ndim != 2:
            raise ShapeError(f'weights must be a matrix, got {weights.ndim} '
                             'dimensions')
        rows = weights.shape[0]
        for name, dtype in (('bias', np.float64), ('kinds', np.int64),
                            ('slopes', np.float64), ('intercepts',
                                                     np.float64)):
            array = _frozen_array(getattr(self, name), dtype)
            if array.shape != (rows, ):
                raise ShapeError(f'{name} has shape {array.shape}, '
                                 f'expected ({rows},)')
            object.__setattr__(self, name, array)
        object.__setattr__(self, 'weights', weights)
        if not set(self.kinds.tolist()) <= {kind.value
                                            for kind in ActivationKind}:
            raise ModelValidationError('unknown activation kind')
        if not (np.all(np.isfinite(weights)) and np.all(
                np.isfinite(self.bias)) and np.all(np.isfinite(self.slopes))
                and np.all(np.isfinite(self.intercepts))):
            raise ModelValidationError('non-finite layer parameter')

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]

    def mask(self, kind: ActivationKind) -> np.ndarray:
        """Get the boolean mask of the neurons with the given kind.

        """
        return self.kinds == kind.value

    def activation(self, index: int) -> Activation:
        """Get the activation of a neuron.

        Parameters
        ----------
        index : int
            The neuron index.

        Returns
        -------
        Activation
            The activation of the neuron.

        """
        kind = ActivationKind(int(self.kinds[index]))
        if kind is ActivationKind.GRAFTED_LINEAR:
            return Activation(kind, float(self.slopes[index]),
                              float(self.intercepts[index]))
        return Activation(kind)


@dataclasses.dataclass(frozen=True, eq=False)
class Network:
    """Layered feedforward network. The last layer produces the logits
    and is entirely Identity.

    """
    input_dim: int
    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, 'layers', tuple(self.layers))
        if self.input_dim <= 0:
            raise ModelValidationError('input_dim must be positive')
        if not self.layers:
            raise ModelValidationError('a network needs at least one layer')
        previous = self.input_dim
        for number, layer in enumerate(self.layers):
            if layer.input_dim != previous:
                raise ModelValidationError(
                    f'layer {number} expects {layer.input_dim} inputs but '
                    f'receives {previous}')
            previous = layer.output_dim
        if not np.all(self.layers[-1].mask(ActivationKind.IDENTITY)):
            raise ModelValidationError(
                'the output layer must use Identity activations')

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    @property
    def hidden_layers(self) -> range:
        return range(len(self.layers) - 1)

    @property
    def hidden_neuron_count(self) -> int:
        return sum(self.layers[layer].output_dim
                   for layer in self.hidden_layers)

    def neuron_ids(self) -> list[NeuronId]:
        """Get the ids of all hidden neurons in (layer, index) order.

        """
        return [
            NeuronId(layer, index) for layer in self.hidden_layers
            for index in range(self.layers[layer].output_dim)
        ]


@dataclasses.dataclass
class LayerTensors:
    """Trainable tensors of one layer, used both for parameters and for
    their gradients.

    """
    weights: np.ndarray
    bias: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray

    def scaled(self, factor: float) -> 'LayerTensors':
        return LayerTensors(self.weights * factor, self.bias * factor,
                            self.slopes * factor, self.intercepts * factor)


@dataclasses.dataclass
class ParamGrad:
    """Gradient with respect to every trainable parameter, mirroring the
    network shapes.

    """
    layers: list[LayerTensors]

    def scaled(self, factor: float) -> 'ParamGrad':
        return ParamGrad([layer.scaled(factor) for layer in self.layers])

    def flatten(self) -> np.ndarray:
        return np.concatenate([
            np.concatenate([
                layer.weights.ravel(), layer.bias, layer.slopes,
                layer.intercepts
            ]) for layer in self.layers
        ])


@dataclasses.dataclass
class Batch:
    """A batch of inputs with their labels.

    """
    inputs: np.ndarray
    labels: np.ndarray


@dataclasses.dataclass
class BoundsCache:
    """Per-layer pre-activation bounds (the last entry bounds the logits)
    and post-activation bounds for one input and one epsilon.

    """
    x: np.ndarray
    epsilon: float
    lower: list[np.ndarray]
    upper: list[np.ndarray]
    post_lower: list[np.ndarray]
    post_upper: list[np.ndarray]
    infeasible: bool = False


class NeuronStatus(enum.IntEnum):
    """Enumeration of neuron stability statuses.

    """
    INACTIVE = 0
    ACTIVE = 1
    UNSTABLE = 2
    LINEAR = 3


@dataclasses.dataclass
class StatusReport:
    """Per-layer neuron statuses and the unstable neuron ratio.

    """
    statuses: list[np.ndarray]
    unstable_count: int
    total: int

    @property
    def unr(self) -> float:
        """The unstable neuron ratio in percent.

        """
        if self.total == 0:
            return 0.0
        return 100.0 * self.unstable_count / self.total


class LowerSlope(enum.Enum):
    """Choice of the lower relaxation line of unstable ReLUs.

    """
    ADAPTIVE = 'adaptive'
    ZERO = 'zero'
    ONE = 'one'


@dataclasses.dataclass
class ReluRelaxation:
    """Per-neuron linear relaxation lines of one layer.

    """
    upper_slope: np.ndarray
    upper_intercept: np.ndarray
    lower_slope: np.ndarray
    lower_intercept: np.ndarray
    status: np.ndarray


@dataclasses.dataclass
class LinearBounds:
    """Linear lower and upper bounds A x + b of an output expression.

    """
    lower_a: np.ndarray
    upper_a: np.ndarray
    lower_b: np.ndarray
    upper_b: np.ndarray


class WidthMode(enum.Enum):
    """Post-activation width model of the interval Lipschitz recurrence.

    """
    PRE = 'pre'
    POST = 'post'


@dataclasses.dataclass
class LipschitzEstimate:
    """Upper and lower estimates of the local Lipschitz constant.

    """
    upper: float
    lower: float
    x: np.ndarray
    epsilon: float
    per_output_upper: np.ndarray


class ScoreBounds(enum.Enum):
    """Bounds the calibration scores are computed from.

    """
    IBP = 'ibp'
    LOOSE = 'loose'
    CROWN = 'crown'


@dataclasses.dataclass
class ScoreTable:
    """Per-layer instability counts, maximum pre-activation widths and
    weighted interval scores over a calibration set.

    """
    instability: dict[int, np.ndarray]
    max_width: dict[int, np.ndarray]
    calibration_size: int
    weighted_interval: dict[int, np.ndarray] = dataclasses.field(
        default_factory=dict)


@dataclasses.dataclass
class SelectionRatios:
    """Ratios driving the backward neuron selection.

    """
    pool: float = 0.8
    influential: float = 0.15
    last_layer_retain: float = 0.7
    graft: float = 0.5
    retain_only_if_full: bool = True


@dataclasses.dataclass
class GraftSet:
    """Neurons selected for grafting with their slopes and intercepts.

    """
    selected: dict[int, list[int]]
    slopes: dict[int, list[float]] = dataclasses.field(default_factory=dict)
    intercepts: dict[int, list[float]] = dataclasses.field(
        default_factory=dict)

    def is_empty(self) -> bool:
        return all(len(indices) == 0 for indices in self.selected.values())

    def size(self) -> int:
        return sum(len(indices) for indices in self.selected.values())

    def neuron_ids(self) -> list[NeuronId]:
        return sorted(
            NeuronId(layer, index)
            for layer, indices in self.selected.items() for index in indices)


class SlopeLossVariant(enum.Enum):
    """Variants of the slope loss. RS replaces the slope penalty with the
    ReLU stability regularizer.

    """
    VERBATIM = 'verbatim'
    SYMMETRIC = 'symmetric'
    RS = 'rs'
    OFF = 'off'


@dataclasses.dataclass
class PgdConfig:
    """Configuration of the projected gradient attack.

    """
    steps: int = 10
    step_size: float = 0.025
    restarts: int = 1


@dataclasses.dataclass
class TrainConfig:
    """Configuration of adversarial training and fine-tuning.

    """
    epochs: int = 40
    batch_size: int = 64
    lr: float = 0.1
    decay_epochs: tuple[int, ...] = (25, 35)
    decay_factor: float = 0.1
    lr_graft: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    lambda_slope: float = 5e-5
    lambda_l1: float = 1e-4
    slope_k: float = 2.0
    slope_loss: SlopeLossVariant = SlopeLossVariant.VERBATIM
    pgd: PgdConfig = dataclasses.field(default_factory=PgdConfig)
    prune_ratio: float = 0.3
    epsilon: float = 0.05
    seed: int = 0


@dataclasses.dataclass
class TrainingLogRow:
    """One epoch of the training log.

    """
    epoch: int
    loss: float
    sa: float
    unr: float
    lip: float


class Verdict(enum.IntEnum):
    """Enumeration of verification verdicts.

    """
    VERIFIED = 0
    FALSIFIED = 1
    UNKNOWN = 2

    @staticmethod
    def from_name(name: str) -> 'Verdict':
        """Find an enumeration member by its name.

        Raises
        ------
        NameError
            If no enumeration member can be found for the given name.

        """
        name_upper = name.upper()
        for verdict in Verdict:
            if name_upper == verdict.name:
                return verdict
        raise NameError(name)


@dataclasses.dataclass
class Certificate:
    """Verification verdict of one sample with its evidence.

    """
    verdict: Verdict
    margin_lower: list[float]
    branches: int = 0
    time_sec: float = 0.0
    counterexample: typing.Optional[list[float]] = None

    def to_dict(self) -> dict[str, typing.Any]:
        return {
            'verdict': self.verdict.name.lower(),
            'margin_lower': [float(value) for value in self.margin_lower],
            'branches': self.branches,
            'time_sec': self.time_sec,
            'counterexample': self.counterexample
        }

    @staticmethod
    def from_dict(values: dict[str, typing.Any]) -> 'Certificate':
        return Certificate(Verdict.from_name(values['verdict']),
                           list(values['margin_lower']), values['branches'],
                           values['time_sec'], values['counterexample'])


@dataclasses.dataclass
class BabBudget:
    """Budget of one branch and bound run.

    """
    max_branches: int = 2000
    max_seconds: float = 10.0


@dataclasses.dataclass
class OracleResult:
    """Exact verdict and output range from activation-pattern enumeration.

    """
    verdict: Verdict
    min_margin: float
    output_lower: np.ndarray
    output_upper: np.ndarray
    feasible_patterns: int
    counterexample: typing.Optional[np.ndarray] = None


@dataclasses.dataclass
class SuiteMetrics:
    """Evaluation metrics of one network on one dataset, in percent
    (time in seconds). avg_lb is the mean smallest margin lower bound of
    the certified samples.

    """
    sa: float
    ra: float
    va: float
    unr: float
    time_sec: float
    n: int
    avg_lb: float = 0.0

    def to_dict(self) -> dict[str, typing.Any]:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(values: dict[str, typing.Any]) -> 'SuiteMetrics':
        return SuiteMetrics(float(values['sa']), float(values['ra']),
                            float(values['va']), float(values['unr']),
                            float(values['time_sec']), int(values['n']),
                            float(values.get('avg_lb', 0.0)))


@dataclasses.dataclass
class Dataset:
    """Classification inputs in [0, 1] with integer labels.

    """
    inputs: np.ndarray
    labels: np.ndarray
    name: str
    split: str
    num_classes: int

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices: np.ndarray, split: str) -> 'Dataset':
        return Dataset(self.inputs[indices], self.labels[indices], self.name,
                       split, self.num_classes)


@dataclasses.dataclass
class SuiteConfig:
    """Configuration of a verification suite run.

    """
    attack: PgdConfig = dataclasses.field(
        default_factory=lambda: PgdConfig(20, 0.0, 5))
    step_size_ratio: float = 0.25
    budget: BabBudget = dataclasses.field(default_factory=BabBudget)
    lower_slope: LowerSlope = LowerSlope.ADAPTIVE
    refine_intermediate: bool = False
    seed: int = 0
    threads: int = 1


@dataclasses.dataclass
class SampleRecord:
    """Evaluation outcome of one sample. Only correctly classified samples
    that resist the attack carry a certificate.

    """
    index: int
    correct: bool
    robust: bool
    certificate: typing.Optional[Certificate] = None

    @property
    def verified(self) -> bool:
        return (self.certificate is not None
                and self.certificate.verdict is Verdict.VERIFIED)


@dataclasses.dataclass
class DataConfig:
    """Sources and splits of the data of a run. Without a dataset path, a
    synthetic dataset is generated.

    """
    path: typing.Optional[str] = None
    format: str = 'csv'
    labels_path: typing.Optional[str] = None
    test_path: typing.Optional[str] = None
    test_labels_path: typing.Optional[str] = None
    synthetic: str = 'moons'
    synthetic_n: int = 1000
    synthetic_noise: float = 0.1
    num_classes: typing.Optional[int] = None
    test_fraction: float = 0.2
    calibration_size: int = 500
    limit: typing.Optional[int] = None


@dataclasses.dataclass
class RunConfig:
    """Configuration of a whole pipeline run. The run radius and seed
    apply to every stage.

    """
    name: str = 'run'
    output_dir: str = 'runs/run'
    model: typing.Optional[str] = None
    target: str = 'finetuned'
    epsilon: float = 0.05
    seed: int = 0
    hidden: tuple[int, ...] = (32, 32)
    data: DataConfig = dataclasses.field(default_factory=DataConfig)
    selection: SelectionRatios = dataclasses.field(
        default_factory=SelectionRatios)
    score_bounds: ScoreBounds = ScoreBounds.IBP
    init_slope: float = 0.4
    init_intercept: float = 0.0
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    finetune: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    suite: SuiteConfig = dataclasses.field(default_factory=SuiteConfig)
    width_mode: WidthMode = WidthMode.PRE
    lipschitz_pairs: int = 1000
    lipschitz_anchors: int = 100
    max_slope: float = 10.0
    mask_in: typing.Optional[str] = None
    mask_out: typing.Optional[str] = None
