"""Module for the reverse-mode differentiation tape.

Every node of a tape holds the numpy value produced by one primitive.
Nodes are appended in evaluation order, so the reverse of the node list
is a valid backward order.

"""
import typing

import numpy as np

from src.autodiff.exceptions import NumericError
from src.autodiff.exceptions import UnsupportedPrimitiveError

ForwardFunction = typing.Callable[..., np.ndarray]
"""Forward function of a primitive: (*input values, **attributes)."""

VjpFunction = typing.Callable[..., tuple[np.ndarray, ...]]
"""Vector-Jacobian product of a primitive:
(output adjoint, output value, *input values, **attributes)."""


class Primitive(typing.NamedTuple):
    """Differentiable operation.

    """
    forward: ForwardFunction
    vjp: VjpFunction


def subgradient_policy(z: float) -> float:
    """Get the slope chosen for a ReLU at the given pre-activation.

    The derivative at the kink z = 0 is taken as 0. Minimum and maximum
    nodes pass their gradient through the attaining argument, and ties
    go to the first argument.

    Parameters
    ----------
    z : float
        The pre-activation value.

    Returns
    -------
    float
        1 for z > 0, else 0.

    """
    return 1.0 if z > 0 else 0.0


def relu_derivative(z: np.ndarray) -> np.ndarray:
    """Vectorized form of subgradient_policy.

    """
    return (z > 0).astype(np.float64)


def _unbroadcast(gradient: np.ndarray,
                 shape: tuple[int, ...]) -> np.ndarray:
    while gradient.ndim > len(shape):
        gradient = gradient.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and gradient.shape[axis] != 1:
            gradient = gradient.sum(axis=axis, keepdims=True)
    return gradient


def _outer_sum(gradient: np.ndarray, x: np.ndarray) -> np.ndarray:
    if x.ndim == 1:
        return np.outer(gradient, x)
    return gradient.T @ x


def _bias_gradient(gradient: np.ndarray) -> np.ndarray:
    if gradient.ndim == 1:
        return gradient
    return gradient.sum(axis=0)


def _reduction_gradient(gradient, x, axis):
    if axis is None:
        return np.broadcast_to(gradient, x.shape).copy()
    return np.broadcast_to(np.expand_dims(gradient, axis), x.shape).copy()


def _positive_part(weights: np.ndarray) -> np.ndarray:
    return np.where(weights > 0, weights, 0.0)


def _negative_part(weights: np.ndarray) -> np.ndarray:
    return np.where(weights > 0, 0.0, weights)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def _cross_entropy(logits, labels, reduction='mean'):
    log_probabilities = _log_softmax(logits)
    losses = -log_probabilities[np.arange(len(labels)), labels]
    if reduction == 'sum':
        return np.asarray(losses.sum())
    return np.asarray(losses.mean())


def _cross_entropy_vjp(gradient, output, logits, labels, reduction='mean'):
    probabilities = np.exp(_log_softmax(logits))
    probabilities[np.arange(len(labels)), labels] -= 1.0
    if reduction != 'sum':
        probabilities /= len(labels)
    return (gradient * probabilities, )


def _minimum_vjp(gradient, output, a, b):
    first = a <= b
    return (_unbroadcast(np.where(first, gradient, 0.0), np.shape(a)),
            _unbroadcast(np.where(first, 0.0, gradient), np.shape(b)))


def _maximum_vjp(gradient, output, a, b):
    first = a >= b
    return (_unbroadcast(np.where(first, gradient, 0.0), np.shape(a)),
            _unbroadcast(np.where(first, 0.0, gradient), np.shape(b)))


def _interval_affine_lower(lower, upper, weights, bias):
    return (lower @ _positive_part(weights).T +
            upper @ _negative_part(weights).T + bias)


def _interval_affine_upper(lower, upper, weights, bias):
    return (upper @ _positive_part(weights).T +
            lower @ _negative_part(weights).T + bias)


def _interval_affine_lower_vjp(gradient, output, lower, upper, weights,
                               bias):
    positive = weights > 0
    return (gradient @ _positive_part(weights),
            gradient @ _negative_part(weights),
            np.where(positive, _outer_sum(gradient, lower),
                     _outer_sum(gradient, upper)), _bias_gradient(gradient))


def _interval_affine_upper_vjp(gradient, output, lower, upper, weights,
                               bias):
    positive = weights > 0
    return (gradient @ _negative_part(weights),
            gradient @ _positive_part(weights),
            np.where(positive, _outer_sum(gradient, upper),
                     _outer_sum(gradient, lower)), _bias_gradient(gradient))


_PRIMITIVES: dict[str, Primitive] = {
    'add':
    Primitive(
        np.add, lambda g, out, a, b:
        (_unbroadcast(g, np.shape(a)), _unbroadcast(g, np.shape(b)))),
    'sub':
    Primitive(
        np.subtract, lambda g, out, a, b:
        (_unbroadcast(g, np.shape(a)), _unbroadcast(-g, np.shape(b)))),
    'mul':
    Primitive(
        np.multiply, lambda g, out, a, b: (_unbroadcast(
            g * b, np.shape(a)), _unbroadcast(g * a, np.shape(b)))),
    'div':
    Primitive(
        np.divide, lambda g, out, a, b: (_unbroadcast(
            g / b, np.shape(a)), _unbroadcast(-g * a / b**2, np.shape(b)))),
    'neg':
    Primitive(np.negative, lambda g, out, a: (-g, )),
    'square':
    Primitive(np.square, lambda g, out, a: (2.0 * a * g, )),
    'sum':
    Primitive(
        lambda a, axis=None: np.asarray(np.sum(a, axis=axis)),
        lambda g, out, a, axis=None: (_reduction_gradient(g, a, axis), )),
    'mean':
    Primitive(
        lambda a, axis=None: np.asarray(np.mean(a, axis=axis)),
        lambda g, out, a, axis=None:
        (_reduction_gradient(g, a, axis) * (out.size / a.size), )),
    'affine':
    Primitive(
        lambda x, weights, bias: x @ weights.T + bias,
        lambda g, out, x, weights, bias:
        (g @ weights, _outer_sum(g, x), _bias_gradient(g))),
    'relu':
    Primitive(lambda a: np.maximum(a, 0.0),
              lambda g, out, a: (g * relu_derivative(a), )),
    'minimum':
    Primitive(np.minimum, _minimum_vjp),
    'maximum':
    Primitive(np.maximum, _maximum_vjp),
    'abs':
    Primitive(np.abs, lambda g, out, a: (g * np.sign(a), )),
    'tanh':
    Primitive(np.tanh, lambda g, out, a: (g * (1.0 - out**2), )),
    'interval_affine_lower':
    Primitive(_interval_affine_lower, _interval_affine_lower_vjp),
    'interval_affine_upper':
    Primitive(_interval_affine_upper, _interval_affine_upper_vjp),
    'cross_entropy':
    Primitive(_cross_entropy, _cross_entropy_vjp)
}
"""Registry of the supported primitives by name."""


def supported_primitives() -> list[str]:
    """Get the names of the registered primitives.

    """
    return sorted(_PRIMITIVES)


class Var:
    """Handle of a tape node with arithmetic operator overloads.

    """
    def __init__(self, tape: 'Tape', node: int):
        self.tape = tape
        self.node = node

    @property
    def value(self) -> np.ndarray:
        return self.tape.value(self)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __lift(self, other: typing.Any) -> 'Var':
        if isinstance(other, Var):
            return other
        return self.tape.constant(other)

    def __add__(self, other):
        return self.tape.apply('add', self, self.__lift(other))

    def __radd__(self, other):
        return self.tape.apply('add', self.__lift(other), self)

    def __sub__(self, other):
        return self.tape.apply('sub', self, self.__lift(other))

    def __rsub__(self, other):
        return self.tape.apply('sub', self.__lift(other), self)

    def __mul__(self, other):
        return self.tape.apply('mul', self, self.__lift(other))

    def __rmul__(self, other):
        return self.tape.apply('mul', self.__lift(other), self)

    def __truediv__(self, other):
        return self.tape.apply('div', self, self.__lift(other))

    def __rtruediv__(self, other):
        return self.tape.apply('div', self.__lift(other), self)

    def __neg__(self):
        return self.tape.apply('neg', self)


class Tape:
    """Append-only record of primitive evaluations.

    A tape belongs to one evaluation and is not shared between threads.

    """
    def __init__(self):
        self.__values: list[np.ndarray] = []
        self.__primitives: list[typing.Optional[str]] = []
        self.__parents: list[tuple[int, ...]] = []
        self.__attributes: list[dict[str, typing.Any]] = []
        self.__trainable: list[bool] = []

    def __len__(self) -> int:
        return len(self.__values)

    def __append(self, value: np.ndarray, primitive: typing.Optional[str],
                 parents: tuple[int, ...], attributes: dict[str, typing.Any],
                 trainable: bool) -> Var:
        self.__values.append(value)
        self.__primitives.append(primitive)
        self.__parents.append(parents)
        self.__attributes.append(attributes)
        self.__trainable.append(trainable)
        return Var(self, len(self.__values) - 1)

    def variable(self, value: typing.Any) -> Var:
        """Record a leaf whose gradient is wanted.

        """
        return self.__append(np.array(value, dtype=np.float64), None, (), {},
                             True)

    def constant(self, value: typing.Any) -> Var:
        """Record a leaf that is held fixed.

        """
        return self.__append(np.asarray(value, dtype=np.float64), None, (),
                             {}, False)

    def value(self, var: Var) -> np.ndarray:
        return self.__values[var.node]

    def apply(self, name: str, *inputs: Var, **attributes: typing.Any) -> Var:
        """Evaluate a primitive and record it.

        Parameters
        ----------
        name : str
            The primitive name.
        *inputs : Var
            The input nodes.
        **attributes
            Non-differentiable arguments (e.g. axis, labels).

        Returns
        -------
        Var
            The output node.

        Raises
        ------
        UnsupportedPrimitiveError
            If no primitive is registered under the name.
        NumericError
            If the primitive produces a non-finite value.

        """
        if name not in _PRIMITIVES:
            raise UnsupportedPrimitiveError(f'unsupported primitive {name}')
        value = np.asarray(_PRIMITIVES[name].forward(
            *(self.__values[var.node] for var in inputs), **attributes),
                           dtype=np.float64)
        if not np.all(np.isfinite(value)):
            raise NumericError(len(self.__values), name)
        return self.__append(
            value, name, tuple(var.node for var in inputs), attributes,
            any(self.__trainable[var.node] for var in inputs))

    def backward(self, output: Var) -> list[typing.Optional[np.ndarray]]:
        """Run the backward pass from an output node.

        Parameters
        ----------
        output : Var
            The output node, seeded with an adjoint of ones.

        Returns
        -------
        list of np.ndarray or None
            The adjoint of every node; None for nodes that do not
            influence the output or do not depend on a variable.

        """
        adjoints: list[typing.Optional[np.ndarray]] = [None] * len(self)
        adjoints[output.node] = np.ones_like(self.__values[output.node])
        for node in range(output.node, -1, -1):
            adjoint = adjoints[node]
            primitive = self.__primitives[node]
            if adjoint is None or primitive is None:
                continue
            if not self.__trainable[node]:
                continue
            parents = self.__parents[node]
            gradients = _PRIMITIVES[primitive].vjp(
                adjoint, self.__values[node],
                *(self.__values[parent] for parent in parents),
                **self.__attributes[node])
            for parent, gradient in zip(parents, gradients):
                if not self.__trainable[parent]:
                    continue
                if adjoints[parent] is None:
                    adjoints[parent] = np.array(gradient, dtype=np.float64)
                else:
                    adjoints[parent] = adjoints[parent] + gradient
        return adjoints

    def gradients(self, output: Var,
                  variables: typing.Sequence[Var]) -> list[np.ndarray]:
        """Get the gradient of an output with respect to some variables.

        Variables that do not influence the output get a zero gradient.

        """
        adjoints = self.backward(output)
        result = []
        for var in variables:
            adjoint = adjoints[var.node]
            if adjoint is None:
                adjoint = np.zeros_like(self.__values[var.node])
            result.append(adjoint)
        return result
