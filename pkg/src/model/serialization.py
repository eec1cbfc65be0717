"""Module for saving and loading networks as JSON documents.

Reals are written as decimal strings (Python repr) so that a load after a
save gives bit-identical values.

"""
import json
import logging
import typing

import numpy as np

from src import MODEL_FORMAT_VERSION
from src.domain import ActivationKind
from src.domain import GraftSet
from src.domain import Layer
from src.domain import Network
from src.model.exceptions import ModelParseError

_logger = logging.getLogger(__name__)
"""Logger for this module."""


def _real_to_text(value: float) -> str:
    return repr(float(value))


def _text_to_real(value: typing.Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ModelParseError('expected a real number', field)
    try:
        return float(value)
    except ValueError:
        raise ModelParseError(f'invalid real number {value!r}', field)


def _reals(values: typing.Any, field: str) -> list[float]:
    if not isinstance(values, list):
        raise ModelParseError('expected a list', field)
    return [
        _text_to_real(value, f'{field}[{number}]')
        for number, value in enumerate(values)
    ]


def _activation_to_dict(layer: Layer, index: int) -> dict[str, str]:
    activation = layer.activation(index)
    if activation.kind is ActivationKind.GRAFTED_LINEAR:
        return {
            'kind': 'grafted_linear',
            'slope': _real_to_text(activation.slope),
            'intercept': _real_to_text(activation.intercept)
        }
    return {'kind': activation.kind.name.lower()}


def _sorted_graft_set(graft_set: GraftSet) -> GraftSet:
    selected = {}
    slopes = {}
    intercepts = {}
    for layer, indices in graft_set.selected.items():
        order = sorted(range(len(indices)),
                       key=lambda position: indices[position])
        selected[layer] = [int(indices[position]) for position in order]
        for source, target in ((graft_set.slopes, slopes),
                               (graft_set.intercepts, intercepts)):
            if layer in source:
                target[layer] = [
                    float(source[layer][position]) for position in order
                ]
    return GraftSet(selected, slopes, intercepts)


def graft_set_to_dict(graft_set: GraftSet) -> dict[str, typing.Any]:
    """Convert a graft set to its JSON document.

    Layer keys are sorted and written as strings; indices are sorted
    together with their slopes and intercepts.

    """
    graft_set = _sorted_graft_set(graft_set)
    layers = sorted(graft_set.selected)
    return {
        'format': MODEL_FORMAT_VERSION,
        'selected': {str(layer): graft_set.selected[layer]
                     for layer in layers},
        'slopes': {
            str(layer): graft_set.slopes[layer]
            for layer in layers if layer in graft_set.slopes
        },
        'intercepts': {
            str(layer): graft_set.intercepts[layer]
            for layer in layers if layer in graft_set.intercepts
        }
    }


def graft_set_from_dict(document: typing.Any) -> GraftSet:
    """Convert a JSON document to a graft set.

    Parameters
    ----------
    document : dict
        The parsed JSON document.

    Returns
    -------
    GraftSet
        The graft set.

    Raises
    ------
    ModelParseError
        If a field is missing or malformed.

    """
    if not isinstance(document, dict):
        raise ModelParseError('expected an object', 'graft')
    selected_document = document.get('selected')
    if not isinstance(selected_document, dict):
        raise ModelParseError('expected an object', 'graft.selected')
    try:
        selected = {
            int(layer): [int(index) for index in indices]
            for layer, indices in selected_document.items()
        }
        slopes = {
            int(layer): _reals(values, f'graft.slopes.{layer}')
            for layer, values in document.get('slopes', {}).items()
        }
        intercepts = {
            int(layer): _reals(values, f'graft.intercepts.{layer}')
            for layer, values in document.get('intercepts', {}).items()
        }
    except (TypeError, ValueError, AttributeError):
        raise ModelParseError('malformed graft set', 'graft')
    for layer, indices in selected.items():
        if len(set(indices)) != len(indices):
            raise ModelParseError('duplicate neuron index',
                                  f'graft.selected.{layer}')
        for name, values in (('slopes', slopes), ('intercepts', intercepts)):
            if layer in values and len(values[layer]) != len(indices):
                raise ModelParseError(
                    'length differs from the selected indices',
                    f'graft.{name}.{layer}')
    return _sorted_graft_set(GraftSet(selected, slopes, intercepts))


def save_graft_set(graft_set: GraftSet, path: str) -> None:
    """Save a graft set as JSON.

    """
    with open(path, 'w') as file:
        json.dump(graft_set_to_dict(graft_set), file, indent=1)
        file.write('\n')


def load_graft_set(path: str) -> GraftSet:
    """Load a graft set from JSON.

    Raises
    ------
    ModelParseError
        If the file is not a valid graft set.

    """
    with open(path) as file:
        try:
            document = json.load(file)
        except json.JSONDecodeError as error:
            raise ModelParseError(f'invalid JSON: {error}', 'graft')
    return graft_set_from_dict(document)


def network_to_dict(
        net: Network,
        graft_set: typing.Optional[GraftSet] = None,
        prune_mask: typing.Optional[list[np.ndarray]] = None
) -> dict[str, typing.Any]:
    """Convert a network to its JSON document.

    Parameters
    ----------
    net : Network
        The network.
    graft_set : GraftSet, optional
        The graft set the network was produced with.
    prune_mask : list of np.ndarray, optional
        The per-layer boolean masks of the weights kept by pruning.

    Returns
    -------
    dict
        The JSON document.

    """
    document: dict[str, typing.Any] = {
        'format': MODEL_FORMAT_VERSION,
        'input_dim': net.input_dim,
        'layers': [{
            'weights': [[_real_to_text(value) for value in row]
                        for row in layer.weights],
            'bias': [_real_to_text(value) for value in layer.bias],
            'activations': [
                _activation_to_dict(layer, index)
                for index in range(layer.output_dim)
            ]
        } for layer in net.layers]
    }
    if graft_set is not None:
        document['graft'] = graft_set_to_dict(graft_set)
    if prune_mask is not None:
        document['prune_mask'] = [
            np.asarray(mask, dtype=np.int64).tolist() for mask in prune_mask
        ]
    return document


def _layer_from_dict(document: typing.Any, number: int) -> Layer:
    field = f'layers[{number}]'
    if not isinstance(document, dict):
        raise ModelParseError('expected an object', field)
    for key in ('weights', 'bias', 'activations'):
        if key not in document:
            raise ModelParseError('missing field', f'{field}.{key}')
    rows = document['weights']
    if not isinstance(rows, list):
        raise ModelParseError('expected a list of rows', f'{field}.weights')
    weights = [
        _reals(row, f'{field}.weights[{row_number}]')
        for row_number, row in enumerate(rows)
    ]
    bias = _reals(document['bias'], f'{field}.bias')
    activations = document['activations']
    if not isinstance(activations, list):
        raise ModelParseError('expected a list', f'{field}.activations')
    kinds = []
    slopes = []
    intercepts = []
    for index, activation in enumerate(activations):
        activation_field = f'{field}.activations[{index}]'
        if not isinstance(activation, dict) or 'kind' not in activation:
            raise ModelParseError('expected an object with a kind',
                                  activation_field)
        try:
            kind = ActivationKind.from_name(str(activation['kind']))
        except NameError:
            raise ModelParseError(
                f'unknown activation {activation["kind"]!r}',
                f'{activation_field}.kind')
        kinds.append(kind.value)
        if kind is ActivationKind.GRAFTED_LINEAR:
            slopes.append(
                _text_to_real(activation.get('slope'),
                              f'{activation_field}.slope'))
            intercepts.append(
                _text_to_real(activation.get('intercept'),
                              f'{activation_field}.intercept'))
        else:
            slopes.append(0.0)
            intercepts.append(0.0)
    if len({len(row) for row in weights}) > 1:
        raise ModelParseError('ragged weight rows', f'{field}.weights')
    matrix = (np.array(weights, dtype=np.float64) if weights and weights[0]
              else np.zeros((len(weights), 0)))
    return Layer(matrix, bias, kinds, slopes, intercepts)


def network_from_dict(document: typing.Any) -> Network:
    """Convert a JSON document to a network.

    Raises
    ------
    ModelParseError
        If a field is missing or malformed.
    ModelValidationError
        If the shapes do not chain.

    """
    if not isinstance(document, dict):
        raise ModelParseError('expected an object', 'model')
    if document.get('format') != MODEL_FORMAT_VERSION:
        raise ModelParseError(
            f'unsupported format {document.get("format")!r}', 'format')
    input_dim = document.get('input_dim')
    if isinstance(input_dim, bool) or not isinstance(input_dim, int):
        raise ModelParseError('expected an integer', 'input_dim')
    layers = document.get('layers')
    if not isinstance(layers, list):
        raise ModelParseError('expected a list', 'layers')
    return Network(
        input_dim,
        tuple(
            _layer_from_dict(layer, number)
            for number, layer in enumerate(layers)))


def save_model(net: Network,
               path: str,
               graft_set: typing.Optional[GraftSet] = None,
               prune_mask: typing.Optional[list[np.ndarray]] = None) -> None:
    """Save a network as JSON.

    Parameters
    ----------
    net : Network
        The network.
    path : str
        The file path.
    graft_set : GraftSet, optional
        The graft set, written to the "graft" section.
    prune_mask : list of np.ndarray, optional
        The pruning masks, written to the "prune_mask" section.

    """
    with open(path, 'w') as file:
        json.dump(network_to_dict(net, graft_set, prune_mask), file)
        file.write('\n')
    _logger.info(f'Saved a {net.depth}-layer network to {path}')


def load_model_document(
    path: str
) -> tuple[Network, typing.Optional[GraftSet],
           typing.Optional[list[np.ndarray]]]:
    """Load a network with its optional graft set and pruning masks.

    Parameters
    ----------
    path : str
        The file path.

    Returns
    -------
    tuple
        The network, the graft set (or None) and the pruning masks (or
        None).

    Raises
    ------
    ModelParseError
        If the file is not valid JSON or a field is malformed.
    ModelValidationError
        If the network violates a structural invariant.

    """
    with open(path) as file:
        try:
            document = json.load(file)
        except json.JSONDecodeError as error:
            raise ModelParseError(f'invalid JSON: {error}', 'model')
    net = network_from_dict(document)
    graft_set = None
    if 'graft' in document:
        graft_set = graft_set_from_dict(document['graft'])
    prune_mask = None
    if 'prune_mask' in document:
        try:
            prune_mask = [
                np.array(mask, dtype=bool)
                for mask in document['prune_mask']
            ]
        except (TypeError, ValueError):
            raise ModelParseError('malformed mask', 'prune_mask')
        if len(prune_mask) != net.depth or any(
                mask.shape != layer.weights.shape
                for mask, layer in zip(prune_mask, net.layers)):
            raise ModelParseError('mask shapes differ from the weights',
                                  'prune_mask')
    return net, graft_set, prune_mask


def load_model(path: str) -> Network:
    """Load a network saved with save_model.

    Raises
    ------
    ModelParseError
        If the file is not valid JSON or a field is malformed.
    ModelValidationError
        If the network violates a structural invariant.

    """
    return load_model_document(path)[0]
