#!/usr/bin/env python
# coding: utf8

"""
Bit exact model persistence.

```
FOOBAR-MODEL v1 <MLP|CONV>
FAULT c=<class> p=<prob> units=<k> seed=<s> [layer=<l>]   (optional)
LAYER dense <in_dim> <out_dim>
LAYER conv <height> <width> <filters> <kernel> <stride> <padding>
...
END
<parameter blocks: little-endian float64, row-major, weights then biases>
<CRC32 of all preceding bytes, little-endian u32>
```

``units=<k>`` stands for the faulted prefix ``0..k-1`` of the attacked layer.
"""

import struct
import zlib

import numpy as np

from .errors import VersionMismatch, Corrupt, ShapeMismatch
from .faults import FaultPlan
from .network import NetworkModel, DenseLayer, ConvLayer

MAGIC = 'FOOBAR-MODEL'
VERSION = 'v1'
END = 'END'


def _layer_line(layer):
    if layer.kind == 'conv':
        height, width = layer.image_shape
        return 'LAYER conv %d %d %d %d %d %d' % (
            height, width, layer.filter_count, layer.kernel_size,
            layer.stride, layer.padding)
    return 'LAYER dense %d %d' % (layer.in_dim, layer.out_dim)


def _fault_line(plan):
    if not plan.is_prefix:
        raise ValueError('Only prefix fault plans can be serialized')
    line = 'FAULT c=%d p=%r units=%d seed=%d' % (
        plan.target_class, plan.sample_fault_probability,
        len(plan.faulted_units), plan.rng_seed)
    if plan.attacked_layer:
        line += ' layer=%d' % plan.attacked_layer
    return line


def save(model, fault_plan=None):
    """Serialize a model and its optional fault plan.

    Parameters
    ----------
    model:
        ``NetworkModel`` to save.
    fault_plan:
        ``FaultPlan`` the model was trained with, if any.

    Returns
    -------
    data:
        Model file bytes.
    """
    lines = ['%s %s %s' % (MAGIC, VERSION, model.arch)]
    if fault_plan is not None:
        fault_plan.check_model(model)
        lines.append(_fault_line(fault_plan))
    lines.extend(_layer_line(layer) for layer in model.layers)
    lines.append(END)
    payload = [('\n'.join(lines) + '\n').encode('ascii')]
    for param in model.parameters():
        payload.append(np.ascontiguousarray(param, dtype='<f8').tobytes())
    data = b''.join(payload)
    return data + struct.pack('<I', zlib.crc32(data) & 0xFFFFFFFF)


def _parse_fault(fields):
    values = {}
    for field in fields:
        key, _, value = field.partition('=')
        values[key] = value
    try:
        units = int(values['units'])
        return FaultPlan(int(values['c']), float(values['p']), range(units),
                         int(values['seed']), int(values.get('layer', 0)))
    except (KeyError, ValueError) as error:
        raise Corrupt('Malformed FAULT line: %s' % error)


def _parse_layer(fields):
    try:
        if fields[0] == 'dense' and len(fields) == 3:
            in_dim, out_dim = int(fields[1]), int(fields[2])
            return 'dense', ((out_dim, in_dim), (out_dim,)), ()
        if fields[0] == 'conv' and len(fields) == 7:
            height, width, filters, kernel, stride, padding = \
                [int(field) for field in fields[1:]]
            return ('conv', ((filters, kernel, kernel), (filters,)),
                    ((height, width), stride, padding))
    except ValueError:
        pass
    raise Corrupt('Malformed LAYER line: %s' % ' '.join(fields))


def load(data):
    """Deserialize a model file.

    Parameters
    ----------
    data:
        Model file bytes.

    Returns
    -------
    model:
        The stored ``NetworkModel``.
    fault_plan:
        The stored ``FaultPlan``, or None.

    Raises
    ------
    Corrupt
        If the checksum or the header is invalid.
    VersionMismatch
        If the file was written by another format version.
    ShapeMismatch
        If the parameter payload does not match the declared layers.
    """
    data = bytes(data)
    if len(data) < 4:
        raise Corrupt('File too short')
    body, checksum = data[:-4], struct.unpack('<I', data[-4:])[0]
    if zlib.crc32(body) & 0xFFFFFFFF != checksum:
        raise Corrupt('Checksum mismatch')
    end = body.find(('\n%s\n' % END).encode('ascii'))
    if end < 0:
        raise Corrupt('Missing END of header')
    try:
        lines = body[:end].decode('ascii').split('\n')
    except UnicodeDecodeError:
        raise Corrupt('Header is not ASCII')
    payload = body[end + len(END) + 2:]
    header = lines[0].split()
    if len(header) != 3 or header[0] != MAGIC:
        raise Corrupt('Not a model file')
    if header[1] != VERSION:
        raise VersionMismatch('Unsupported model version %s' % header[1])
    fault_plan = None
    declared = []
    for line in lines[1:]:
        fields = line.split()
        if fields and fields[0] == 'FAULT':
            fault_plan = _parse_fault(fields[1:])
        elif fields and fields[0] == 'LAYER' and len(fields) > 1:
            declared.append(_parse_layer(fields[1:]))
        else:
            raise Corrupt('Unexpected header line %r' % line)
    expected = sum(int(np.prod(shape)) for _, shapes, _ in declared
                   for shape in shapes) * 8
    if len(payload) != expected:
        raise ShapeMismatch('Payload holds %d bytes, layers need %d'
                            % (len(payload), expected))
    layers = []
    offset = 0
    for kind, shapes, geometry in declared:
        params = []
        for shape in shapes:
            count = int(np.prod(shape))
            values = np.frombuffer(payload, dtype='<f8', count=count,
                                   offset=offset)
            params.append(values.astype(np.float64).reshape(shape))
            offset += count * 8
        if kind == 'conv':
            layers.append(ConvLayer(params[0], params[1], *geometry))
        else:
            layers.append(DenseLayer(params[0], params[1]))
    model = NetworkModel(header[2], layers)
    if fault_plan is not None:
        fault_plan.check_model(model)
    return model, fault_plan


def save_file(path, model, fault_plan=None):
    """Write a model file to disk."""
    with open(path, 'wb') as stream:
        stream.write(save(model, fault_plan))


def load_file(path):
    """Read a model file from disk, see ``load``."""
    with open(path, 'rb') as stream:
        return load(stream.read())
