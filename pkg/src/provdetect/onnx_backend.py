"""Transformer embedding backend over exported ONNX artifacts.

Consumes the directory layout written by the companion export tool:
``model.onnx``, ``tokenizer.json``, ``manifest.json``. The ONNX file is
decoded with a built-in protobuf wire reader and evaluated with numpy, so
no ONNX runtime is needed. The op set covers what stock transformer
encoders export to (opset 17); unknown ops fail loudly rather than
guessing.

Arrays keep the dtypes the graph dictates (float32 weights stay float32);
``token_vectors`` widens the final hidden states to float64 at the
boundary, matching the rest of the package.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmbeddingError

logger = logging.getLogger(__name__)

MANIFEST_KEYS = (
    "model_id",
    "dim",
    "sequence_length",
    "pad_token_id",
    "inputs",
    "checksum_sha256",
)

# TensorProto.DataType -> numpy dtype
_DTYPES = {
    1: np.dtype(np.float32),
    2: np.dtype(np.uint8),
    3: np.dtype(np.int8),
    4: np.dtype(np.uint16),
    5: np.dtype(np.int16),
    6: np.dtype(np.int32),
    7: np.dtype(np.int64),
    9: np.dtype(np.bool_),
    10: np.dtype(np.float16),
    11: np.dtype(np.float64),
    12: np.dtype(np.uint32),
    13: np.dtype(np.uint64),
}

_VARINT = 0
_FIXED64 = 1
_LENGTH = 2
_FIXED32 = 5


class _Reader:
    """Forward-only reader over one protobuf message's bytes."""

    def __init__(self, data: bytes | memoryview):
        self.data = memoryview(data)
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.data)

    def varint(self) -> int:
        result = 0
        shift = 0
        while True:
            if self.pos >= len(self.data):
                raise EmbeddingError("truncated varint in model file")
            byte = self.data[self.pos]
            self.pos += 1
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7
            if shift > 70:
                raise EmbeddingError("varint too long in model file")

    def signed64(self) -> int:
        raw = self.varint()
        return raw - (1 << 64) if raw >= (1 << 63) else raw

    def tag(self) -> tuple[int, int]:
        key = self.varint()
        return key >> 3, key & 0x7

    def chunk(self) -> memoryview:
        size = self.varint()
        if self.pos + size > len(self.data):
            raise EmbeddingError("truncated field in model file")
        out = self.data[self.pos : self.pos + size]
        self.pos += size
        return out

    def fixed32(self) -> bytes:
        out = self.data[self.pos : self.pos + 4]
        self.pos += 4
        return bytes(out)

    def fixed64(self) -> bytes:
        out = self.data[self.pos : self.pos + 8]
        self.pos += 8
        return bytes(out)

    def skip(self, wire: int) -> None:
        if wire == _VARINT:
            self.varint()
        elif wire == _FIXED64:
            self.pos += 8
        elif wire == _LENGTH:
            self.chunk()
        elif wire == _FIXED32:
            self.pos += 4
        else:
            raise EmbeddingError(f"unsupported wire type {wire} in model file")


def _packed_varints(data: memoryview, signed: bool) -> list[int]:
    r = _Reader(data)
    out = []
    while not r.done():
        out.append(r.signed64() if signed else r.varint())
    return out


@dataclass(frozen=True)
class _Node:
    op_type: str
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    attrs: dict


@dataclass
class _Graph:
    nodes: list[_Node] = field(default_factory=list)
    initializers: dict[str, np.ndarray] = field(default_factory=dict)
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)


def _parse_tensor(data: memoryview) -> np.ndarray:
    r = _Reader(data)
    dims: list[int] = []
    data_type = 1
    raw: bytes | None = None
    floats: list[float] = []
    ints: list[int] = []
    doubles: list[float] = []
    while not r.done():
        num, wire = r.tag()
        if num == 1:  # dims, possibly packed
            if wire == _LENGTH:
                dims.extend(_packed_varints(r.chunk(), signed=True))
            else:
                dims.append(r.signed64())
        elif num == 2 and wire == _VARINT:
            data_type = r.varint()
        elif num == 4:  # float_data
            if wire == _LENGTH:
                buf = r.chunk()
                floats.extend(np.frombuffer(buf, dtype="<f4").tolist())
            else:
                floats.append(np.frombuffer(r.fixed32(), dtype="<f4")[0])
        elif num in (5, 7):  # int32_data / int64_data
            if wire == _LENGTH:
                ints.extend(_packed_varints(r.chunk(), signed=True))
            else:
                ints.append(r.signed64())
        elif num == 9 and wire == _LENGTH:
            raw = bytes(r.chunk())
        elif num == 11:  # double_data
            if wire == _LENGTH:
                buf = r.chunk()
                doubles.extend(np.frombuffer(buf, dtype="<f8").tolist())
            else:
                doubles.append(np.frombuffer(r.fixed64(), dtype="<f8")[0])
        else:
            r.skip(wire)
    dtype = _DTYPES.get(data_type)
    if dtype is None:
        raise EmbeddingError(f"unsupported tensor data type {data_type}")
    shape = tuple(dims)
    if raw is not None:
        arr = np.frombuffer(raw, dtype=dtype.newbyteorder("<"))
        return arr.reshape(shape).astype(dtype, copy=False)
    if floats:
        return np.asarray(floats, dtype=np.float32).reshape(shape)
    if doubles:
        return np.asarray(doubles, dtype=np.float64).reshape(shape)
    if ints:
        return np.asarray(ints, dtype=dtype).reshape(shape)
    return np.zeros(shape, dtype=dtype)


def _parse_attribute(data: memoryview) -> tuple[str, object]:
    r = _Reader(data)
    name = ""
    value: object = None
    ints: list[int] = []
    floats: list[float] = []
    strings: list[str] = []
    while not r.done():
        num, wire = r.tag()
        if num == 1 and wire == _LENGTH:
            name = bytes(r.chunk()).decode("utf-8")
        elif num == 2 and wire == _FIXED32:  # f
            value = float(np.frombuffer(r.fixed32(), dtype="<f4")[0])
        elif num == 3 and wire == _VARINT:  # i
            value = r.signed64()
        elif num == 4 and wire == _LENGTH:  # s
            value = bytes(r.chunk()).decode("utf-8", errors="replace")
        elif num == 5 and wire == _LENGTH:  # t
            value = _parse_tensor(r.chunk())
        elif num == 6 and wire == _LENGTH:  # g: subgraphs are out of scope
            raise EmbeddingError(
                "model contains a subgraph attribute; control-flow graphs "
                "are not supported"
            )
        elif num == 7:  # floats
            if wire == _LENGTH:
                buf = r.chunk()
                floats.extend(np.frombuffer(buf, dtype="<f4").tolist())
            else:
                floats.append(float(np.frombuffer(r.fixed32(), dtype="<f4")[0]))
        elif num == 8:  # ints
            if wire == _LENGTH:
                ints.extend(_packed_varints(r.chunk(), signed=True))
            else:
                ints.append(r.signed64())
        elif num == 9 and wire == _LENGTH:  # strings
            strings.append(bytes(r.chunk()).decode("utf-8", errors="replace"))
        else:
            r.skip(wire)
    if value is None:
        if ints:
            value = ints
        elif floats:
            value = floats
        elif strings:
            value = strings
    return name, value


def _parse_value_info_name(data: memoryview) -> str:
    r = _Reader(data)
    while not r.done():
        num, wire = r.tag()
        if num == 1 and wire == _LENGTH:
            return bytes(r.chunk()).decode("utf-8")
        r.skip(wire)
    return ""


def _parse_node(data: memoryview) -> _Node:
    r = _Reader(data)
    inputs: list[str] = []
    outputs: list[str] = []
    name = ""
    op_type = ""
    domain = ""
    attrs: dict = {}
    while not r.done():
        num, wire = r.tag()
        if num == 1 and wire == _LENGTH:
            inputs.append(bytes(r.chunk()).decode("utf-8"))
        elif num == 2 and wire == _LENGTH:
            outputs.append(bytes(r.chunk()).decode("utf-8"))
        elif num == 3 and wire == _LENGTH:
            name = bytes(r.chunk()).decode("utf-8")
        elif num == 4 and wire == _LENGTH:
            op_type = bytes(r.chunk()).decode("utf-8")
        elif num == 5 and wire == _LENGTH:
            key, value = _parse_attribute(r.chunk())
            attrs[key] = value
        elif num == 7 and wire == _LENGTH:
            domain = bytes(r.chunk()).decode("utf-8")
        else:
            r.skip(wire)
    if domain not in ("", "ai.onnx"):
        raise EmbeddingError(f"unsupported op domain {domain!r}")
    return _Node(op_type, name, tuple(inputs), tuple(outputs), attrs)


def _parse_graph(data: memoryview) -> _Graph:
    r = _Reader(data)
    graph = _Graph()
    while not r.done():
        num, wire = r.tag()
        if num == 1 and wire == _LENGTH:
            graph.nodes.append(_parse_node(r.chunk()))
        elif num == 5 and wire == _LENGTH:
            chunk = r.chunk()
            tensor = _parse_tensor(chunk)
            name = _tensor_name(chunk)
            graph.initializers[name] = tensor
        elif num == 11 and wire == _LENGTH:
            graph.inputs.append(_parse_value_info_name(r.chunk()))
        elif num == 12 and wire == _LENGTH:
            graph.outputs.append(_parse_value_info_name(r.chunk()))
        else:
            r.skip(wire)
    return graph


def _tensor_name(data: memoryview) -> str:
    r = _Reader(data)
    while not r.done():
        num, wire = r.tag()
        if num == 8 and wire == _LENGTH:
            return bytes(r.chunk()).decode("utf-8")
        r.skip(wire)
    return ""


def parse_model(data: bytes) -> _Graph:
    """Decode an ONNX ModelProto's graph. Raises EmbeddingError on any
    structure this evaluator cannot honor."""
    r = _Reader(data)
    graph: _Graph | None = None
    while not r.done():
        num, wire = r.tag()
        if num == 7 and wire == _LENGTH:
            graph = _parse_graph(r.chunk())
        else:
            r.skip(wire)
    if graph is None:
        raise EmbeddingError("model file contains no graph")
    # initializers also appear in the input list; feeds are what remains
    graph.inputs = [i for i in graph.inputs if i not in graph.initializers]
    return graph


# --- numpy op interpreter ---------------------------------------------------


def _axes_arg(inputs: list, attrs: dict, index: int = 1):
    """Axes come as a second input (opset >= 13) or an attribute (older)."""
    if len(inputs) > index and inputs[index] is not None:
        return [int(a) for a in np.asarray(inputs[index]).ravel()]
    axes = attrs.get("axes")
    return None if axes is None else [int(a) for a in axes]


def _reshape(x: np.ndarray, shape: np.ndarray, allowzero: int) -> np.ndarray:
    target = [int(s) for s in np.asarray(shape).ravel()]
    if not allowzero:
        target = [
            x.shape[i] if s == 0 else s for i, s in enumerate(target)
        ]
    return x.reshape(target)


def _expand(x: np.ndarray, shape: np.ndarray) -> np.ndarray:
    target = tuple(int(s) for s in np.asarray(shape).ravel())
    return np.broadcast_to(x, np.broadcast_shapes(x.shape, target))


def _softmax(x: np.ndarray, axis: int) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def _layer_norm(node: _Node, inputs: list) -> np.ndarray:
    x, scale = inputs[0], inputs[1]
    bias = inputs[2] if len(inputs) > 2 and inputs[2] is not None else None
    axis = int(node.attrs.get("axis", -1)) % x.ndim
    eps = float(node.attrs.get("epsilon", 1e-5))
    axes = tuple(range(axis, x.ndim))
    mean = x.mean(axis=axes, keepdims=True)
    centered = x - mean
    var = np.mean(centered * centered, axis=axes, keepdims=True)
    out = centered / np.sqrt(var + eps) * scale
    if bias is not None:
        out = out + bias
    return out.astype(x.dtype, copy=False)


def _erf(x: np.ndarray) -> np.ndarray:
    from scipy.special import erf

    return erf(x).astype(x.dtype, copy=False)


def _slice(inputs: list) -> np.ndarray:
    x = inputs[0]
    starts = [int(v) for v in np.asarray(inputs[1]).ravel()]
    ends = [int(v) for v in np.asarray(inputs[2]).ravel()]
    if len(inputs) > 3 and inputs[3] is not None:
        axes = [int(v) % x.ndim for v in np.asarray(inputs[3]).ravel()]
    else:
        axes = list(range(len(starts)))
    if len(inputs) > 4 and inputs[4] is not None:
        steps = [int(v) for v in np.asarray(inputs[4]).ravel()]
    else:
        steps = [1] * len(starts)
    spec = [slice(None)] * x.ndim
    for a, s, e, st in zip(axes, starts, ends, steps):
        spec[a] = slice(s, e, st)
    return x[tuple(spec)]


def _cumsum(node: _Node, inputs: list) -> np.ndarray:
    x = inputs[0]
    axis = int(np.asarray(inputs[1]))
    if int(node.attrs.get("reverse", 0)):
        x = np.flip(x, axis=axis)
    out = np.cumsum(x, axis=axis, dtype=x.dtype)
    if int(node.attrs.get("exclusive", 0)):
        out = np.roll(out, 1, axis=axis)
        index = [slice(None)] * x.ndim
        index[axis] = 0
        out[tuple(index)] = 0
    if int(node.attrs.get("reverse", 0)):
        out = np.flip(out, axis=axis)
    return out


def _gemm(node: _Node, inputs: list) -> np.ndarray:
    a, b = inputs[0], inputs[1]
    if int(node.attrs.get("transA", 0)):
        a = a.T
    if int(node.attrs.get("transB", 0)):
        b = b.T
    out = float(node.attrs.get("alpha", 1.0)) * (a @ b)
    if len(inputs) > 2 and inputs[2] is not None:
        out = out + float(node.attrs.get("beta", 1.0)) * inputs[2]
    return out


def _reduce_mean(node: _Node, inputs: list) -> np.ndarray:
    axes = _axes_arg(inputs, node.attrs)
    keep = bool(node.attrs.get("keepdims", 1))
    axis = None if axes is None else tuple(axes)
    return inputs[0].mean(axis=axis, keepdims=keep)


def _reduce_sum(node: _Node, inputs: list) -> np.ndarray:
    axes = _axes_arg(inputs, node.attrs)
    keep = bool(node.attrs.get("keepdims", 1))
    axis = None if axes is None else tuple(axes)
    return inputs[0].sum(axis=axis, keepdims=keep)


def _div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if np.issubdtype(np.asarray(a).dtype, np.integer):
        # ONNX integer division truncates toward zero
        return (np.sign(a) * np.sign(b) * (np.abs(a) // np.abs(b))).astype(
            np.asarray(a).dtype
        )
    return a / b


def _constant(node: _Node) -> np.ndarray:
    attrs = node.attrs
    if "value" in attrs:
        return attrs["value"]
    if "value_int" in attrs:
        return np.asarray(attrs["value_int"], dtype=np.int64)
    if "value_ints" in attrs:
        return np.asarray(attrs["value_ints"], dtype=np.int64)
    if "value_float" in attrs:
        return np.asarray(attrs["value_float"], dtype=np.float32)
    if "value_floats" in attrs:
        return np.asarray(attrs["value_floats"], dtype=np.float32)
    raise EmbeddingError(f"Constant node {node.name!r} carries no value")


def _constant_of_shape(node: _Node, inputs: list) -> np.ndarray:
    shape = tuple(int(s) for s in np.asarray(inputs[0]).ravel())
    fill = node.attrs.get("value")
    if fill is None:
        return np.zeros(shape, dtype=np.float32)
    fill = np.asarray(fill)
    return np.full(shape, fill.ravel()[0], dtype=fill.dtype)


def _shape(node: _Node, inputs: list) -> np.ndarray:
    dims = inputs[0].shape
    rank = len(dims)

    def _clamp(v: int) -> int:
        if v < 0:
            v += rank
        return min(max(v, 0), rank)

    start = _clamp(int(node.attrs.get("start", 0)))
    end = node.attrs.get("end")
    end = rank if end is None else _clamp(int(end))
    return np.asarray(dims[start:end], dtype=np.int64)


def _unsqueeze(node: _Node, inputs: list) -> np.ndarray:
    x = inputs[0]
    axes = _axes_arg(inputs, node.attrs) or []
    out_rank = x.ndim + len(axes)
    axes = sorted(a % out_rank for a in axes)
    for a in axes:
        x = np.expand_dims(x, a)
    return x


def _squeeze(node: _Node, inputs: list) -> np.ndarray:
    x = inputs[0]
    axes = _axes_arg(inputs, node.attrs)
    if axes is None:
        return np.squeeze(x)
    return np.squeeze(x, axis=tuple(a % x.ndim for a in axes))


def _gather(node: _Node, inputs: list) -> np.ndarray:
    axis = int(node.attrs.get("axis", 0))
    indices = np.asarray(inputs[1], dtype=np.int64)
    return np.take(inputs[0], indices, axis=axis)


def _cast(node: _Node, inputs: list) -> np.ndarray:
    dtype = _DTYPES.get(int(node.attrs["to"]))
    if dtype is None:
        raise EmbeddingError(f"Cast to unsupported type {node.attrs['to']}")
    return inputs[0].astype(dtype)


def _eval_node(node: _Node, inputs: list) -> tuple[np.ndarray, ...]:
    op = node.op_type
    if op == "Add":
        return (inputs[0] + inputs[1],)
    if op == "Sub":
        return (inputs[0] - inputs[1],)
    if op == "Mul":
        return (inputs[0] * inputs[1],)
    if op == "Div":
        return (_div(inputs[0], inputs[1]),)
    if op == "MatMul":
        return (np.matmul(inputs[0], inputs[1]),)
    if op == "Gemm":
        return (_gemm(node, inputs),)
    if op == "Pow":
        return ((inputs[0] ** inputs[1]).astype(inputs[0].dtype, copy=False),)
    if op == "Sqrt":
        return (np.sqrt(inputs[0]),)
    if op == "Neg":
        return (-inputs[0],)
    if op == "Erf":
        return (_erf(inputs[0]),)
    if op == "Tanh":
        return (np.tanh(inputs[0]),)
    if op == "Sigmoid":
        return ((1.0 / (1.0 + np.exp(-inputs[0]))).astype(inputs[0].dtype),)
    if op == "Relu":
        return (np.maximum(inputs[0], 0),)
    if op == "Softmax":
        return (_softmax(inputs[0], int(node.attrs.get("axis", -1))),)
    if op == "LayerNormalization":
        return (_layer_norm(node, inputs),)
    if op == "ReduceMean":
        return (_reduce_mean(node, inputs),)
    if op == "ReduceSum":
        return (_reduce_sum(node, inputs),)
    if op == "Identity":
        return (inputs[0],)
    if op == "Constant":
        return (_constant(node),)
    if op == "ConstantOfShape":
        return (_constant_of_shape(node, inputs),)
    if op == "Shape":
        return (_shape(node, inputs),)
    if op == "Reshape":
        return (_reshape(inputs[0], inputs[1], int(node.attrs.get("allowzero", 0))),)
    if op == "Transpose":
        perm = node.attrs.get("perm")
        return (np.transpose(inputs[0], axes=perm),)
    if op == "Concat":
        return (np.concatenate(inputs, axis=int(node.attrs["axis"])),)
    if op == "Gather":
        return (_gather(node, inputs),)
    if op == "GatherElements":
        axis = int(node.attrs.get("axis", 0))
        indices = np.asarray(inputs[1], dtype=np.int64)
        return (np.take_along_axis(inputs[0], indices, axis=axis),)
    if op == "Unsqueeze":
        return (_unsqueeze(node, inputs),)
    if op == "Squeeze":
        return (_squeeze(node, inputs),)
    if op == "Slice":
        return (_slice(inputs),)
    if op == "Expand":
        return (_expand(inputs[0], inputs[1]),)
    if op == "Cast":
        return (_cast(node, inputs),)
    if op == "Equal":
        return (inputs[0] == inputs[1],)
    if op == "Less":
        return (inputs[0] < inputs[1],)
    if op == "Greater":
        return (inputs[0] > inputs[1],)
    if op == "LessOrEqual":
        return (inputs[0] <= inputs[1],)
    if op == "GreaterOrEqual":
        return (inputs[0] >= inputs[1],)
    if op == "Not":
        return (~inputs[0].astype(np.bool_),)
    if op == "And":
        return (inputs[0].astype(np.bool_) & inputs[1].astype(np.bool_),)
    if op == "Or":
        return (inputs[0].astype(np.bool_) | inputs[1].astype(np.bool_),)
    if op == "Where":
        return (np.where(inputs[0], inputs[1], inputs[2]),)
    if op == "IsNaN":
        return (np.isnan(inputs[0]),)
    if op == "IsInf":
        return (np.isinf(inputs[0]),)
    if op == "CumSum":
        return (_cumsum(node, inputs),)
    if op == "Flatten":
        axis = int(node.attrs.get("axis", 1)) % (inputs[0].ndim + 1)
        lead = int(np.prod(inputs[0].shape[:axis], dtype=np.int64))
        return (inputs[0].reshape(lead, -1),)
    if op == "Tile":
        reps = [int(v) for v in np.asarray(inputs[1]).ravel()]
        return (np.tile(inputs[0], reps),)
    if op == "Split":
        axis = int(node.attrs.get("axis", 0))
        if len(inputs) > 1 and inputs[1] is not None:
            sizes = [int(v) for v in np.asarray(inputs[1]).ravel()]
            splits = np.cumsum(sizes)[:-1]
        elif "split" in node.attrs:
            splits = np.cumsum([int(v) for v in node.attrs["split"]])[:-1]
        else:
            splits = len(node.outputs)
        return tuple(np.array_split(inputs[0], splits, axis=axis))
    if op == "Range":
        return (
            np.arange(
                np.asarray(inputs[0]).item(),
                np.asarray(inputs[1]).item(),
                np.asarray(inputs[2]).item(),
                dtype=inputs[0].dtype,
            ),
        )
    if op == "Trilu":
        k = int(np.asarray(inputs[1])) if len(inputs) > 1 else 0
        if int(node.attrs.get("upper", 1)):
            return (np.triu(inputs[0], k),)
        return (np.tril(inputs[0], k),)
    raise EmbeddingError(f"unsupported op {op!r} (node {node.name!r})")


def run_graph(
    graph: _Graph, feeds: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Evaluate the graph on the given feeds; returns the declared outputs.

    Nodes are stored in topological order per the ONNX contract, so one
    forward pass suffices.
    """
    missing = [name for name in graph.inputs if name not in feeds]
    if missing:
        raise EmbeddingError(f"missing graph inputs: {missing}")
    values: dict[str, np.ndarray] = dict(graph.initializers)
    for name, arr in feeds.items():
        values[name] = np.asarray(arr)
    for node in graph.nodes:
        args = []
        for name in node.inputs:
            if name == "":
                args.append(None)  # optional input left empty
            elif name in values:
                args.append(values[name])
            else:
                raise EmbeddingError(
                    f"node {node.name!r} reads undefined value {name!r}"
                )
        results = _eval_node(node, args)
        for out_name, result in zip(node.outputs, results):
            if out_name:
                values[out_name] = result
    out = {}
    for name in graph.outputs:
        if name not in values:
            raise EmbeddingError(f"graph output {name!r} was never produced")
        out[name] = values[name]
    return out


# --- backend ----------------------------------------------------------------


def load_manifest(backend_dir: str | Path) -> dict:
    """Read and structurally validate a backend directory's manifest."""
    path = Path(backend_dir) / "manifest.json"
    if not path.is_file():
        raise EmbeddingError(f"no manifest.json under {backend_dir}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise EmbeddingError(f"malformed manifest.json: {e}") from e
    missing = [k for k in MANIFEST_KEYS if k not in manifest]
    if missing:
        raise EmbeddingError(f"manifest.json missing keys: {missing}")
    return manifest


class OnnxBackend:
    """Embedding backend over an exported encoder directory.

    Expects ``model.onnx`` (token ids + attention mask -> token vectors),
    ``tokenizer.json`` loadable by the ``tokenizers`` package, and
    ``manifest.json`` whose checksum must match the model file. Inputs are
    padded to the exported static sequence length; only the vectors of
    real tokens are returned.
    """

    normalizes_output = False

    def __init__(
        self,
        backend_dir: str | Path,
        expected_dim: int | None = None,
        model_id: str | None = None,
    ):
        directory = Path(backend_dir)
        manifest = load_manifest(directory)
        self.dim = int(manifest["dim"])
        if expected_dim is not None and self.dim != expected_dim:
            raise EmbeddingError(
                f"manifest declares dim {self.dim}, caller expects {expected_dim}"
            )
        self.model_id = model_id or str(manifest["model_id"])
        self.sequence_length = int(manifest["sequence_length"])
        self.pad_token_id = int(manifest["pad_token_id"])
        self.input_names = list(manifest["inputs"])

        model_path = directory / "model.onnx"
        if not model_path.is_file():
            raise EmbeddingError(f"no model.onnx under {directory}")
        blob = model_path.read_bytes()
        digest = hashlib.sha256(blob).hexdigest()
        if digest != manifest["checksum_sha256"]:
            raise EmbeddingError(
                f"model.onnx checksum {digest} does not match manifest "
                f"{manifest['checksum_sha256']}"
            )
        self.graph = parse_model(blob)
        unknown = [n for n in self.input_names if n not in self.graph.inputs]
        if unknown:
            raise EmbeddingError(
                f"manifest inputs {unknown} not found in the graph "
                f"(graph has {self.graph.inputs})"
            )

        tok_path = directory / "tokenizer.json"
        if not tok_path.is_file():
            raise EmbeddingError(f"no tokenizer.json under {directory}")
        try:
            from tokenizers import Tokenizer
        except ImportError as e:
            raise EmbeddingError(
                "the 'tokenizers' package is required for transformer "
                "backends (pip install provdetect[transformer])"
            ) from e
        self._tokenizer = Tokenizer.from_file(str(tok_path))

    def token_vectors(self, text: str, max_tokens: int) -> np.ndarray:
        ids = self._tokenizer.encode(text).ids
        if not ids:
            raise EmbeddingError("tokenizer produced no tokens")
        limit = min(max_tokens, self.sequence_length)
        if len(ids) > limit:
            logger.debug(
                "head-truncating sentence %r... from %d to %d tokens",
                text[:32], len(ids), limit,
            )
            ids = ids[:limit]
        n = len(ids)
        length = self.sequence_length
        input_ids = np.full((1, length), self.pad_token_id, dtype=np.int64)
        input_ids[0, :n] = ids
        mask = np.zeros((1, length), dtype=np.int64)
        mask[0, :n] = 1
        feeds: dict[str, np.ndarray] = {}
        for name in self.input_names:
            if name == "input_ids":
                feeds[name] = input_ids
            elif name == "attention_mask":
                feeds[name] = mask
            elif name == "token_type_ids":
                feeds[name] = np.zeros((1, length), dtype=np.int64)
            else:
                raise EmbeddingError(f"unsupported graph input {name!r}")
        outputs = run_graph(self.graph, feeds)
        hidden = outputs[self.graph.outputs[0]]
        if hidden.ndim != 3 or hidden.shape[2] != self.dim:
            raise EmbeddingError(
                f"graph output has shape {hidden.shape}, expected "
                f"(1, {length}, {self.dim})"
            )
        return np.asarray(hidden[0, :n, :], dtype=np.float64)
