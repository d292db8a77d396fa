"""Writer/reader for the checker's weights container.

The checker stores tensor bundles in a small self-describing container:

    wts v1 <kind> <binary|text> <ntensors>\n
    meta <key> <value>\n                       (zero or more, before tensors)
    <name> <ndim> <dims...>\n                  (per tensor)
    <row-major little-endian float32 bytes>    (binary mode)
    <one line of %.9g floats>\n                (text mode)

Encoder bundles use kind ``gin`` with tensor order ``eps`` then, per layer,
``layer{i}.dense1.w`` (dim, width), ``layer{i}.dense1.b`` (dim,),
``layer{i}.dense2.w`` (dim, dim), ``layer{i}.dense2.b`` (dim,).  This module
implements that layout independently so the trainer ships no checker code;
byte-for-byte compatibility is covered by the parity tests.
"""

from __future__ import annotations

import numpy as np
import torch

from .model import GinEncoder

MAGIC = "wts"
VERSION = "v1"


class WeightsFormatError(ValueError):
    pass


def _tensor_list(model: GinEncoder) -> list[tuple[str, np.ndarray]]:
    with torch.no_grad():
        tensors: list[tuple[str, np.ndarray]] = [
            ("eps", model.eps.detach().cpu().numpy().astype(np.float32))
        ]
        for i in range(model.n_layers):
            d1 = model.dense1[i]
            d2 = model.dense2[i]
            tensors.append((f"layer{i}.dense1.w", d1.weight.detach().cpu().numpy().astype(np.float32)))
            tensors.append((f"layer{i}.dense1.b", d1.bias.detach().cpu().numpy().astype(np.float32)))
            tensors.append((f"layer{i}.dense2.w", d2.weight.detach().cpu().numpy().astype(np.float32)))
            tensors.append((f"layer{i}.dense2.b", d2.bias.detach().cpu().numpy().astype(np.float32)))
    return tensors


def write_container(kind: str, tensors: list[tuple[str, np.ndarray]]) -> bytes:
    out = [f"{MAGIC} {VERSION} {kind} binary {len(tensors)}\n".encode()]
    for name, arr in tensors:
        a = np.asarray(arr, dtype=np.float32)
        if not np.isfinite(a).all():
            raise WeightsFormatError(f"tensor {name!r} has non-finite values")
        dims = " ".join(str(d) for d in a.shape)
        out.append(f"{name} {a.ndim}{' ' + dims if a.ndim else ''}\n".encode())
        out.append(a.astype("<f4").tobytes(order="C"))
    return b"".join(out)


def export_weights(model: GinEncoder) -> bytes:
    """Serialize a trained encoder into the checker's ``gin`` weights bundle."""
    return write_container("gin", _tensor_list(model))


def read_container(data: bytes) -> tuple[str, list[tuple[str, np.ndarray]]]:
    """Parse any weights container back into (kind, named float32 tensors)."""
    pos = 0

    def read_line() -> str:
        nonlocal pos
        end = data.find(b"\n", pos)
        if end < 0:
            raise WeightsFormatError("unexpected end of file in header line")
        line = data[pos:end].decode("ascii", errors="replace")
        pos = end + 1
        return line

    header = read_line().split()
    if len(header) != 5 or header[0] != MAGIC:
        raise WeightsFormatError("not a weights file (bad magic line)")
    if header[1] != VERSION:
        raise WeightsFormatError(f"unsupported weights version {header[1]!r}")
    kind, mode, ntensors_s = header[2], header[3], header[4]
    if mode not in ("binary", "text"):
        raise WeightsFormatError(f"unknown weights mode {mode!r}")
    ntensors = int(ntensors_s)

    tensors: list[tuple[str, np.ndarray]] = []
    while len(tensors) < ntensors:
        fields = read_line().split()
        if not fields:
            continue
        if fields[0] == "meta":
            continue
        name = fields[0]
        ndim = int(fields[1])
        dims = tuple(int(x) for x in fields[2 : 2 + ndim])
        if len(dims) != ndim:
            raise WeightsFormatError(f"tensor {name!r}: dimension list does not match ndim")
        count = int(np.prod(dims, dtype=np.int64)) if dims else 1
        if mode == "binary":
            nbytes = count * 4
            if pos + nbytes > len(data):
                raise WeightsFormatError(f"truncated while reading tensor {name!r}")
            arr = np.frombuffer(data[pos : pos + nbytes], dtype="<f4").reshape(dims).copy()
            pos += nbytes
        else:
            parts = (read_line() if count else "").split()
            if len(parts) != count:
                raise WeightsFormatError(
                    f"tensor {name!r}: expected {count} values, found {len(parts)}")
            arr = np.array([np.float32(x) for x in parts], dtype=np.float32).reshape(dims)
        tensors.append((name, arr.astype(np.float32)))
    return kind, tensors


def load_weights(data: bytes) -> GinEncoder:
    """Rebuild a ``GinEncoder`` from exported bytes (inverse of export_weights)."""
    kind, tensors = read_container(data)
    if kind != "gin":
        raise WeightsFormatError(f"expected a 'gin' bundle, got kind {kind!r}")
    if not tensors or tensors[0][0] != "eps":
        raise WeightsFormatError("encoder bundle must start with the 'eps' tensor")
    eps = tensors[0][1]
    n_layers = eps.shape[0]
    expected = ["eps"] + [
        f"layer{i}.dense{k}.{p}" for i in range(n_layers) for k in (1, 2) for p in ("w", "b")
    ]
    names = [n for n, _ in tensors]
    if names != expected:
        raise WeightsFormatError(f"tensor names {names} do not match encoder layout")
    by_name = dict(tensors)
    first_w = by_name["layer0.dense1.w"]
    dim = first_w.shape[0]
    width = first_w.shape[1]
    model = GinEncoder(input_width=width, dim=dim, n_layers=n_layers)
    with torch.no_grad():
        model.eps.copy_(torch.from_numpy(eps))
        for i in range(n_layers):
            model.dense1[i].weight.copy_(torch.from_numpy(by_name[f"layer{i}.dense1.w"]))
            model.dense1[i].bias.copy_(torch.from_numpy(by_name[f"layer{i}.dense1.b"]))
            model.dense2[i].weight.copy_(torch.from_numpy(by_name[f"layer{i}.dense2.w"]))
            model.dense2[i].bias.copy_(torch.from_numpy(by_name[f"layer{i}.dense2.b"]))
    return model
