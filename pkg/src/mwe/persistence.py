"""Binary checkpoints and word2vec-style text export.

Checkpoint layout, little-endian throughout::

    magic      4 bytes   b"MWE1"
    version    u64
    n, m, d, s u64 x 4
    a, k       f64 x 2
    epoch      u64
    seed       u64
    vocabulary n x (u64 byte length, UTF-8 bytes, u64 frequency)
    relations  m x (u64 byte length, UTF-8 bytes)
    tensors    f64, C order: center_head, center_tail, local_head,
               local_tail, xform_head, xform_tail

Full field tables for this and the text formats are in ``docs/formats.md``.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .evaluate import word_vectors
from .model import ModelParams, param_count
from .vocab import RelationRegistry, Vocabulary

MAGIC = b"MWE1"
VERSION = 1
_HEADER = struct.Struct("<4s5Q2d2Q")
HEADER_SIZE = _HEADER.size
_U64 = struct.Struct("<Q")


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


@dataclass(frozen=True)
class CheckpointHeader:
    version: int
    n: int
    m: int
    d: int
    s: int
    a: float
    k: float
    epoch: int
    seed: int

    @property
    def param_count(self) -> int:
        return param_count(self.n, self.m, self.d, self.s)


def _string_blocks(vocab: Vocabulary, rels: RelationRegistry) -> bytes:
    parts = []
    for w, f in zip(vocab.words, vocab.freqs):
        b = w.encode("utf-8")
        parts += [_U64.pack(len(b)), b, _U64.pack(f)]
    for r in rels.relations:
        b = r.encode("utf-8")
        parts += [_U64.pack(len(b)), b]
    return b"".join(parts)


def checkpoint_size(vocab: Vocabulary, rels: RelationRegistry, d: int, s: int) -> int:
    """Exact byte size of a checkpoint for the given vocabulary and dimensions."""
    return (HEADER_SIZE + len(_string_blocks(vocab, rels))
            + 8 * param_count(vocab.n, rels.m, d, s))


def save_checkpoint(params: ModelParams, vocab: Vocabulary, rels: RelationRegistry, path,
                    epoch: int = 0, seed: int = 0) -> None:
    if params.n != vocab.n or params.m != rels.m:
        raise ValueError(f"model has n={params.n}, m={params.m} but vocabulary/registry "
                         f"have n={vocab.n}, m={rels.m}")
    header = _HEADER.pack(MAGIC, VERSION, params.n, params.m, params.d, params.s,
                          params.a, params.k, epoch, seed & 0xFFFFFFFFFFFFFFFF)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(_string_blocks(vocab, rels))
            for t in params.tensors():
                fh.write(np.ascontiguousarray(t, dtype="<f8").tobytes())
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write checkpoint: {exc.strerror}", str(path)) from exc


def _parse_header(buf: bytes, path) -> CheckpointHeader:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise CheckpointError(f"{path}: not an MWE checkpoint")
    if len(buf) < HEADER_SIZE:
        raise CheckpointError(f"{path}: file too short for header ({len(buf)} < {HEADER_SIZE} bytes)")
    _, version, n, m, d, s, a, k, epoch, seed = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise CheckpointVersionError(f"{path}: checkpoint version {version}, this build reads {VERSION}")
    return CheckpointHeader(version, n, m, d, s, a, k, epoch, seed)


def read_header(path) -> CheckpointHeader:
    with open(path, "rb") as fh:
        return _parse_header(fh.read(HEADER_SIZE), path)


def load_checkpoint(path, with_header: bool = False):
    """Load ``(params, vocab, rels)``; append the header when ``with_header`` is set."""
    with open(path, "rb") as fh:
        buf = fh.read()
    hdr = _parse_header(buf, path)
    pos = HEADER_SIZE

    def take(nbytes):
        nonlocal pos
        if pos + nbytes > len(buf):
            raise CheckpointError(f"{path}: truncated file (need {pos + nbytes} bytes, have {len(buf)})")
        out = buf[pos:pos + nbytes]
        pos += nbytes
        return out

    words, freqs, names = [], [], []
    for _ in range(hdr.n):
        (length,) = _U64.unpack(take(8))
        words.append(take(length).decode("utf-8"))
        (freq,) = _U64.unpack(take(8))
        freqs.append(freq)
    for _ in range(hdr.m):
        (length,) = _U64.unpack(take(8))
        names.append(take(length).decode("utf-8"))
    expected = pos + 8 * hdr.param_count
    if len(buf) != expected:
        kind = "truncated file" if len(buf) < expected else "trailing bytes after tensors"
        raise CheckpointError(f"{path}: {kind} (expected {expected} bytes, have {len(buf)})")
    n, m, d, s = hdr.n, hdr.m, hdr.d, hdr.s
    shapes = [(n, d), (n, d), (m, n, s), (m, n, s), (m, s, d), (m, s, d)]
    tensors = []
    for shape in shapes:
        count = int(np.prod(shape))
        arr = np.frombuffer(take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
        tensors.append(arr)
    params = ModelParams(*tensors, a=hdr.a, k=hdr.k)
    result = (params, Vocabulary(tuple(words), tuple(freqs)), RelationRegistry(tuple(names)))
    return result + (hdr,) if with_header else result


def export_text(params: ModelParams, vocab: Vocabulary, rels: RelationRegistry, selector: str,
                role: str, path) -> int:
    """Write ``<rows> <dim>`` then ``token v1 ... vdim`` lines; returns the dimension.

    ``selector`` is ``"center"`` or a relation name; relational rows are
    labelled ``word@relation``.
    """
    mat = word_vectors(params, selector, role, rels)
    suffix = "" if selector == "center" else f"@{selector}"
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{mat.shape[0]} {mat.shape[1]}\n")
            for w, row in zip(vocab.words, mat):
                fh.write(w + suffix + " " + " ".join(f"{x:.6f}" for x in row) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write export: {exc.strerror}", str(path)) from exc
    return mat.shape[1]


def load_text(path):
    """Read a text export back into ``(tokens, matrix)``."""
    with open(path, encoding="utf-8") as fh:
        rows, dim = (int(x) for x in fh.readline().split())
        tokens = []
        mat = np.empty((rows, dim))
        for i, line in enumerate(fh):
            parts = line.rstrip("\n").split(" ")
            tokens.append(parts[0])
            mat[i] = [float(x) for x in parts[1:]]
    return tokens, mat
