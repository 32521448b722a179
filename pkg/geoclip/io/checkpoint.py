"""
Binary snapshots of estimator state.

Layout (all little-endian)::

    magic     4 bytes   b"GCES"
    version   uint32    2
    kind      uint32    0 = full covariance, 1 = low rank, 2 = diagonal
    d         uint64
    k         uint64    rank (d for full and diagonal)
    steps     uint64
    batch     uint64
    beta1     float64
    beta2     float64   (beta3 for low rank)
    mean      d  float64
    payload   full: cov d×d | low rank: basis d×k, eigenvalues k, tail variance 1 | diagonal: var d

Matrices are row-major.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..core.errors import CheckpointError
from ..core.utils import logger
from ..estimator import DiagVarState, FullCovState, LowRankState

MAGIC = b"GCES"
VERSION = 2
_HEADER = struct.Struct("<4sIIQQQQdd")
_F64 = np.dtype("<f8")

_KINDS = {FullCovState: 0, LowRankState: 1, DiagVarState: 2}

EstimatorState = Union[FullCovState, LowRankState, DiagVarState]


def save_snapshot(state: EstimatorState, path: Union[str, Path]) -> Path:
    """Write an estimator state to ``path``.

    Returns:
        The path written.
    """
    path = Path(path)
    kind = _KINDS.get(type(state))
    if kind is None:
        raise TypeError(f"Cannot snapshot {type(state).__name__}")
    if kind == 1:
        k, second_beta = state.rank, state.beta3
        payload = [state.basis, state.eigenvalues, [state.tail_variance]]
    elif kind == 0:
        k, second_beta = state.dim, state.beta2
        payload = [state.cov]
    else:
        k, second_beta = state.dim, state.beta2
        payload = [state.var]

    path.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(MAGIC, VERSION, kind, state.dim, k, state.steps,
                          state.batch_size, state.beta1, second_beta)
    with open(path, 'wb') as f:
        f.write(header)
        for arr in [state.mean, *payload]:
            f.write(np.ascontiguousarray(arr, dtype=_F64).tobytes(order='C'))
    logger.debug(f"Wrote estimator snapshot {path} (kind={kind}, d={state.dim}, k={k})")
    return path


def load_snapshot(path: Union[str, Path]) -> EstimatorState:
    """Read an estimator state written by ``save_snapshot``.

    Raises:
        CheckpointError: on an unreadable file, a bad magic number, unknown version/kind
            or a truncated file.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"{path}: {e.strerror}") from e
    if len(data) < _HEADER.size:
        raise CheckpointError(f"{path}: file too short for a snapshot header")
    magic, version, kind, d, k, steps, batch, beta1, beta_b = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not an estimator snapshot")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported snapshot version {version}")

    sizes = {0: [d, d * d], 1: [d, d * k, k, 1], 2: [d, d]}.get(kind)
    if sizes is None:
        raise CheckpointError(f"{path}: unknown estimator kind {kind}")
    expected = _HEADER.size + 8 * sum(sizes)
    if len(data) != expected:
        raise CheckpointError(f"{path}: expected {expected} bytes, found {len(data)}")

    arrays, offset = [], _HEADER.size
    for count in sizes:
        arrays.append(np.frombuffer(data, dtype=_F64, count=count, offset=offset).astype(float))
        offset += 8 * count

    mean = arrays[0]
    if kind == 0:
        return FullCovState(mean, arrays[1].reshape(d, d), beta1=beta1, beta2=beta_b,
                            batch_size=batch, steps=steps)
    if kind == 1:
        return LowRankState(mean, arrays[1].reshape(d, k), arrays[2], beta1=beta1, beta3=beta_b,
                            batch_size=batch, steps=steps, tail_variance=float(arrays[3][0]))
    return DiagVarState(mean, arrays[1], beta1=beta1, beta2=beta_b, batch_size=batch, steps=steps)
