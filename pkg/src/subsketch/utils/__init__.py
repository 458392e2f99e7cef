import contextlib
import enum
import hashlib
import json
import os
import pathlib
import struct
import tempfile
import typing

import numpy as np


class CustomTypeEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, set):
            return sorted(obj)
        if isinstance(obj, pathlib.Path):
            return str(obj)
        if isinstance(obj, enum.Enum):
            return obj.value
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return None if not np.isfinite(obj) else float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return super().default(obj)


@contextlib.contextmanager
def atomic_write(path: str | pathlib.Path, mode: str = 'w', **kwargs) -> typing.Iterator[typing.IO]:
    # write to a sibling temp file, then rename over the target. An interrupted
    # write never leaves a partial file at path
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f'.{path.name}.', suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(fd, mode, **kwargs) as f:
            yield f
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.remove(tmp_name)
        raise


def _label_bytes(label: typing.Any) -> bytes:
    match label:
        case bool():
            return b'b' + (b'1' if label else b'0')
        case int():
            return b'i' + struct.pack('<q', label) if -2**63 <= label < 2**63 else b'I' + str(label).encode()
        case str():
            return b's' + label.encode('utf-8')
        case float():
            return b'f' + struct.pack('<d', label)
        case bytes():
            return b'y' + label
        case _:
            raise TypeError(f'Cannot hash a label of type {type(label).__name__} ({label!r})')


def hash64(*labels: typing.Any) -> int:
    """Platform-independent 64-bit hash of a sequence of int/str/float/bytes labels."""
    h = hashlib.blake2b(digest_size=8)
    for label in labels:
        b = _label_bytes(label)
        h.update(struct.pack('<I', len(b)))
        h.update(b)
    return int.from_bytes(h.digest(), 'little')
