"""Internal helpers: deterministic seeding, parallel maps, number formatting."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Mapping, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
U = TypeVar("U")

__all__ = [
    "stable_seed",
    "rng_for",
    "thread_count",
    "parallel_map",
    "fmt_float",
    "to_json",
]


def stable_seed(*parts: object) -> int:
    """Derive a 64-bit seed from a tuple of ints/strings, stably across runs.

    Uses SHA-256 of the canonical string form so that the same logical key
    (e.g. ``(base_seed, group_index)`` or ``(base_seed, feature_label)``)
    always produces the same stream regardless of process, platform, or
    hash randomization.
    """
    canon = "\x1f".join(f"{type(p).__name__}:{p}" for p in parts)
    digest = hashlib.sha256(canon.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(*parts: object) -> np.random.Generator:
    """A fresh, deterministic Generator keyed by ``parts`` (see stable_seed)."""
    return np.random.default_rng(np.random.SeedSequence(stable_seed(*parts)))


def thread_count(requested: int | None = None) -> int:
    """Resolve the worker count: explicit arg, else SNN_THREADS, else CPUs."""
    if requested is not None:
        n = int(requested)
    else:
        env = os.environ.get("SNN_THREADS", "").strip()
        if env:
            try:
                n = int(env)
            except ValueError as exc:
                raise ValueError(f"SNN_THREADS must be an integer, got {env!r}") from exc
        else:
            n = os.cpu_count() or 1
    return max(1, n)


def parallel_map(
    fn: Callable[[T], U],
    items: Sequence[T],
    threads: int | None = None,
    initializer: Callable[..., None] | None = None,
    initargs: tuple = (),
) -> list[U]:
    """Map ``fn`` over ``items`` with an optional process pool.

    Results are returned in input order, so the outcome is independent of
    worker scheduling. ``fn`` receives everything it needs through its single
    argument (typically an index plus a seed) or through module state set up
    by ``initializer`` (run once per worker — and once in-process for serial
    runs). With one worker the map runs in-process, which keeps
    single-threaded runs trivially deterministic and debuggable.
    ``threads=None`` resolves via SNN_THREADS / CPU count.
    """
    n = thread_count(threads)
    items = list(items)
    if n <= 1 or len(items) <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * n))
    with ProcessPoolExecutor(
        max_workers=min(n, len(items)), initializer=initializer, initargs=initargs
    ) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def fmt_float(x: float) -> str:
    """Serialize a float with 17 significant digits (exact binary64 round-trip)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    xf = float(x)
    if np.isnan(xf):
        return "nan"
    if np.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    return format(xf, ".17g")


def to_json(obj: object, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats.

    Key order is preserved as given (callers pass explicitly ordered dicts),
    so equal inputs always serialize to byte-identical text.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(inner + to_json(v, indent + 1) for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = ",\n".join(
            f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}"
            for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
