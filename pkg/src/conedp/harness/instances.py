"""Self-describing JSON instance files.

One file holds the algebra descriptor, the constraint blocks, scalars,
objective, senses, and generator metadata.  Symmetric blocks are stored
as the packed upper triangle (row-major, diagonal included); floats go
through Python's shortest round-trip repr, so write -> read is exact.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from conedp.eja import AlgebraDescriptor, EjaElement, SymMatrix
from conedp.oracles import ScpInstance

__all__ = [
    "SCHEMA_VERSION",
    "pack_element",
    "unpack_element",
    "instance_to_dict",
    "instance_from_dict",
    "save_instance",
    "load_instance",
]

SCHEMA_VERSION = 1


def pack_element(x: EjaElement) -> list[list[float]]:
    """Per-factor block lists; symmetric blocks packed upper-triangular."""
    packed = []
    for factor, block in zip(x.algebra.factors, x.blocks):
        if isinstance(factor, SymMatrix):
            iu, ju = np.triu_indices(factor.r)
            packed.append(block[iu, ju].tolist())
        else:
            packed.append(block.tolist())
    return packed


def unpack_element(alg: AlgebraDescriptor, packed: list[list[float]]) -> EjaElement:
    if len(packed) != len(alg.factors):
        raise ValueError(
            f"expected {len(alg.factors)} blocks, got {len(packed)}"
        )
    blocks = []
    for factor, data in zip(alg.factors, packed):
        arr = np.asarray(data, dtype=float)
        if isinstance(factor, SymMatrix):
            expected = factor.r * (factor.r + 1) // 2
            if arr.shape != (expected,):
                raise ValueError(
                    f"packed symmetric block needs {expected} entries, got {arr.shape}"
                )
            m = np.zeros((factor.r, factor.r))
            iu, ju = np.triu_indices(factor.r)
            m[iu, ju] = arr
            m[ju, iu] = arr
            blocks.append(m)
        else:
            blocks.append(arr)
    return EjaElement(alg, blocks)


def instance_to_dict(instance: ScpInstance, metadata: dict[str, Any] | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "algebra": instance.algebra.spec,
        "constraints": [pack_element(a) for a in instance.constraints],
        "b": instance.scalars.tolist(),
        "c": pack_element(instance.objective),
        "sense": list(instance.senses),
        "metadata": dict(metadata or {}),
    }


def instance_from_dict(data: dict) -> tuple[ScpInstance, dict[str, Any]]:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {version!r}")
    alg = AlgebraDescriptor.from_spec(data["algebra"])
    constraints = tuple(unpack_element(alg, p) for p in data["constraints"])
    objective = unpack_element(alg, data["c"])
    instance = ScpInstance(
        algebra=alg,
        constraints=constraints,
        scalars=np.asarray(data["b"], dtype=float),
        objective=objective,
        senses=tuple(data["sense"]),
    )
    return instance, dict(data.get("metadata", {}))


def save_instance(
    path: str | Path, instance: ScpInstance, metadata: dict[str, Any] | None = None
) -> None:
    payload = instance_to_dict(instance, metadata)
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_instance(path: str | Path) -> tuple[ScpInstance, dict[str, Any]]:
    return instance_from_dict(json.loads(Path(path).read_text()))
