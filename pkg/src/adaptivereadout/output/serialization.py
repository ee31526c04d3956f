"""JSON and CSV input/output for models, policies, partitions and reports.

All JSON is written with ``indent=2`` and sorted keys and floats keep full
``repr`` precision, so rerunning a command produces byte-identical files.
Writes go to a temporary file first and are moved into place atomically.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.core.types import ExpandedHmm, Hmm, validate
from adaptivereadout.policies.base import Policy
from adaptivereadout.policies.lookup import LookupPolicy
from adaptivereadout.policies.min_entropy import MinEntropyPolicy
from adaptivereadout.policies.static import StaticPolicy
from adaptivereadout.structs.permutation import ActionSet

PathLike = Union[str, Path]


def _atomic_write(path: PathLike, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_json(path: PathLike, data: Dict[str, Any], config: Optional[Dict[str, Any]] = None) -> None:
    """Write a JSON document, embedding the resolved run configuration."""
    document = dict(data)
    if config is not None:
        document["config"] = config
    _atomic_write(path, dumps(document))


def read_json(path: PathLike) -> Dict[str, Any]:
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ModelValidationError(f"{path}: expected a JSON object")
    return data


def write_csv(
    path: PathLike, rows: Sequence[Sequence[Any]], config: Optional[Dict[str, Any]] = None
) -> None:
    """Write CSV rows, preceded by a ``# config:`` comment line when given."""
    buffer = io.StringIO()
    if config is not None:
        buffer.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    _atomic_write(path, buffer.getvalue())


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    """Read CSV rows as dictionaries, skipping ``#`` comment lines."""
    with open(path, newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def model_to_json(model: Union[Hmm, ExpandedHmm]) -> Dict[str, Any]:
    """JSON form of a plain or expanded model."""
    if isinstance(model, Hmm):
        model = ExpandedHmm.trivial(model)
    hmm = model.hmm
    data: Dict[str, Any] = {
        "states": list(hmm.state_labels)
        if hmm.state_labels is not None
        else [str(t) for t in range(hmm.num_states)],
        "outputs": list(hmm.output_labels)
        if hmm.output_labels is not None
        else [str(y) for y in range(hmm.num_outputs)],
        "trans": hmm.trans.tolist(),
        "out": hmm.out.tolist(),
        "prior": hmm.prior.tolist(),
        "permutations": {k: list(v) for k, v in model.permutations.items()},
    }
    if model.rho is not None:
        data["num_physical"] = model.num_physical
        data["alpha"] = model.alpha.tolist()
        data["rho"] = model.rho.tolist()
        if model.physical_labels is not None:
            data["physical_states"] = list(model.physical_labels)
    if model.bins is not None:
        data["bins"] = [list(b) for b in model.bins]
    return data


def model_from_json(data: Dict[str, Any]) -> ExpandedHmm:
    """Create a validated ExpandedHmm from JSON.

    Documents without ``alpha``/``rho`` are plain HMMs and are wrapped
    without output memory.

    Raises:
        ModelValidationError: If fields are missing or invariants fail
    """
    try:
        hmm = Hmm(
            trans=np.array(data["trans"], dtype=float),
            out=np.array(data["out"], dtype=float),
            prior=np.array(data["prior"], dtype=float),
            state_labels=tuple(data["states"]) if "states" in data else None,
            output_labels=tuple(data["outputs"]) if "outputs" in data else None,
        )
        perms = {k: tuple(v) for k, v in data.get("permutations", {}).items()}
        bins = data.get("bins")
        if "rho" in data:
            model = ExpandedHmm(
                hmm=hmm,
                num_physical=int(data["num_physical"]),
                alpha=np.array(data["alpha"]),
                rho=np.array(data["rho"]),
                bins=None if bins is None else tuple(tuple(b) for b in bins),
                permutations=perms,
                physical_labels=tuple(data["physical_states"])
                if "physical_states" in data
                else None,
            )
        else:
            model = ExpandedHmm.trivial(hmm, perms)
            if bins is not None:
                model = ExpandedHmm(
                    hmm=hmm,
                    num_physical=model.num_physical,
                    alpha=model.alpha,
                    bins=tuple(tuple(b) for b in bins),
                    permutations=perms,
                    physical_labels=model.physical_labels,
                )
    except (KeyError, TypeError) as e:
        raise ModelValidationError(f"invalid model document: missing or malformed {e}") from e
    result = validate(model)
    assert isinstance(result, ExpandedHmm)
    return result


def load_model(path: PathLike) -> ExpandedHmm:
    return model_from_json(read_json(path))


def save_model(
    path: PathLike, model: Union[Hmm, ExpandedHmm], config: Optional[Dict[str, Any]] = None
) -> None:
    write_json(path, model_to_json(model), config)


def policy_from_json(data: Dict[str, Any], model: Optional[ExpandedHmm] = None) -> Policy:
    """Rebuild a policy from its JSON descriptor.

    Look-up tables are self-contained; static and min-entropy descriptors
    name their action set. Min-entropy policies need the model.

    Raises:
        ModelValidationError: On unknown kinds or a missing model
    """
    kind = data.get("kind")
    if kind == LookupPolicy.kind:
        return LookupPolicy.from_json(data)
    actions = ActionSet.from_json(data["actions"])
    if kind == StaticPolicy.kind:
        sequence = data.get("sequence")
        return StaticPolicy(actions, sequence, data.get("name"))
    if kind == MinEntropyPolicy.kind:
        if model is None:
            raise ModelValidationError("a min-entropy policy needs the model it runs on")
        return MinEntropyPolicy(model, actions, int(data.get("lookahead", 2)))
    raise ModelValidationError(f"unknown policy kind '{kind}'")


def load_policy(path: PathLike, model: Optional[ExpandedHmm] = None) -> Policy:
    return policy_from_json(read_json(path), model)
