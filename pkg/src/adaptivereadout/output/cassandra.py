"""Reader and writer for the classic ``.pomdp`` text format.

The writer emits ``discount``, ``values``, ``states``, ``actions`` and
``observations``, then ``start:`` (the last preamble entry, ahead of every
parameter block), one ``T:`` and one ``O:`` matrix block per action and one
``R:`` line per nonzero reward. The reader accepts that
output plus the common single-row and single-entry forms of ``T:``/``O:``,
``identity``/``uniform`` matrices, and names or indices for every reference.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from adaptivereadout.core.errors import ModelValidationError
from adaptivereadout.output.pomdp import PomdpModel

PathLike = Union[str, Path]


def _fmt(value: float) -> str:
    return repr(float(value))


def _row(values: Sequence[float]) -> str:
    return " ".join(_fmt(v) for v in values)


def format_cassandra(model: PomdpModel) -> str:
    """Render a POMDP in the ``.pomdp`` text format."""
    lines: List[str] = []
    if model.horizon:
        lines.append(f"# horizon: {model.horizon}")
    lines.append(f"discount: {_fmt(model.discount)}")
    lines.append("values: reward")
    lines.append("states: " + " ".join(model.states))
    lines.append("actions: " + " ".join(model.actions))
    lines.append("observations: " + " ".join(model.observations))
    lines.append("")
    lines.append("start:")
    lines.append(_row(model.start))
    lines.append("")
    for a, name in enumerate(model.actions):
        lines.append(f"T: {name}")
        lines.extend(_row(row) for row in model.trans[a])
        lines.append("")
    for a, name in enumerate(model.actions):
        lines.append(f"O: {name}")
        lines.extend(_row(row) for row in model.obs[a])
        lines.append("")
    for a, name in enumerate(model.actions):
        for s in np.flatnonzero(model.reward[a]):
            lines.append(f"R: {name} : {model.states[s]} : * : * {_fmt(model.reward[a, s])}")
    return "\n".join(lines) + "\n"


def write_cassandra(model: PomdpModel, path: PathLike) -> None:
    """Write a POMDP to ``path`` in the ``.pomdp`` text format."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(format_cassandra(model))


class CassandraParser:
    """Line-oriented parser for ``.pomdp`` files."""

    def __init__(self, text: str) -> None:
        self.horizon = 0
        self.lines: List[str] = []
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("# horizon:"):
                self.horizon = int(line.split(":", 1)[1])
                continue
            if line.startswith("#") or not line:
                continue
            self.lines.append(line)
        self.discount = 1.0
        self.states: List[str] = []
        self.actions: List[str] = []
        self.observations: List[str] = []
        self.trans: Optional[np.ndarray] = None
        self.obs: Optional[np.ndarray] = None
        self.reward: Optional[np.ndarray] = None
        self.start: Optional[np.ndarray] = None

    @staticmethod
    def _names(tokens: List[str], kind: str) -> List[str]:
        if len(tokens) == 1 and tokens[0].isdigit():
            return [str(i) for i in range(int(tokens[0]))]
        if not tokens:
            raise ModelValidationError(f"'{kind}:' declares nothing")
        return tokens

    def _allocate(self) -> None:
        if self.trans is None and self.states and self.actions and self.observations:
            s, a, o = len(self.states), len(self.actions), len(self.observations)
            self.trans = np.zeros((a, s, s))
            self.obs = np.zeros((a, s, o))
            self.reward = np.zeros((a, s))

    def _refs(self, token: str, names: List[str], kind: str) -> List[int]:
        if token == "*":
            return list(range(len(names)))
        if token in names:
            return [names.index(token)]
        if token.isdigit() and int(token) < len(names):
            return [int(token)]
        raise ModelValidationError(f"unknown {kind} '{token}'")

    def _floats(self, i: int, count: int) -> List[float]:
        values = [float(v) for v in self.lines[i].split()]
        if len(values) != count:
            raise ModelValidationError(
                f"line {i + 1}: expected {count} numbers, got {len(values)}"
            )
        return values

    def parse(self) -> PomdpModel:
        """Parse the whole file.

        Raises:
            ModelValidationError: On syntax errors or unsupported features
        """
        i = 0
        while i < len(self.lines):
            line = self.lines[i]
            head, _, rest = line.partition(":")
            head = head.strip()
            if head in ("discount", "values", "states", "actions", "observations"):
                tokens = rest.split()
                if head == "discount":
                    self.discount = float(tokens[0])
                elif head == "values":
                    if tokens != ["reward"]:
                        raise ModelValidationError("only 'values: reward' is supported")
                elif head == "states":
                    self.states = self._names(tokens, head)
                elif head == "actions":
                    self.actions = self._names(tokens, head)
                else:
                    self.observations = self._names(tokens, head)
                self._allocate()
                i += 1
            elif head == "start":
                i = self._parse_start(i, rest)
            elif head in ("T", "O"):
                i = self._parse_matrix(i, head, rest)
            elif head == "R":
                i = self._parse_reward(i, rest)
            else:
                raise ModelValidationError(f"cannot parse line {i + 1}: {line}")
        if self.trans is None or self.obs is None or self.reward is None:
            raise ModelValidationError("file does not declare states, actions and observations")
        if self.start is None:
            self.start = np.full(len(self.states), 1.0 / len(self.states))
        num_perms = sum(1 for a in self.actions if a.startswith("perm_"))
        return PomdpModel(
            states=tuple(self.states),
            actions=tuple(self.actions),
            observations=tuple(self.observations),
            trans=self.trans,
            obs=self.obs,
            reward=self.reward,
            start=self.start,
            horizon=self.horizon,
            num_permutations=num_perms,
            discount=self.discount,
        )

    def _parse_start(self, i: int, rest: str) -> int:
        tokens = rest.split()
        if tokens:
            values = [float(v) for v in tokens]
            i += 1
        else:
            values = self._floats(i + 1, len(self.states))
            i += 2
        if len(values) != len(self.states):
            raise ModelValidationError("start distribution has the wrong length")
        self.start = np.array(values)
        return i

    def _parse_matrix(self, i: int, head: str, rest: str) -> int:
        if self.trans is None or self.obs is None:
            raise ModelValidationError(f"'{head}:' before states, actions and observations")
        target = self.trans if head == "T" else self.obs
        cols = len(self.states) if head == "T" else len(self.observations)
        col_names = self.states if head == "T" else self.observations
        parts = [p.strip() for p in rest.split(":")]
        first = parts[0].split()
        actions = self._refs(first[0], self.actions, "action")
        refs = [first[1:]] + [p.split() for p in parts[1:]]
        refs = [r for r in refs if r]
        flat = [tok for r in refs for tok in r]

        if not flat:
            nxt = self.lines[i + 1]
            if nxt == "identity":
                for a in actions:
                    target[a] = np.eye(len(self.states), cols)
                return i + 2
            if nxt == "uniform":
                for a in actions:
                    target[a] = 1.0 / cols
                return i + 2
            matrix = np.array([self._floats(i + 1 + r, cols) for r in range(len(self.states))])
            for a in actions:
                target[a] = matrix
            return i + 1 + len(self.states)

        rows = self._refs(flat[0], self.states, "state")
        if len(flat) == 1:
            nxt = self.lines[i + 1]
            values = np.full(cols, 1.0 / cols) if nxt == "uniform" else np.array(self._floats(i + 1, cols))
            for a in actions:
                for r in rows:
                    target[a, r] = values
            return i + 2
        targets = self._refs(flat[1], col_names, "state" if head == "T" else "observation")
        if len(flat) >= 3:
            prob, step = float(flat[2]), 1
        else:
            prob, step = float(self.lines[i + 1]), 2
        for a in actions:
            for r in rows:
                for c in targets:
                    target[a, r, c] = prob
        return i + step

    def _parse_reward(self, i: int, rest: str) -> int:
        if self.reward is None:
            raise ModelValidationError("'R:' before states, actions and observations")
        parts = [p.strip() for p in rest.split(":")]
        if len(parts) != 4:
            raise ModelValidationError(f"line {i + 1}: only 'R: a : s : s' : o r' is supported")
        last = parts[3].split()
        if parts[2] != "*" or last[0] != "*" or len(last) != 2:
            raise ModelValidationError(
                f"line {i + 1}: rewards depending on next state or observation are not supported"
            )
        value = float(last[1])
        for a in self._refs(parts[0], self.actions, "action"):
            for s in self._refs(parts[1], self.states, "state"):
                self.reward[a, s] = value
        return i + 1


def read_cassandra(path: PathLike) -> PomdpModel:
    """Read a ``.pomdp`` file written by :func:`write_cassandra` (or similar)."""
    with open(path) as f:
        return CassandraParser(f.read()).parse()


def models_match(a: PomdpModel, b: PomdpModel, tol: float = 1e-12) -> Tuple[bool, str]:
    """Compare two POMDPs; returns (equal, first difference)."""
    for attr in ("states", "actions", "observations"):
        if getattr(a, attr) != getattr(b, attr):
            return False, attr
    for attr in ("trans", "obs", "reward", "start"):
        x, y = getattr(a, attr), getattr(b, attr)
        if x.shape != y.shape or not np.allclose(x, y, rtol=0.0, atol=tol):
            return False, attr
    return True, ""
