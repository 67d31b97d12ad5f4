"""Problem files: JSON input for the qd sweep, plus atomic output helpers."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .qdalgo import HungryState


class ProblemError(ValueError):
    """Malformed problem file: bad JSON, missing fields, non-numeric entries."""


class ProblemDimensionError(ProblemError):
    """Well-formed problem file whose block shapes disagree with ``theta, n, p``."""


def _block_array(obj, shape, what) -> np.ndarray:
    try:
        a = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"{what}: not a numeric array ({exc})") from None
    if a.shape != shape:
        raise ProblemDimensionError(f"{what}: expected shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ProblemError(f"{what}: entries must be finite")
    return a


@dataclass(frozen=True)
class ProblemFile:
    theta: int
    n: int
    p: int
    q: np.ndarray  # (n, p, p)
    e: np.ndarray  # (theta, n-1, p, p)
    reference_eigenvalues: tuple | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemFile":
        try:
            theta, n, p = (int(d[k]) for k in ("theta", "n", "p"))
        except KeyError as exc:
            raise ProblemError(f"missing field {exc}") from None
        except (TypeError, ValueError):
            raise ProblemError("theta, n and p must be integers") from None
        if theta < 1 or n < 1 or p < 1:
            raise ProblemError("theta, n and p must be positive")
        if "q" not in d or "e" not in d:
            raise ProblemError("missing field 'q' or 'e'")
        q = _block_array(d["q"], (n, p, p), "q")
        e_raw = d["e"]
        if n == 1 and (e_raw == [] or all(layer == [] for layer in e_raw)):
            e_raw = [[] for _ in range(theta)]
        if not isinstance(e_raw, list) or len(e_raw) != theta:
            raise ProblemDimensionError(f"e: expected {theta} layers")
        e = np.zeros((theta, n - 1, p, p))
        for i, layer in enumerate(e_raw):
            if n > 1:
                e[i] = _block_array(layer, (n - 1, p, p), f"e[{i}]")
            elif layer != []:
                raise ProblemDimensionError(f"e[{i}]: expected no blocks for n = 1")
        ref = d.get("reference_eigenvalues")
        if ref is not None:
            ref_a = np.array(ref, dtype=float)
            if ref_a.ndim != 2 or ref_a.shape[1] != 2:
                raise ProblemError("reference_eigenvalues must be a list of [re, im] pairs")
            ref = tuple((float(a), float(b)) for a, b in ref_a)
        return cls(theta, n, p, q, e, ref)

    def to_dict(self) -> dict:
        d = {
            "theta": self.theta,
            "n": self.n,
            "p": self.p,
            "q": self.q.tolist(),
            "e": self.e.tolist(),
        }
        if self.reference_eigenvalues is not None:
            d["reference_eigenvalues"] = [list(v) for v in self.reference_eigenvalues]
        return d

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProblemFile):
            return NotImplemented
        return (
            (self.theta, self.n, self.p, self.reference_eigenvalues)
            == (other.theta, other.n, other.p, other.reference_eigenvalues)
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.e, other.e)
        )

    @classmethod
    def loads(cls, text: str) -> "ProblemFile":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ProblemError("top level must be an object")
        return cls.from_dict(d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def load(cls, path) -> "ProblemFile":
        return cls.loads(Path(path).read_text())

    def dump(self, path) -> None:
        write_atomic(path, self.dumps() + "\n")

    def state(self) -> HungryState:
        try:
            return HungryState.from_blocks(self.theta, list(self.q), [list(layer) for layer in self.e])
        except DimensionError as exc:
            raise ProblemDimensionError(str(exc)) from None

    @property
    def reference(self) -> np.ndarray | None:
        if self.reference_eigenvalues is None:
            return None
        return np.array([complex(a, b) for a, b in self.reference_eigenvalues])


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def matrix_csv(a: np.ndarray) -> str:
    """Plain scalar grid; integral values are written without a decimal point."""
    lines = []
    for row in np.asarray(a, dtype=float):
        lines.append(",".join(str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def example_path(name: str) -> Path:
    """Path of a bundled example problem (``example1`` or ``example2``)."""
    return Path(str(resources.files("blockqd") / "data" / f"{name}.json"))


def load_example(name: str) -> ProblemFile:
    return ProblemFile.load(example_path(name))
