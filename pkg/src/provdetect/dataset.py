"""Boolean provenance datasets: loading, saving, union, and synthesis.

A dataset is an N x A Boolean matrix. Each row is one process, each column an
attribute (an event type, executable name, parent executable, or netflow
endpoint, depending on the aspect). Ground-truth attack labels are carried as
a set of process ids; every unlabeled row counts as normal.

Datasets are immutable after construction (the matrix is marked read-only)
and therefore safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ParseError, ValidationError


class Aspect(str, Enum):
    PE = "PE"  # event types
    PX = "PX"  # executable names
    PP = "PP"  # parent executables
    PN = "PN"  # netflow endpoints
    PA = "PA"  # union of all aspects


class HostOs(str, Enum):
    ANDROID = "Android"
    LINUX = "Linux"
    BSD = "BSD"
    WINDOWS = "Windows"


class Scenario(str, Enum):
    PANDEX = "Pandex"
    BOVIA = "Bovia"


NORMAL = "normal"
ATTACK = "attack"


@dataclass(frozen=True)
class ProcessRecord:
    """One row of a dataset: a process id plus its present attributes.

    ``attributes`` preserves the dataset's column order.
    """

    process_id: str
    attributes: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.process_id:
            raise ValidationError("process_id must be non-empty")


@dataclass(frozen=True)
class AspectDataset:
    """Immutable Boolean process-by-attribute matrix with attack labels."""

    aspect: Aspect
    os: HostOs
    scenario: Scenario
    attribute_names: tuple[str, ...]
    process_ids: tuple[str, ...]
    matrix: np.ndarray
    attack_ids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        n, a = len(self.process_ids), len(self.attribute_names)
        if n < 1:
            raise ValidationError("dataset needs at least one process row")
        if a < 1:
            raise ValidationError("dataset needs at least one attribute")
        if len(set(self.process_ids)) != n:
            raise ValidationError("duplicate process ids")
        if any(not pid for pid in self.process_ids):
            raise ValidationError("empty process id")
        if len(set(self.attribute_names)) != a:
            raise ValidationError("duplicate attribute names")
        if self.matrix.shape != (n, a):
            raise ValidationError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{n} processes x {a} attributes"
            )
        if self.matrix.dtype != np.bool_:
            object.__setattr__(self, "matrix", self.matrix.astype(np.bool_))
        unknown = self.attack_ids - set(self.process_ids)
        if unknown:
            raise ValidationError(
                f"attack label(s) reference unknown process ids: {sorted(unknown)[:5]}"
            )
        self.matrix.setflags(write=False)

    @property
    def n_processes(self) -> int:
        return len(self.process_ids)

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_names)

    def labels(self) -> dict[str, str]:
        """Total label map over rows; unlabeled rows default to normal."""
        return {
            pid: (ATTACK if pid in self.attack_ids else NORMAL)
            for pid in self.process_ids
        }

    def is_attack(self, process_id: str) -> bool:
        return process_id in self.attack_ids

    def label_vector(self) -> np.ndarray:
        """0/1 per row in row order; 1 marks attack."""
        return np.fromiter(
            (pid in self.attack_ids for pid in self.process_ids),
            dtype=np.int8,
            count=self.n_processes,
        )

    def record(self, row: int) -> ProcessRecord:
        present = self.matrix[row]
        attrs = tuple(
            name for name, bit in zip(self.attribute_names, present) if bit
        )
        return ProcessRecord(self.process_ids[row], attrs)

    def records(self) -> Iterator[ProcessRecord]:
        for i in range(self.n_processes):
            yield self.record(i)


@dataclass(frozen=True)
class SyntheticConfig:
    """Recipe for a separable synthetic dataset used by tests and demos."""

    n_normal: int
    n_attack: int
    n_attributes: int
    normal_density: float
    attack_signature_attributes: int
    seed: int

    def __post_init__(self) -> None:
        if self.n_normal < 1:
            raise ValidationError("n_normal must be >= 1")
        if self.n_attack < 0 or self.n_attack > self.n_normal:
            raise ValidationError("need 0 <= n_attack <= n_normal")
        if not 0.0 <= self.normal_density <= 1.0:
            raise ValidationError("normal_density must lie in [0, 1]")
        if self.attack_signature_attributes < 0:
            raise ValidationError("attack_signature_attributes must be >= 0")
        if self.n_attributes < self.attack_signature_attributes:
            raise ValidationError(
                "n_attributes must be >= attack_signature_attributes"
            )
        if self.n_attributes < 1:
            raise ValidationError("n_attributes must be >= 1")


def load_dataset(
    matrix_path: str | Path,
    labels_path: str | Path,
    *,
    aspect: Aspect | str,
    os: HostOs | str,
    scenario: Scenario | str,
) -> AspectDataset:
    """Parse a matrix CSV plus a labels file into a dataset.

    Matrix format: header ``process_id,<attr1>,...``; each data row is an id
    followed by literal 0/1 cells. Labels file: one attack process id per
    line, blank lines ignored.

    Raises ParseError for malformed cells (with row/column location) or an
    empty file, ValidationError for labels that reference unknown ids.
    """
    matrix_path = Path(matrix_path)
    labels_path = Path(labels_path)

    text = matrix_path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(f"{matrix_path}: empty matrix file")

    header = lines[0].split(",")
    if header[0] != "process_id":
        raise ParseError(
            f"{matrix_path}: header must start with 'process_id', got {header[0]!r}"
        )
    attribute_names = tuple(header[1:])
    if not attribute_names:
        raise ParseError(f"{matrix_path}: header declares no attributes")

    ids: list[str] = []
    rows = np.zeros((len(lines) - 1, len(attribute_names)), dtype=np.bool_)
    n_rows = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 1 + len(attribute_names):
            raise ParseError(
                f"{matrix_path}:{lineno}: expected {1 + len(attribute_names)} "
                f"fields, got {len(fields)}"
            )
        ids.append(fields[0])
        for col, cell in enumerate(fields[1:]):
            if cell == "1":
                rows[n_rows, col] = True
            elif cell != "0":
                raise ParseError(
                    f"{matrix_path}:{lineno}: column {col + 2} "
                    f"({attribute_names[col]!r}): cell must be 0 or 1, got {cell!r}"
                )
        n_rows += 1
    if n_rows == 0:
        raise ParseError(f"{matrix_path}: no data rows")
    matrix = rows[:n_rows]

    attack_ids = _read_labels(labels_path)
    return AspectDataset(
        aspect=Aspect(aspect),
        os=HostOs(os),
        scenario=Scenario(scenario),
        attribute_names=attribute_names,
        process_ids=tuple(ids),
        matrix=matrix,
        attack_ids=attack_ids,
    )


def _read_labels(labels_path: Path) -> frozenset[str]:
    out: set[str] = set()
    for line in labels_path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            out.add(line)
    return frozenset(out)


def save_dataset(
    ds: AspectDataset, matrix_path: str | Path, labels_path: str | Path
) -> None:
    """Write the matrix CSV and labels file; inverse of load_dataset."""
    matrix_path = Path(matrix_path)
    labels_path = Path(labels_path)
    with matrix_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("process_id," + ",".join(ds.attribute_names) + "\n")
        digits = ds.matrix.astype(np.uint8).astype("U1")
        for pid, row in zip(ds.process_ids, digits):
            fh.write(pid + "," + ",".join(row) + "\n")
    with labels_path.open("w", encoding="utf-8", newline="\n") as fh:
        for pid in sorted(ds.attack_ids):
            fh.write(pid + "\n")


def union_aspects(parts: Sequence[AspectDataset]) -> AspectDataset:
    """Combine aspect datasets into the PA view.

    Attribute vocabulary is the by-name set union, processes the id union;
    a cell is 1 iff it is 1 in any part, and a process is an attack iff any
    part labels it so. Rows come out sorted by id and columns by attribute
    name, which makes the union commutative and associative in practice.
    """
    if not parts:
        raise ValidationError("union over no parts")
    first = parts[0]
    for p in parts[1:]:
        if p.os != first.os or p.scenario != first.scenario:
            raise ValidationError(
                "cannot union datasets from different os/scenario: "
                f"{p.os.value}/{p.scenario.value} vs "
                f"{first.os.value}/{first.scenario.value}"
            )
    aspects = [p.aspect for p in parts]
    if len(set(aspects)) != len(aspects):
        raise ValidationError("aspects must be pairwise distinct in a union")

    all_ids = sorted(set().union(*(p.process_ids for p in parts)))
    all_attrs = sorted(set().union(*(p.attribute_names for p in parts)))
    id_index = {pid: i for i, pid in enumerate(all_ids)}
    attr_index = {name: j for j, name in enumerate(all_attrs)}

    matrix = np.zeros((len(all_ids), len(all_attrs)), dtype=np.bool_)
    attack_ids: set[str] = set()
    for p in parts:
        row_idx = np.fromiter(
            (id_index[pid] for pid in p.process_ids), dtype=np.intp
        )
        col_idx = np.fromiter(
            (attr_index[a] for a in p.attribute_names), dtype=np.intp
        )
        matrix[np.ix_(row_idx, col_idx)] |= p.matrix
        attack_ids |= p.attack_ids

    return AspectDataset(
        aspect=Aspect.PA,
        os=first.os,
        scenario=first.scenario,
        attribute_names=tuple(all_attrs),
        process_ids=tuple(all_ids),
        matrix=matrix,
        attack_ids=frozenset(attack_ids),
    )


def imbalance_ratio(ds: AspectDataset) -> float:
    """Fraction of rows labeled attack: nb_attacks / N, in [0, 1]."""
    return len(ds.attack_ids) / ds.n_processes


def generate_synthetic(cfg: SyntheticConfig) -> AspectDataset:
    """Build a separable synthetic dataset, deterministic under cfg.seed.

    Every row samples each attribute independently at ``normal_density``.
    Attack rows additionally switch on a reserved block of
    ``attack_signature_attributes`` trailing columns with probability 0.9
    each, so attack rows carry a signature that normal rows almost never
    produce. Normal rows come first; attack rows occupy the tail.
    """
    n_total = cfg.n_normal + cfg.n_attack
    n_sig = cfg.attack_signature_attributes
    rng = np.random.default_rng(cfg.seed)

    matrix = rng.random((n_total, cfg.n_attributes)) < cfg.normal_density
    if cfg.n_attack and n_sig:
        overlay = rng.random((cfg.n_attack, n_sig)) < 0.9
        matrix[cfg.n_normal :, cfg.n_attributes - n_sig :] |= overlay

    width = max(4, len(str(n_total - 1)))
    process_ids = tuple(f"p{i:0{width}d}" for i in range(n_total))
    n_plain = cfg.n_attributes - n_sig
    attribute_names = tuple(
        [f"evt{j:03d}" for j in range(n_plain)]
        + [f"sig{j:02d}" for j in range(n_sig)]
    )
    attack_ids = frozenset(process_ids[cfg.n_normal :])

    return AspectDataset(
        aspect=Aspect.PE,
        os=HostOs.LINUX,
        scenario=Scenario.PANDEX,
        attribute_names=attribute_names,
        process_ids=process_ids,
        matrix=matrix,
        attack_ids=attack_ids,
    )


def load_synthetic_config(path: str | Path) -> SyntheticConfig:
    """Read a SyntheticConfig from a key-value config file (JSON or YAML)."""
    from .cli import read_config_file  # local import to avoid a cycle

    raw = read_config_file(path)
    try:
        return SyntheticConfig(
            n_normal=int(raw["n_normal"]),
            n_attack=int(raw["n_attack"]),
            n_attributes=int(raw["n_attributes"]),
            normal_density=float(raw["normal_density"]),
            attack_signature_attributes=int(raw["attack_signature_attributes"]),
            seed=int(raw["seed"]),
        )
    except KeyError as e:
        raise ValidationError(f"synthetic config missing field {e}") from e
