"""Trial logs, run manifests and CSV tables on disk.

A trial log (``<trial_id>.log``) is

1. one JSON line with the metadata (keys sorted)::

       {"channels": [...], "config_hash": "...", "format": "rtis-trial",
        "meta": {...}, "n_steps": N, "sample_rate": 1000.0, "seed": 7,
        "tag": "p2p", "trial_id": "trial_0000", "version": 1}

2. a CSV header line naming the channels in order,
3. ``n_steps`` CSV rows, one value per channel, ``%.17g`` formatted.

Every file is written to a temporary sibling and renamed into place.

Run directory layout::

    runs/<run_id>/manifest.json
    runs/<run_id>/trials/<trial_id>.log
    runs/<run_id>/curve.csv
    runs/<run_id>/checkpoints/
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import TrialFormatError
from .stats import Ensemble, TrialSeries

TRIAL_FORMAT = "rtis-trial"
TRIAL_VERSION = 1
TRIAL_SUFFIX = ".log"
FLOAT_FMT = "%.17g"


@dataclass
class TrialRecord:
    trial_id: str
    channels: dict  # name -> 1-D array, all the same length
    sample_rate: float
    tag: str = "p2p"
    seed: int | None = None
    config_hash: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}
        lengths = {k: v.shape for k, v in self.channels.items()}
        if len(set(lengths.values())) > 1:
            raise TrialFormatError(f"trial {self.trial_id}: channels have inconsistent lengths {lengths}")

    @property
    def n_steps(self) -> int:
        return next(iter(self.channels.values())).size if self.channels else 0

    def series(self, channel: str) -> TrialSeries:
        if channel not in self.channels:
            raise TrialFormatError(f"trial {self.trial_id}: no channel {channel!r}")
        return TrialSeries(channel, self.channels[channel], self.sample_rate, self.trial_id)


def config_hash(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def atomic_write(path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix="." + path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode() if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _header(record: TrialRecord) -> dict:
    return {
        "format": TRIAL_FORMAT,
        "version": TRIAL_VERSION,
        "trial_id": record.trial_id,
        "tag": record.tag,
        "seed": record.seed,
        "sample_rate": record.sample_rate,
        "n_steps": record.n_steps,
        "channels": list(record.channels),
        "config_hash": record.config_hash,
        "meta": record.meta,
    }


def serialize_trial(record: TrialRecord) -> str:
    names = list(record.channels)
    for n in names:
        if "," in n or not n:
            raise TrialFormatError(f"trial {record.trial_id}: invalid channel name {n!r}")
    data = np.column_stack([record.channels[n] for n in names]) if names else np.empty((0, 0))
    if not np.all(np.isfinite(data)):
        raise TrialFormatError(f"trial {record.trial_id}: NaN/Inf values cannot be stored")
    row_fmt = ",".join([FLOAT_FMT] * len(names))
    out = [json.dumps(_header(record), sort_keys=True), ",".join(names)]
    out.extend(row_fmt % tuple(row) for row in data.tolist())
    return "\n".join(out) + "\n"


def write_trial(record: TrialRecord, path) -> Path:
    """Write ``record``; a directory ``path`` receives ``<trial_id>.log``."""
    path = Path(path)
    if path.is_dir():
        path = path / (record.trial_id + TRIAL_SUFFIX)
    atomic_write(path, serialize_trial(record))
    return path


def parse_trial(text: str, source: str = "<memory>") -> TrialRecord:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise TrialFormatError(f"{source}: truncated trial log (no header)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TrialFormatError(f"{source}: unreadable header: {exc}") from exc
    name = header.get("trial_id", source) if isinstance(header, dict) else source
    if not isinstance(header, dict) or header.get("format") != TRIAL_FORMAT:
        raise TrialFormatError(f"trial {name} ({source}): not a trial log")
    if header.get("version") != TRIAL_VERSION:
        raise TrialFormatError(f"trial {name} ({source}): unsupported version {header.get('version')}")
    channels = header["channels"]
    if lines[1].split(",") != channels and not (lines[1] == "" and not channels):
        raise TrialFormatError(f"trial {name} ({source}): column header does not match metadata")
    body = lines[2:]
    n = int(header["n_steps"])
    if len(body) != n:
        raise TrialFormatError(f"trial {name} ({source}): expected {n} rows, found {len(body)}")
    k = len(channels)
    rows = [line.split(",") for line in body]
    for i, row in enumerate(rows):
        if len(row) != k:
            raise TrialFormatError(f"trial {name} ({source}): row {i} has {len(row)} fields, expected {k}")
    try:
        data = np.array([[float(v) for v in row] for row in rows], dtype=float).reshape(n, k)
    except ValueError as exc:
        raise TrialFormatError(f"trial {name} ({source}): bad number: {exc}") from exc
    if not np.all(np.isfinite(data)):
        raise TrialFormatError(f"trial {name} ({source}): non-finite values")
    return TrialRecord(
        trial_id=header["trial_id"],
        channels={c: data[:, j].copy() for j, c in enumerate(channels)},
        sample_rate=float(header["sample_rate"]),
        tag=header.get("tag", ""),
        seed=header.get("seed"),
        config_hash=header.get("config_hash", ""),
        meta=header.get("meta", {}),
    )


def read_trial(path) -> TrialRecord:
    path = Path(path)
    return parse_trial(path.read_text(), str(path))


def trial_paths(directory) -> list[Path]:
    return sorted(Path(directory).glob("*" + TRIAL_SUFFIX))


def read_trials(directory) -> list[TrialRecord]:
    paths = trial_paths(directory)
    if not paths:
        raise TrialFormatError(f"{directory}: no trial logs found")
    return [read_trial(p) for p in paths]


def ensemble_from_records(records: Sequence[TrialRecord], channel: str) -> Ensemble:
    if not records:
        raise TrialFormatError("no trials to assemble")
    series = []
    ref = None
    for rec in records:
        if channel not in rec.channels:
            raise TrialFormatError(f"trial {rec.trial_id}: missing channel {channel!r}")
        s = rec.series(channel)
        if ref is None:
            ref = s
        elif len(s) != len(ref):
            raise TrialFormatError(
                f"trial {rec.trial_id}: channel {channel!r} has {len(s)} samples, "
                f"trial {ref.trial_id} has {len(ref)}")
        elif s.sample_rate != ref.sample_rate:
            raise TrialFormatError(
                f"trial {rec.trial_id}: sample rate {s.sample_rate} differs from {ref.sample_rate}")
        series.append(s)
    return Ensemble(tuple(series))


def read_ensemble(directory, channel: str) -> Ensemble:
    """Aligned ensemble of ``channel`` from every trial log in ``directory``."""
    return ensemble_from_records(read_trials(directory), channel)


def read_ensembles(directory, channels: Sequence[str] | None = None) -> dict[str, Ensemble]:
    """Like :func:`read_ensemble` for several channels, parsing each log once.

    ``channels=None`` takes every channel of the first trial.
    """
    records = read_trials(directory)
    channels = list(records[0].channels) if channels is None else list(channels)
    return {ch: ensemble_from_records(records, ch) for ch in channels}


# -- run-level files --------------------------------------------------------

@dataclass(frozen=True)
class RunLayout:
    root: Path

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))

    @property
    def trials(self) -> Path:
        return self.root / "trials"

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"

    @property
    def curve(self) -> Path:
        return self.root / "curve.csv"

    @property
    def checkpoints(self) -> Path:
        return self.root / "checkpoints"

    @property
    def analysis(self) -> Path:
        return self.root / "analysis"


def write_json(path, obj) -> None:
    atomic_write(path, json.dumps(obj, sort_keys=True, indent=2, default=str) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def format_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    atomic_write(path, csv_text(header, rows))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
