"""Run manifests and the CSV/JSON writers used by the command line.

Every file carries its manifest: CSV files start with one ``# {json}``
comment line, JSON files hold it under the ``"manifest"`` key.  Floats are
written with 17 significant digits so they round-trip exactly.
"""

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata

SCHEMA_VERSION = 1


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def _utc_now():
    # honour the reproducible-builds convention when it is set
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int | None = None
    tool_version: str = field(default_factory=tool_version)
    timestamp: str = field(default_factory=_utc_now)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def fmt(x):
    """17-significant-digit text for floats; other values pass through ``str``."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def _jsonable(x):
    if hasattr(x, "tolist"):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def csv_text(manifest, header, rows, summary=None):
    """Manifest line, header, rows, and an optional ``# summary {json}`` footer."""
    buf = io.StringIO()
    buf.write("# " + json.dumps(manifest.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    if summary is not None:
        buf.write("# summary " + json.dumps(_jsonable(summary), sort_keys=True) + "\n")
    return buf.getvalue()


def json_text(manifest, payload):
    body = {"manifest": manifest.to_dict(), **_jsonable(payload)}
    # repr of a float is the shortest string that round-trips, which json uses
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def read_csv(text):
    """Inverse of :func:`csv_text`.

    Returns ``(manifest, header, rows, summary)`` with rows as lists of
    strings and ``summary`` ``None`` when the file has no footer.
    """
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError("missing manifest line")
    manifest = RunManifest.from_dict(json.loads(lines[0][2:]))
    summary = None
    if lines[-1].startswith("# summary "):
        summary = json.loads(lines.pop()[len("# summary ") :])
    reader = csv.reader(lines[1:])
    header = next(reader)
    return manifest, header, list(reader), summary


def read_json(text):
    body = json.loads(text)
    return RunManifest.from_dict(body.pop("manifest")), body


def write(path, text):
    """Write UTF-8 text with LF endings; ``None`` or ``-`` means stdout."""
    if path in (None, "-"):
        import sys

        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
