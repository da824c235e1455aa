import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd
from pydantic import BaseModel

from ..config.settings import settings
from ..models.manifest import ProducedFile


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(payload: Any, path: Path) -> Path:
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    path.write_text(text + "\n")
    return path


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def describe_files(out_dir: Path, paths: List[Path]) -> List[ProducedFile]:
    return [
        ProducedFile(name=p.relative_to(out_dir).as_posix(), sha256=sha256_file(p), size_bytes=p.stat().st_size)
        for p in paths
    ]


def write_outputs(out_dir: Path, frames: Dict[str, pd.DataFrame], documents: Dict[str, Any]) -> List[Path]:
    """CSV tables then JSON documents, in name order so file listings are stable."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_frame(frames[name], out_dir / name) for name in sorted(frames)]
    written += [write_json(documents[name], out_dir / name) for name in sorted(documents)]
    return written
