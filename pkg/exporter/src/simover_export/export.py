"""Raw multi-label text records in, instance files out.

Input is line-delimited JSON: {"id": str, "text": str, "labels": [name, ...] | null}.
Output is the instance file format consumed by the oversampling library: a
header line carrying dimension, class names, and cleaning provenance, then one
instance per line with the label names encoded as a binary vector in class-list
order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .encoders import embed, resolve_encoder
from .preprocess import LEMMATIZER_VERSION, STOPWORDS_VERSION, preprocess

logger = logging.getLogger(__name__)


class ExportError(ValueError):
    """A raw record or the class list violates the export contract."""


@dataclass(frozen=True)
class RawTextRecord:
    id: str
    text: str
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise ExportError("record id must be a nonempty string")
        if not self.text or not self.text.strip():
            raise ExportError(f"record {self.id!r}: text is empty")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))


def read_raw_records(path) -> list[RawTextRecord]:
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                labels = raw.get("labels")
                records.append(
                    RawTextRecord(
                        raw["id"], raw["text"], None if labels is None else tuple(labels)
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ExportError) as exc:
                raise ExportError(f"{path}:{lineno}: bad record: {exc}") from exc
    if not records:
        raise ExportError(f"{path}: no records")
    return records


def read_class_list(path) -> tuple[str, ...]:
    names = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    names = [n for n in names if n]
    if not names:
        raise ExportError(f"{path}: empty class list")
    if len(set(names)) != len(names):
        raise ExportError(f"{path}: duplicate class names")
    return tuple(names)


def export(
    records: list[RawTextRecord],
    model_id: str,
    class_names: tuple[str, ...],
    out_path,
    raw_text: bool = False,
    batch_size: int = 32,
    encoder=None,
) -> int:
    """Clean, embed, and write the records; returns the number written.

    Records whose text cleans down to nothing are skipped with a warning.
    Label names must all appear in class_names. With raw_text=True the model
    sees the original text instead of the cleaned tokens (cleaning provenance
    is recorded either way).
    """
    class_index = {name: i for i, name in enumerate(class_names)}
    kept: list[RawTextRecord] = []
    texts: list[str] = []
    for record in records:
        if record.labels is not None:
            unknown = [name for name in record.labels if name not in class_index]
            if unknown:
                raise ExportError(f"record {record.id!r}: unknown label names {unknown}")
        cleaned = preprocess(record.text)
        if not cleaned:
            logger.warning("record %r is empty after cleaning; skipped", record.id)
            continue
        kept.append(record)
        texts.append(record.text if raw_text else cleaned)
    if not kept:
        raise ExportError("every record was empty after cleaning")

    encoder = encoder or resolve_encoder(model_id)
    vectors = embed(texts, model_id, batch_size=batch_size, encoder=encoder)
    dimension = vectors.shape[1]
    if getattr(encoder, "dimension", dimension) != dimension:
        raise ExportError(
            f"encoder declares dimension {encoder.dimension} but produced {dimension}"
        )

    header = {
        "dimension": int(dimension),
        "num_classes": len(class_names),
        "class_names": list(class_names),
        "provenance": {
            "model": model_id,
            "raw_text": raw_text,
            "stopwords": STOPWORDS_VERSION,
            "lemmatizer": LEMMATIZER_VERSION,
        },
    }
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for record, vector in zip(kept, vectors):
            if record.labels is None:
                labels = None
            else:
                labels = [0] * len(class_names)
                for name in record.labels:
                    labels[class_index[name]] = 1
            fh.write(
                json.dumps(
                    {
                        "id": record.id,
                        "vector": [float(v) for v in vector],
                        "labels": labels,
                    }
                )
                + "\n"
            )
    return len(kept)
