"""Convert raw multi-label text corpora into the simover instance file format."""

from .encoders import EncoderError, HashingEncoder, SentenceTransformerEncoder, embed, resolve_encoder
from .export import ExportError, RawTextRecord, export, read_class_list, read_raw_records
from .preprocess import LEMMATIZER_VERSION, STOPWORDS_VERSION, lemmatize, preprocess

__version__ = "0.1.0"

__all__ = [
    "EncoderError",
    "ExportError",
    "HashingEncoder",
    "LEMMATIZER_VERSION",
    "RawTextRecord",
    "STOPWORDS_VERSION",
    "SentenceTransformerEncoder",
    "embed",
    "export",
    "lemmatize",
    "preprocess",
    "read_class_list",
    "read_raw_records",
    "resolve_encoder",
]
