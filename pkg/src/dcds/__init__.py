"""Verification toolkit for data-centric dynamic systems with external services."""

from importlib import resources
from pathlib import Path

from .spec import DcdsSpec, load, parse, pretty, validate

__version__ = "0.1.0"


def corpus_names() -> list[str]:
    root = resources.files(__package__) / "corpus"
    return sorted(p.name[: -len(".dcds")] for p in root.iterdir() if p.name.endswith(".dcds"))


def corpus_path(name: str) -> Path:
    """Filesystem path of a bundled example, by name with or without the `.dcds` suffix."""
    stem = name[: -len(".dcds")] if name.endswith(".dcds") else name
    path = Path(str(resources.files(__package__) / "corpus" / f"{stem}.dcds"))
    if not path.exists():
        raise FileNotFoundError(f"no bundled example named {stem!r}; available: {', '.join(corpus_names())}")
    return path


def load_corpus(name: str) -> DcdsSpec:
    return load(corpus_path(name))


__all__ = ["DcdsSpec", "corpus_names", "corpus_path", "load", "load_corpus", "parse", "pretty", "validate"]
