"""O3: out-of-order choreographies with integrity keys."""
from importlib import resources

__version__ = "0.1.0"

CORPUS = ("buyitem", "streamit", "forwarding", "producers", "procx")


def corpus_path(name: str):
    """Path of a shipped example program, e.g. ``corpus_path("buyitem")``."""
    return resources.files(__name__).joinpath("corpus", f"{name}.chor")


def corpus_text(name: str) -> str:
    return corpus_path(name).read_text(encoding="utf-8")
