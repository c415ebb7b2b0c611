import pytest

from o3 import CORPUS, corpus_text
from o3.parser import parse_program


@pytest.fixture(scope="session")
def corpus():
    return {name: parse_program(corpus_text(name)) for name in CORPUS}
