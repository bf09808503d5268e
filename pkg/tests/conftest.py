import numpy as np
import pytest

from textpipes.corpus import Dataset
from textpipes.sparse import SparseMatrix

FILLER = [f"w{i:02d}" for i in range(60)]


def make_corpus(n=200, seed=0, n_classes=2, marker_words=("awful", "great", "meh")):
    """Documents of random filler words plus one class-marker token."""
    rng = np.random.default_rng(seed)
    docs, labels = [], []
    for i in range(n):
        lab = i % n_classes
        words = list(rng.choice(FILLER, size=8))
        words.append(marker_words[lab])
        rng.shuffle(words)
        docs.append(" ".join(words))
        labels.append(lab)
    return Dataset(docs, labels, [str(k) for k in range(n_classes)])


def planted_counts(seed, n=200, p=10, informative=(3, 7)):
    """Poisson counts whose label depends only on the ``informative`` columns."""
    rng = np.random.default_rng(seed)
    X = rng.poisson(1.0, (n, p)).astype(float)
    y = (X[:, list(informative)].sum(axis=1) >= 2).astype(int)
    return SparseMatrix.from_dense(X), y


def write_corpus(tmp_path, name, ds):
    text = tmp_path / f"{name}.txt"
    tags = tmp_path / f"{name}.tags"
    text.write_text("".join(d + "\n" for d in ds.documents), encoding="utf-8")
    tags.write_text("".join(ds.label_names[l] + "\n" for l in ds.labels), encoding="utf-8")
    return text, tags


@pytest.fixture
def corpus():
    return make_corpus()


@pytest.fixture
def corpus3():
    return make_corpus(n=120, n_classes=3)


# acceptance bookkeeping: one line per criterion in the terminal summary
ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, text in sorted(ACCEPTANCE_RESULTS, key=lambda r: int(r[0])):
        terminalreporter.write_line(f"[{number:>2}] {status:<4} {text}")
