from pathlib import Path

import pytest

from emojipred.porter import porter_stem

DATA = Path(__file__).parent / "data"


def reference_pairs():
    words = (DATA / "porter_voc.txt").read_text(encoding="utf-8").split()
    stems = (DATA / "porter_output.txt").read_text(encoding="utf-8").split()
    assert len(words) == len(stems) > 20000
    return list(zip(words, stems))


def test_reference_vocabulary_agreement():
    pairs = reference_pairs()
    mismatches = [(w, s, porter_stem(w)) for w, s in pairs if porter_stem(w) != s]
    assert len(mismatches) / len(pairs) <= 0.01, mismatches[:10]


@pytest.mark.parametrize(
    "word,stem",
    [
        ("caresses", "caress"),
        ("running", "run"),
        ("sky", "sky"),
        ("ponies", "poni"),
        ("relational", "relat"),
        ("hopping", "hop"),
        ("filing", "file"),
        ("generalizations", "gener"),
        ("as", "as"),
    ],
)
def test_classic_examples(word, stem):
    assert porter_stem(word) == stem


def test_output_never_grows_by_more_than_one():
    for w, _ in reference_pairs():
        assert len(porter_stem(w)) <= len(w) + 1
