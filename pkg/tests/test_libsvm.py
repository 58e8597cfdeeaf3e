import io

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ftrlm.errors import ParseError
from ftrlm.libsvm import load_libsvm, parse_libsvm, serialize_libsvm
from ftrlm.problems import Dataset


def parse(text, **kw):
    return parse_libsvm(io.StringIO(text), **kw)


def test_basic_line():
    data = parse("+1 1:0.5 3:-2\n")
    assert data.y.tolist() == [1.0]
    assert data.X.indices.tolist() == [0, 2]
    assert data.X.data.tolist() == [0.5, -2.0]
    assert data.d == 3


def test_zero_one_labels():
    data = parse("0 2:1\n1 1:3\n")
    assert data.y.tolist() == [-1.0, 1.0]


def test_unsorted_indices_comments_and_blank_lines():
    data = parse("# header\n\n-1 4:1 2:2  # trailing\n+1\n", n_features=6)
    assert data.n == 2 and data.d == 6
    assert data.X.indices.tolist() == [1, 3]
    assert data.X.data.tolist() == [2.0, 1.0]
    assert data.X.indptr.tolist() == [0, 2, 2]


def test_empty_input():
    data = parse("")
    assert data.n == 0 and data.d == 0


@pytest.mark.parametrize("text, line, column", [
    ("2 1:1\n", 1, 1),
    ("abc 1:1\n", 1, 1),
    ("+1 1:1\n-1 x:1\n", 2, 4),
    ("+1 0:1\n", 1, 4),
    ("+1 -3:1\n", 1, 4),
    ("+1 1.5:1\n", 1, 4),
    ("+1 1:abc\n", 1, 6),
    ("+1 1:nan\n", 1, 6),
    ("+1 1:inf\n", 1, 6),
    ("+1 1:1 1:2\n", 1, 8),
    ("+1 1\n", 1, 4),
    ("+1 :1\n", 1, 4),
    ("+1 2:\n", 1, 4),
    ("\n\n+1 1:1 2:3:4\n", 3, 10),
])
def test_malformed_lines_report_position(text, line, column):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.line == line
    assert info.value.column == column
    assert str(info.value).startswith(f"line {line}, column {column}:")


def test_index_past_declared_dimension():
    with pytest.raises(ParseError) as info:
        parse("+1 1:1\n-1 5:1\n", n_features=4)
    assert info.value.line == 2


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=" \t:#+-.0123456789eEnaif\n", max_size=60))
def test_arbitrary_text_never_escapes_as_other_errors(text):
    try:
        parse(text)
    except ParseError as exc:
        assert exc.line >= 1 and exc.column >= 1


def random_dataset(rng, n, d):
    mask = rng.uniform(size=(n, d)) < rng.uniform(0.05, 0.6)
    values = rng.standard_normal((n, d)) * 10.0 ** rng.integers(-8, 8, size=(n, d))
    X = sp.csr_matrix(np.where(mask, values, 0.0))
    y = rng.choice([-1.0, 1.0], size=n)
    return Dataset(X, y)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(0, 15), d=st.integers(1, 12))
def test_round_trip(seed, n, d):
    data = random_dataset(np.random.default_rng(seed), n, d)
    buf = io.StringIO()
    serialize_libsvm(data, buf)
    back = parse(buf.getvalue(), n_features=d)
    assert back.equals(data)


def test_round_trip_keeps_explicit_zeros():
    X = sp.csr_matrix((np.array([0.0, 1.5]), np.array([0, 2]), np.array([0, 2])), shape=(1, 3))
    data = Dataset(X, np.array([-1.0]))
    buf = io.StringIO()
    serialize_libsvm(data, buf)
    assert buf.getvalue() == "-1 1:0.0 3:1.5\n"
    assert parse(buf.getvalue(), n_features=3).equals(data)


def test_load_from_file(tmp_path):
    path = tmp_path / "tiny.svm"
    path.write_text("+1 1:1 2:2\n-1 2:-1\n", encoding="utf-8")
    data = load_libsvm(path)
    assert data.n == 2 and data.d == 2
    assert data.meta.G == pytest.approx(np.sqrt(5))
