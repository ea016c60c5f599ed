import numpy as np
import pytest

from memdd.data import (
    ClassificationDataset,
    NotFittedError,
    ParseError,
    build_regression_task,
    chronological_split,
    fit_normalizer,
    format_classification,
    make_windows,
    parse_classification_file,
    parse_regression_csv,
    ucr_to_tscls,
    write_classification_file,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# -- ts-cls ------------------------------------------------------------------

def test_parse_single_sample(tmp_path):
    ds = parse_classification_file(write(tmp_path, "a.txt", "ts-cls v1 T=2 D=1 C=2\n1\t0.5 0.7\n"))
    assert (ds.T, ds.D, ds.C, len(ds)) == (2, 1, 2, 1)
    label, series = ds.samples[0]
    assert label == 1
    np.testing.assert_array_equal(series, [[0.5], [0.7]])


def test_parse_time_major_channel_minor(tmp_path):
    ds = parse_classification_file(write(tmp_path, "a.txt", "ts-cls v1 T=2 D=2 C=1\n0\t1 2 3 4\n"))
    np.testing.assert_array_equal(ds.X[0], [[1, 2], [3, 4]])


def test_parse_empty_section(tmp_path):
    ds = parse_classification_file(write(tmp_path, "a.txt", "ts-cls v1 T=3 D=2 C=4\n"))
    assert len(ds) == 0 and ds.X.shape == (0, 3, 2)


@pytest.mark.parametrize("body, line, what", [
    ("ts-cls v2 T=2 D=1 C=2\n", 1, "header"),
    ("ts-cls v1 T=2 D=1 C=2\n0\t0.5 0.7\n1\t0.5\n", 3, "expected 2 values"),
    ("ts-cls v1 T=2 D=1 C=2\n2\t0.5 0.7\n", 2, "outside"),
    ("ts-cls v1 T=2 D=1 C=2\nx\t0.5 0.7\n", 2, "not an integer"),
    ("ts-cls v1 T=2 D=1 C=2\n0 0.5 0.7\n", 2, "label"),
    ("ts-cls v1 T=2 D=1 C=2\n0\t0.5 abc\n", 2, "abc"),
])
def test_parse_errors_name_line(tmp_path, body, line, what):
    with pytest.raises(ParseError, match=what) as ei:
        parse_classification_file(write(tmp_path, "bad.txt", body))
    assert ei.value.line == line
    assert f":{line}:" in str(ei.value)


def test_roundtrip_modulo_whitespace(tmp_path):
    src = "ts-cls v1 T=3 D=1 C=3\n2\t0.1   -1.5 3.0\n0\t1e-3 2 -0.25\n"
    ds = parse_classification_file(write(tmp_path, "a.txt", src))
    out = tmp_path / "b.txt"
    write_classification_file(ds, out)
    again = parse_classification_file(out)
    np.testing.assert_array_equal(again.X, ds.X)
    np.testing.assert_array_equal(again.labels, ds.labels)
    assert format_classification(again) == out.read_text()


def test_zscore_per_series():
    X = np.array([[[1.0], [3.0]], [[2.0], [2.0]]])
    ds = ClassificationDataset(2, 1, 2, np.array([0, 1]), X).zscore()
    np.testing.assert_allclose(ds.X[0, :, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(ds.X[1], 0.0)


def test_ucr_conversion(tmp_path):
    src = write(tmp_path, "ucr.txt", "2,0.1,0.2\n-1,0.3,0.4\n2,0.5,0.6\n")
    ds = ucr_to_tscls(src, tmp_path / "out.txt")
    assert ds.C == 2 and ds.labels.tolist() == [1, 0, 1]
    again = parse_classification_file(tmp_path / "out.txt")
    np.testing.assert_array_equal(again.X, ds.X)


# -- regression CSV ------------------------------------------------------------

def test_parse_csv(tmp_path):
    s = parse_regression_csv(write(tmp_path, "r.csv", "a,b\n1,2\n3,4"))
    assert (s.N, s.D, s.names) == (2, 2, ["a", "b"])
    np.testing.assert_array_equal(s.values, [[1, 2], [3, 4]])


def test_parse_csv_header_only(tmp_path):
    s = parse_regression_csv(write(tmp_path, "r.csv", "a,b\n"))
    assert s.N == 0 and s.D == 2


@pytest.mark.parametrize("body, row", [("a,b\n1,2\n3\n", 3), ("a,b\n1,2\n3,x\n", 3)])
def test_parse_csv_errors(tmp_path, body, row):
    with pytest.raises(ParseError) as ei:
        parse_regression_csv(write(tmp_path, "r.csv", body))
    assert ei.value.line == row


# -- splitting and windows -----------------------------------------------------

@pytest.mark.parametrize("N, want", [(10, (7, 3)), (3, (2, 1))])
def test_chronological_split(N, want):
    x = np.arange(N, dtype=float)[:, None]
    tr, te = chronological_split(x)
    assert (len(tr), len(te)) == want
    np.testing.assert_array_equal(np.vstack([tr, te]), x)


def test_split_errors():
    with pytest.raises(ValueError):
        chronological_split(np.zeros((1, 1)))
    with pytest.raises(ValueError):
        chronological_split(np.zeros((5, 1)), 1.0)


def test_windows_example():
    seg = np.arange(1, 11, dtype=float)[:, None]
    w = make_windows(seg, 3, 3)
    assert len(w) == 5
    np.testing.assert_array_equal(w.inputs[0, :, 0], [1, 2, 3])
    np.testing.assert_array_equal(w.targets[0, :, 0], [4, 5, 6])
    assert len(make_windows(seg[:6], 3, 3)) == 1
    with pytest.raises(ValueError, match="at least L\\+P=6"):
        make_windows(seg[:5], 3, 3)


def test_window_count_exhaustive():
    for L in (3, 6, 12, 24):
        for P in (3, 6, 12, 24):
            for N in range(L + P, 51):
                seg = np.arange(N, dtype=float)
                w = make_windows(seg, L, P)
                brute = [(i, i + L + P) for i in range(N) if i + L + P <= N]
                assert len(w) == len(brute) == N - L - P + 1
                assert w.targets[-1, -1, 0] == N - 1


def test_normalizer():
    n = fit_normalizer(np.array([[0.0, 4.0], [5.0, 4.0], [10.0, 4.0]]))
    np.testing.assert_array_equal(n.apply([[0, 4], [5, 4], [10, 4]]), [[0, 0], [0.5, 0], [1, 0]])
    x = np.array([[2.5, 9.0], [-3.0, 1.0]])
    np.testing.assert_allclose(n.invert(n.apply(x))[:, 0], x[:, 0], rtol=0, atol=1e-12)


def test_normalizer_before_fit():
    from memdd.data import Normalizer
    with pytest.raises(NotFittedError):
        Normalizer().apply([1.0])


def test_no_test_leakage():
    series = np.sin(np.arange(40, dtype=float))[:, None]
    a = build_regression_task(series, 3, 3)
    mutated = series.copy()
    mutated[28:] = 1e6
    b = build_regression_task(mutated, 3, 3)
    np.testing.assert_array_equal(a.normalizer.lo, b.normalizer.lo)
    np.testing.assert_array_equal(a.normalizer.hi, b.normalizer.hi)
    np.testing.assert_array_equal(a.train.inputs, b.train.inputs)
    np.testing.assert_array_equal(a.train.targets, b.train.targets)


def test_ucr_ts_layout(tmp_path):
    src = write(tmp_path, "x.ts", "#comment\n@problemName X\n@classLabel true a b\n@data\n"
                                  "1,2,3:4,5,6:b\n7,8,9:1,2,3:a\n")
    ds = ucr_to_tscls(src, tmp_path / "out.txt")
    assert (ds.T, ds.D, ds.C) == (3, 2, 2)
    assert ds.labels.tolist() == [1, 0]
    np.testing.assert_array_equal(ds.X[0], [[1, 4], [2, 5], [3, 6]])


def test_ucr_numeric_labels_by_value(tmp_path):
    src = write(tmp_path, "u.txt", "1.0 0.1 0.2\n10 0.3 0.4\n1 0.5 0.6\n")
    assert ucr_to_tscls(src, tmp_path / "o.txt").labels.tolist() == [0, 1, 0]
