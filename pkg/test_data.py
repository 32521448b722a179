import numpy as np
import pytest

from geoclip.core.errors import DataParseError, NonNumericCellError, RowLengthError, SchemaError
from geoclip.data import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    SplitSpec,
    export_bundled,
    gen_synthetic_classification,
    gen_synthetic_regression,
    load_bundled,
    prepare,
    split,
    standardize,
)
from geoclip.io import DatasetSchema, load_csv, write_csv


def toy(n, p=3, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset("toy", rng.standard_normal((n, p)) * 5 + 2, rng.standard_normal(n))


# -- splits -----------------------------------------------------------------------

@pytest.mark.parametrize("n,sizes", [(100, (80, 10, 10)), (442, (353, 44, 45)), (569, (455, 56, 58))])
def test_split_sizes(n, sizes):
    assert SplitSpec().sizes(n) == sizes
    parts = split(toy(n), SplitSpec(seed=3))
    assert tuple(part.n for part in parts) == sizes


def test_split_is_disjoint_and_seeded():
    data = Dataset("ids", np.arange(200.0)[:, None], np.arange(200.0))
    a = split(data, SplitSpec(seed=5))
    b = split(data, SplitSpec(seed=5))
    c = split(data, SplitSpec(seed=6))
    ids = [set(part.targets.astype(int)) for part in a]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    assert set.union(*ids) == set(range(200))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.targets, y.targets)
    assert not np.array_equal(a[0].targets, c[0].targets)


def test_split_needs_ten_samples():
    with pytest.raises(ValueError):
        split(toy(9))


def test_split_fractions_must_sum_to_one():
    with pytest.raises(ValueError):
        SplitSpec(0.8, 0.2, 0.1)


# -- preprocessing ------------------------------------------------------------------

def test_standardize_uses_training_statistics_only():
    train, val, test = split(toy(300), SplitSpec(seed=1))
    std_train, _, std_test = standardize(train, val, test)
    assert np.all(np.abs(std_train.features.mean(axis=0)) <= 1e-8)
    assert np.all(np.abs(std_train.features.std(axis=0) - 1) <= 1e-6)

    perturbed = test.take(np.arange(test.n))
    perturbed = Dataset(perturbed.name, perturbed.features + 100.0, perturbed.targets)
    again_train, _, again_test = standardize(train, val, perturbed)
    np.testing.assert_array_equal(again_train.feature_mean, std_train.feature_mean)
    np.testing.assert_array_equal(again_test.feature_std, std_test.feature_std)
    np.testing.assert_array_equal(again_train.features, std_train.features)


def test_minmax_targets_fit_on_train():
    train, val, test = prepare(toy(400), SplitSpec(seed=2), minmax_targets=True)
    assert train.targets.min() == 0.0 and train.targets.max() == 1.0
    assert val.target_min == train.target_min and test.target_max == train.target_max


def test_minmax_targets_rejected_for_classification():
    data = Dataset("c", np.zeros((20, 2)), np.arange(20) % 2, CLASSIFICATION)
    with pytest.raises(ValueError):
        prepare(data, minmax_targets=True)


def test_dataset_rejects_non_finite():
    with pytest.raises(ValueError):
        Dataset("bad", np.array([[1.0], [np.nan]]), np.zeros(2))
    assert Dataset("c", np.zeros((3, 1)), [0, 2, 1], CLASSIFICATION).num_classes == 3


# -- generators ---------------------------------------------------------------------

def test_regression_generator_correlations(seed):
    data = gen_synthetic_regression(seed=seed)
    assert (data.n, data.p, data.task) == (20000, 10, REGRESSION)
    corr = np.corrcoef(data.features, rowvar=False)
    assert corr[0, 1] == pytest.approx(0.8 ** 2, abs=0.03)
    independent = corr[5:, 5:][np.triu_indices(5, k=1)]
    assert np.all(np.abs(independent) <= 0.03)
    assert np.all(np.abs(corr[:5, 5:]) <= 0.03)


def test_generators_are_deterministic():
    a, b = gen_synthetic_regression(n=500, seed=4), gen_synthetic_regression(n=500, seed=4)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.targets.tobytes() == b.targets.tobytes()
    assert not np.array_equal(a.features, gen_synthetic_regression(n=500, seed=5).features)
    c = gen_synthetic_classification(n=500, p=20, corr_block=5, seed=4)
    d = gen_synthetic_classification(n=500, p=20, corr_block=5, seed=4)
    np.testing.assert_array_equal(c.targets, d.targets)


def test_classification_labels_balanced(seed):
    data = gen_synthetic_classification(seed=seed)
    assert (data.n, data.p, data.num_classes) == (20000, 400, 2)
    assert set(np.unique(data.targets)) == {0, 1}
    assert 0.4 <= data.targets.mean() <= 0.6


def test_generator_rejects_bad_block():
    with pytest.raises(ValueError):
        gen_synthetic_regression(n=50, p=3, corr_block=4)


# -- bundled tables -----------------------------------------------------------------

@pytest.mark.parametrize("name,n,p", [("diabetes", 442, 10), ("breast_cancer", 569, 30)])
def test_bundled_sizes_survive_csv(name, n, p, tmp_path):
    data = load_bundled(name)
    assert (data.n, data.p) == (n, p)
    path = export_bundled(name, tmp_path / f"{name}.csv")
    loaded = load_csv(path, path.with_suffix(".schema"))
    assert (loaded.n, loaded.p) == (n, p)
    np.testing.assert_allclose(loaded.features, data.features, rtol=1e-15)
    np.testing.assert_array_equal(loaded.targets, data.targets)


def test_unknown_bundled_name():
    with pytest.raises(ValueError):
        load_bundled("iris")


# -- CSV ingestion ------------------------------------------------------------------

def test_load_csv_with_categories(tmp_csv):
    body = "id,a,proto,label\n1,0.5,tcp,B\n\n2,1.5,udp,S\n3,2.5,tcp,S\n"
    schema = ("name = tiny\ntarget = label\ntask = classification\nignore = id\n"
              "categorical.proto = tcp:0, udp:1\ncategorical.label = B:0, S:1\n")
    data = load_csv(*tmp_csv(body, schema))
    assert data.name == "tiny"
    np.testing.assert_array_equal(data.features, [[0.5, 0.0], [1.5, 1.0], [2.5, 0.0]])
    np.testing.assert_array_equal(data.targets, [0, 1, 1])


def test_load_csv_headerless(tmp_csv):
    data = load_csv(*tmp_csv("1,2,3\n4,5,6\n", "target = 2\ntask = regression\nheader = false\n"))
    np.testing.assert_array_equal(data.targets, [3.0, 6.0])
    assert data.p == 2


def test_load_csv_splits_when_asked(tmp_csv):
    rows = "\n".join(f"{i},{i % 7},{i * 0.5}" for i in range(50))
    train, val, test = load_csv(*tmp_csv("a,b,target\n" + rows + "\n"), split_spec=SplitSpec(seed=1))
    assert (train.n, val.n, test.n) == (40, 5, 5)
    assert np.all(np.abs(train.features.mean(axis=0)) <= 1e-8)


def test_row_length_error_names_line(tmp_csv):
    csv_path, schema_path = tmp_csv("a,target\n1,2\n3\n")
    with pytest.raises(RowLengthError) as info:
        load_csv(csv_path, schema_path)
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_non_numeric_cell_names_line(tmp_csv):
    csv_path, schema_path = tmp_csv("a,target\n1,2\n\n3,4\nx,5\n")
    with pytest.raises(NonNumericCellError) as info:
        load_csv(csv_path, schema_path)
    assert info.value.line == 5
    with pytest.raises(NonNumericCellError):
        load_csv(*tmp_csv("a,target\n1,inf\n", name="inf"))


def test_parse_errors_are_distinct(tmp_csv):
    with pytest.raises(DataParseError, match="empty"):
        load_csv(*tmp_csv("", name="empty"))
    with pytest.raises(DataParseError, match="no data rows"):
        load_csv(*tmp_csv("a,target\n", name="header_only"))
    with pytest.raises(DataParseError, match="nonnegative integers"):
        load_csv(*tmp_csv("a,target\n1,0.5\n", "target = target\ntask = classification\n", name="labels"))
    assert not issubclass(RowLengthError, NonNumericCellError)


def test_invalid_utf8_is_a_parse_error(tmp_csv):
    csv_path, schema_path = tmp_csv("")
    csv_path.write_bytes(b"a,target\n1,2\n\xff\xfe,3\n")
    with pytest.raises(DataParseError, match="UTF-8") as info:
        load_csv(csv_path, schema_path)
    assert info.value.path == str(csv_path)
    assert info.value.line == 3


def test_schema_errors(tmp_csv):
    csv_path, _ = tmp_csv("a,target\n1,2\n")
    with pytest.raises(SchemaError, match="not found"):
        load_csv(csv_path, DatasetSchema(target="y", task=REGRESSION))
    for text, message in [
        ("task = regression\n", "target"),
        ("target = y\ntask = regression\ncolour = red\n", "line 3"),
        ("target = y\ntask = regression\nheader = maybe\n", "boolean"),
        ("target = y\ntask = clustering\n", "task"),
    ]:
        _, schema_path = tmp_csv("", text, name="schema_case")
        with pytest.raises(SchemaError, match=message):
            DatasetSchema.parse(schema_path)


def test_written_schema_reads_back(tmp_path):
    data = gen_synthetic_classification(n=60, p=4, corr_block=2, seed=1)
    path = write_csv(data, tmp_path / "s.csv")
    schema = DatasetSchema.parse(path.with_suffix(".schema"))
    assert (schema.target, schema.task, schema.classes) == ("target", CLASSIFICATION, 2)
    loaded = load_csv(path, schema)
    np.testing.assert_array_equal(loaded.targets, data.targets)
    np.testing.assert_array_equal(loaded.features, data.features)
