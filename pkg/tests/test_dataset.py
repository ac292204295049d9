import numpy as np
import pytest
from PIL import Image

from spinann import dataset as ds


def test_synthetic_size_range_and_labels():
    d = ds.synthetic_glyphs(1, 10)
    assert len(d) == 260 and d.X.shape == (260, 256)
    assert d.X.min() >= 0 and d.X.max() <= 1
    np.testing.assert_array_equal(np.bincount(d.y), np.full(26, 10))


def test_synthetic_deterministic_files(tmp_path):
    a = ds.gen_synthetic_dataset(5, 2, tmp_path / "a")
    b = ds.gen_synthetic_dataset(5, 2, tmp_path / "b")
    assert [p.relative_to(tmp_path / "a") for p in a] == [p.relative_to(tmp_path / "b") for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    back = ds.load_dataset(tmp_path / "a")
    np.testing.assert_allclose(back.X, ds.synthetic_glyphs(5, 2).X, atol=5e-7)


def test_seeds_differ():
    assert not np.array_equal(ds.synthetic_glyphs(0, 1).X, ds.synthetic_glyphs(1, 1).X)


def test_resample_identity_and_area_average():
    img = np.random.default_rng(0).uniform(0, 1, (16, 16))
    np.testing.assert_array_equal(ds.resample_area(img), img.astype(np.float32))
    checker = (np.indices((32, 32)).sum(axis=0) % 2).astype(float)
    np.testing.assert_allclose(ds.resample_area(checker), 0.5, atol=1e-6)


def write_pgm(path, arr):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path)


def test_ingest_pgm(tmp_path):
    write_pgm(tmp_path / "A" / "white.pgm", np.full((40, 40), 255))
    checker = (np.indices((32, 32)).sum(axis=0) % 2) * 255
    write_pgm(tmp_path / "Sample013" / "check.pgm", checker)
    d = ds.ingest_images(tmp_path)
    assert list(d.y) == [0, 2]
    np.testing.assert_allclose(d.X[0], 1.0, atol=1e-6)
    np.testing.assert_allclose(d.X[1], 0.5, atol=1e-6)


def test_ingest_reports_bad_paths(tmp_path):
    (tmp_path / "B").mkdir()
    (tmp_path / "B" / "broken.pgm").write_bytes(b"not an image")
    (tmp_path / "B" / "broken2.pgm").write_bytes(b"nope")
    with pytest.raises(ds.DatasetError) as err:
        ds.ingest_images(tmp_path)
    assert "broken.pgm" in str(err.value) and "broken2.pgm" in str(err.value)


def test_ingest_csv_and_errors(tmp_path):
    (tmp_path / "C").mkdir()
    np.savetxt(tmp_path / "C" / "x.csv", np.full((16, 16), 255.0), delimiter=",")
    np.testing.assert_allclose(ds.ingest_images(tmp_path, "csv").X, 1.0)
    with pytest.raises(ds.DatasetError):
        ds.ingest_images(tmp_path, "tiff")
    (tmp_path / "not-a-letter").mkdir()
    with pytest.raises(ds.DatasetError, match="label"):
        ds.ingest_images(tmp_path, "csv")


def test_invalid_dataset():
    with pytest.raises(ds.DatasetError):
        ds.Dataset(np.full((2, 4), 1.5), np.array([0, 1]))
    with pytest.raises(ds.DatasetError):
        ds.synthetic_glyphs(0, 0)
