import numpy as np
import pytest

from pgnlm import (
    KIND_COVARIANCE,
    KIND_GUIDE,
    KIND_LABELS,
    KIND_SLC,
    ContainerError,
    outer_product,
    read_container,
    read_expected,
    write_container,
)
from pgnlm.containers import HEADER_SIZE, MAGIC


def make_slc(rng, shape):
    # float32-representable values so round trips are bit exact
    re = rng.standard_normal(shape + (3,)).astype(np.float32).astype(np.float64)
    im = rng.standard_normal(shape + (3,)).astype(np.float32).astype(np.float64)
    return re + 1j * im


class TestRoundTrip:
    def test_slc(self, tmp_path):
        rng = np.random.default_rng(0)
        arr = make_slc(rng, (5, 7))
        path = tmp_path / "a.bin"
        write_container(path, KIND_SLC, arr)
        kind, back = read_container(path)
        assert kind == KIND_SLC
        np.testing.assert_array_equal(back, arr)
        # byte-level stability: writing the read raster reproduces the file
        path2 = tmp_path / "b.bin"
        write_container(path2, KIND_SLC, back)
        assert path.read_bytes() == path2.read_bytes()

    def test_guide(self, tmp_path):
        rng = np.random.default_rng(1)
        arr = rng.random((4, 6, 5)).astype(np.float32).astype(np.float64)
        path = tmp_path / "g.bin"
        write_container(path, KIND_GUIDE, arr)
        kind, back = read_container(path)
        assert kind == KIND_GUIDE and back.shape == (4, 6, 5)
        np.testing.assert_array_equal(back, arr)

    def test_covariance(self, tmp_path):
        rng = np.random.default_rng(2)
        cov = outer_product(make_slc(rng, (3, 3)))
        path = tmp_path / "c.bin"
        write_container(path, KIND_COVARIANCE, cov)
        kind, back = read_container(path)
        assert kind == KIND_COVARIANCE
        # stored single precision; Hermitian structure is exact
        np.testing.assert_allclose(back, cov, rtol=1e-6, atol=1e-7)
        np.testing.assert_array_equal(back, np.conj(np.swapaxes(back, -1, -2)))
        path2 = tmp_path / "c2.bin"
        write_container(path2, KIND_COVARIANCE, back)
        assert path.read_bytes() == path2.read_bytes()

    def test_labels(self, tmp_path):
        labels = np.arange(12, dtype=np.int64).reshape(3, 4)
        path = tmp_path / "l.bin"
        write_container(path, KIND_LABELS, labels)
        kind, back = read_container(path)
        assert kind == KIND_LABELS
        np.testing.assert_array_equal(back, labels)

    def test_write_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(3)
        arr = make_slc(rng, (6, 6))
        p1, p2 = tmp_path / "x1.bin", tmp_path / "x2.bin"
        write_container(p1, KIND_SLC, arr)
        write_container(p2, KIND_SLC, arr)
        assert p1.read_bytes() == p2.read_bytes()


class TestByteLayout:
    def test_header_is_17_bytes(self):
        assert HEADER_SIZE == 6 + 1 + 4 + 4 + 2

    def test_one_pixel_slc_size(self, tmp_path):
        path = tmp_path / "p.bin"
        write_container(path, KIND_SLC, np.ones((1, 1, 3), complex))
        # 3 channels x 2 floats x 4 bytes payload after the 17-byte header
        assert path.stat().st_size == HEADER_SIZE + 24

    def test_two_by_two_covariance_payload(self, tmp_path):
        path = tmp_path / "c.bin"
        cov = np.tile(np.eye(3, dtype=complex), (2, 2, 1, 1))
        write_container(path, KIND_COVARIANCE, cov)
        assert path.stat().st_size == HEADER_SIZE + 2 * 2 * 9 * 4

    def test_little_endian_header(self, tmp_path):
        path = tmp_path / "h.bin"
        write_container(path, KIND_GUIDE, np.ones((2, 300, 1)))
        blob = path.read_bytes()
        assert blob[:6] == MAGIC
        assert blob[6] == KIND_GUIDE
        assert int.from_bytes(blob[7:11], "little") == 2
        assert int.from_bytes(blob[11:15], "little") == 300
        assert int.from_bytes(blob[15:17], "little") == 1


class TestErrors:
    def err(self, excinfo):
        return excinfo.value.code

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        write_container(path, KIND_SLC, np.ones((1, 1, 3), complex))
        blob = bytearray(path.read_bytes())
        blob[:6] = b"PGNLM0"
        path.write_bytes(bytes(blob))
        with pytest.raises(ContainerError) as excinfo:
            read_container(path)
        assert self.err(excinfo) == "bad_magic"

    def test_truncated_payload_names_byte_counts(self, tmp_path):
        path = tmp_path / "t.bin"
        write_container(path, KIND_SLC, np.ones((2, 2, 3), complex))
        blob = path.read_bytes()
        path.write_bytes(blob[:-4])  # one float short
        with pytest.raises(ContainerError) as excinfo:
            read_container(path)
        assert self.err(excinfo) == "truncated"
        assert "expected 96" in str(excinfo.value)
        assert "found 92" in str(excinfo.value)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "tr.bin"
        write_container(path, KIND_GUIDE, np.ones((2, 2, 1)))
        path.write_bytes(path.read_bytes() + b"\x00\x00")
        with pytest.raises(ContainerError) as excinfo:
            read_container(path)
        assert self.err(excinfo) == "trailing"

    def test_nan_payload_rejected_on_read(self, tmp_path):
        path = tmp_path / "n.bin"
        write_container(path, KIND_GUIDE, np.ones((1, 1, 1)))
        blob = bytearray(path.read_bytes())
        blob[HEADER_SIZE:HEADER_SIZE + 4] = np.float32("nan").tobytes()
        path.write_bytes(bytes(blob))
        with pytest.raises(ContainerError) as excinfo:
            read_container(path)
        assert self.err(excinfo) == "nonfinite"

    def test_nan_payload_rejected_on_write(self, tmp_path):
        arr = np.ones((2, 2, 3), complex)
        arr[0, 0, 0] = np.nan
        with pytest.raises(ContainerError) as excinfo:
            write_container(tmp_path / "w.bin", KIND_SLC, arr)
        assert self.err(excinfo) == "nonfinite"

    def test_empty_dimension_rejected(self, tmp_path):
        with pytest.raises(ContainerError):
            write_container(tmp_path / "e.bin", KIND_SLC,
                            np.ones((0, 4, 3), complex))

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ContainerError) as excinfo:
            write_container(tmp_path / "k.bin", 9, np.ones((1, 1)))
        assert self.err(excinfo) == "bad_kind"

    def test_label_range(self, tmp_path):
        with pytest.raises(ContainerError):
            write_container(tmp_path / "r.bin", KIND_LABELS,
                            np.full((2, 2), -1, dtype=np.int64))

    def test_header_shorter_than_minimum(self, tmp_path):
        path = tmp_path / "s.bin"
        path.write_bytes(b"PGN")
        with pytest.raises(ContainerError) as excinfo:
            read_container(path)
        assert self.err(excinfo) == "truncated"

    def test_read_expected_kind_mismatch(self, tmp_path):
        path = tmp_path / "m.bin"
        write_container(path, KIND_GUIDE, np.ones((2, 2, 1)))
        with pytest.raises(ContainerError) as excinfo:
            read_expected(path, KIND_SLC)
        assert self.err(excinfo) == "bad_kind"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ContainerError) as excinfo:
            read_container(tmp_path / "nope.bin")
        assert self.err(excinfo) == "io"
