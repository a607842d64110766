import numpy as np
import pytest

from igprm import costnet
from igprm.costnet import Model, NetSpec
from igprm.errors import (
    BadMagic,
    DimensionMismatch,
    ShapeMismatch,
    TruncatedFile,
    VersionUnsupported,
)


@pytest.fixture(scope="module")
def model16():
    return costnet.init_model(NetSpec(k=16), seed=1)


def _zero_model(spec):
    return Model(spec, {n: np.zeros(s, np.float32) for n, s in spec.tensor_shapes()})


class TestWeightFile:
    def test_save_load_bit_exact(self, tmp_path, model16):
        path = str(tmp_path / "w.igpw")
        costnet.save_weights(model16, path)
        back = costnet.load_weights(path)
        assert back.spec == model16.spec
        for name in model16.tensors:
            assert np.array_equal(model16.tensors[name], back.tensors[name])
            assert back.tensors[name].dtype == np.float32

    def test_file_round_trips_byte_exact(self, tmp_path, model16):
        p1 = str(tmp_path / "a.igpw")
        p2 = str(tmp_path / "b.igpw")
        costnet.save_weights(model16, p1)
        costnet.save_weights(costnet.load_weights(p1), p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_bad_magic(self, tmp_path, model16):
        path = tmp_path / "w.igpw"
        costnet.save_weights(model16, str(path))
        data = bytearray(path.read_bytes())
        data[:4] = b"NOPE"
        path.write_bytes(bytes(data))
        with pytest.raises(BadMagic):
            costnet.load_weights(str(path))

    def test_unsupported_version(self, tmp_path, model16):
        path = tmp_path / "w.igpw"
        costnet.save_weights(model16, str(path))
        data = bytearray(path.read_bytes())
        data[4] = 99
        path.write_bytes(bytes(data))
        with pytest.raises(VersionUnsupported):
            costnet.load_weights(str(path))

    def test_truncated(self, tmp_path, model16):
        path = tmp_path / "w.igpw"
        costnet.save_weights(model16, str(path))
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(TruncatedFile):
            costnet.load_weights(str(path))

    def test_shape_mismatch_names_tensor(self, tmp_path, model16):
        path = str(tmp_path / "w.igpw")
        spec = model16.spec
        tensors = {n: np.array(a) for n, a in model16.tensors.items()}
        tensors["enc2.conv1.weight"] = np.zeros((13, 32, 3, 3), np.float32)
        ordered = [(n, tensors[n]) for n, _ in spec.tensor_shapes()]
        costnet.write_igpw(path, spec.descriptor(), ordered)
        with pytest.raises(ShapeMismatch, match="enc2.conv1.weight"):
            costnet.load_weights(path)

    def test_generic_container_reads_any_tensors(self, tmp_path):
        path = str(tmp_path / "fixture.igpw")
        tensors = [("parity_input", np.random.default_rng(0).random((4, 8, 8)).astype(np.float32)),
                   ("parity_embedding", np.arange(16, dtype=np.float32)),
                   ("parity_output", np.zeros((8, 8), np.float32))]
        costnet.write_igpw(path, {"purpose": "fixture"}, tensors)
        descriptor, back = costnet.read_igpw(path)
        assert descriptor == {"purpose": "fixture"}
        for name, arr in tensors:
            assert np.array_equal(back[name], arr)


class TestPredict:
    def test_zero_weights_give_half(self):
        spec = NetSpec(k=8)
        model = _zero_model(spec)
        channels = np.random.default_rng(0).random((4, 64, 64)).astype(np.float32)
        out = costnet.predict(model, channels, np.ones(8))
        assert (out.values == 0.5).all()

    def test_output_matches_input_size(self, model16):
        for h, w in ((64, 64), (32, 48)):
            channels = np.random.default_rng(1).random((4, h, w)).astype(np.float32)
            out = costnet.predict(model16, channels, np.zeros(16))
            assert out.values.shape == (h, w)

    def test_output_open_interval(self, model16):
        channels = np.random.default_rng(2).random((4, 64, 64)).astype(np.float32)
        out = costnet.predict(model16, channels, np.full(16, 0.3)).values
        assert (out > 0).all() and (out < 1).all()

    def test_bitwise_deterministic(self, model16):
        channels = np.random.default_rng(3).random((4, 64, 64)).astype(np.float32)
        emb = np.full(16, 0.1)
        a = costnet.predict(model16, channels, emb).values
        b = costnet.predict(model16, channels, emb).values
        assert np.array_equal(a, b)

    def test_dimension_checks(self, model16):
        good = np.zeros((4, 64, 64), np.float32)
        with pytest.raises(DimensionMismatch):
            costnet.predict(model16, np.zeros((3, 64, 64), np.float32), np.zeros(16))
        with pytest.raises(DimensionMismatch):
            costnet.predict(model16, np.zeros((4, 62, 64), np.float32), np.zeros(16))
        with pytest.raises(DimensionMismatch):
            costnet.predict(model16, good, np.zeros(8))

    def test_translation_equivariance_with_wrap(self):
        # shift by one pooling period; interior agrees, boundary band excluded
        spec = NetSpec(k=16)
        emb = np.random.default_rng(0).standard_normal(16).astype(np.float32) * 0.25
        x = np.random.default_rng(5).random((4, 64, 64)).astype(np.float32)

        model = costnet.init_model(spec, seed=3, scale=0.4)
        y0 = costnet.predict(model, x, emb).values
        y1 = costnet.predict(model, np.roll(x, (4, 4), axis=(1, 2)), emb).values
        band = 8
        diff = np.abs(np.roll(y0, (4, 4), axis=(0, 1)) - y1)[band:-band, band:-band]
        assert float(diff.max()) <= 1e-4

        # outside the receptive field of any padded border the match is exact
        model_full = costnet.init_model(spec, seed=3, scale=1.0)
        z0 = costnet.predict(model_full, x, emb).values
        z1 = costnet.predict(model_full, np.roll(x, (4, 4), axis=(1, 2)), emb).values
        wide = 26
        assert np.array_equal(np.roll(z0, (4, 4), axis=(0, 1))[wide:-wide, wide:-wide],
                              z1[wide:-wide, wide:-wide])

    def test_embedding_planes_change_output(self, model16):
        channels = np.random.default_rng(4).random((4, 64, 64)).astype(np.float32)
        a = costnet.predict(model16, channels, np.zeros(16)).values
        b = costnet.predict(model16, channels, np.ones(16)).values
        assert not np.array_equal(a, b)
