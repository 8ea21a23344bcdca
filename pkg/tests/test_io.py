import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from fisheye_me import io as fio

DATA = Path(__file__).parent / "data"
Y4M = DATA / "two_frames_4x4.y4m"


class TestY4M:
    def test_fixture(self):
        frames = list(fio.read_y4m(Y4M))
        assert len(frames) == 2
        np.testing.assert_array_equal(frames[0], np.arange(16, dtype=np.uint8).reshape(4, 4))
        np.testing.assert_array_equal(frames[1], np.arange(200, 216, dtype=np.uint8).reshape(4, 4))
        src = fio.probe_y4m(Y4M)
        assert (src.width, src.height, src.frame_count, src.frame_rate, src.colorspace) == (
            4, 4, 2, "30:1", "420jpeg",
        )

    def test_truncated(self, tmp_path):
        data = Y4M.read_bytes()
        cut = tmp_path / "cut.y4m"
        cut.write_bytes(data[:-5])
        with pytest.raises(fio.TruncatedPayload) as exc:
            list(fio.read_y4m(cut))
        header = len(b"YUV4MPEG2 W4 H4 F30:1 Ip A1:1 C420jpeg\n")
        second_payload = header + 6 + 24 + 6
        assert exc.value.offset == second_payload
        assert str(second_payload) in str(exc.value)

    @pytest.mark.parametrize(
        "blob",
        [b"YUV4MPEG W4 H4\n", b"YUV4MPEG2 W4\n", b"YUV4MPEG2 Wx H4\n", b"YUV4MPEG2 W4 H4 C420p10\n", b"YUV4MPEG2 W4 H4"],
    )
    def test_malformed(self, tmp_path, blob):
        p = tmp_path / "bad.y4m"
        p.write_bytes(blob)
        with pytest.raises(fio.MalformedHeader):
            list(fio.read_y4m(p))

    def test_bad_frame_marker(self, tmp_path):
        p = tmp_path / "bad.y4m"
        p.write_bytes(b"YUV4MPEG2 W2 H2 Cmono\nFRAMX\n1234")
        with pytest.raises(fio.MalformedHeader) as exc:
            list(fio.read_y4m(p))
        assert exc.value.offset == len(b"YUV4MPEG2 W2 H2 Cmono\n")

    @pytest.mark.parametrize("cs", ["mono", "420jpeg", "422", "444"])
    def test_round_trip(self, tmp_path, rng, cs):
        frames = [rng.integers(0, 256, (5, 7), dtype=np.uint8) for _ in range(3)]
        p = tmp_path / "rt.y4m"
        fio.write_y4m(p, frames, colorspace=cs)
        back = list(fio.read_y4m(p))
        assert len(back) == 3
        for a, b in zip(frames, back):
            np.testing.assert_array_equal(a, b)


class TestRaw:
    def test_frames(self, tmp_path, rng):
        frames = [rng.integers(0, 256, (3, 5), dtype=np.uint8) for _ in range(4)]
        p = tmp_path / "x.raw"
        fio.write_raw(p, frames)
        assert p.stat().st_size == 3 * 5 * 4
        back = list(fio.read_raw(p, 5, 3))
        assert len(back) == 4
        np.testing.assert_array_equal(back[2], frames[2])

    def test_truncated(self, tmp_path):
        p = tmp_path / "x.raw"
        p.write_bytes(bytes(32))
        with pytest.raises(fio.TruncatedPayload) as exc:
            list(fio.read_raw(p, 5, 3))
        assert exc.value.offset == 30


class TestImages:
    def test_pgm_bytes(self, tmp_path):
        p = tmp_path / "a.pgm"
        fio.write_pgm(p, np.array([[1, 2], [3, 250]], np.uint8))
        assert p.read_bytes() == b"P5\n2 2\n255\n" + bytes([1, 2, 3, 250])

    @pytest.mark.parametrize("shape", [(1, 1), (7, 3)])
    def test_pgm_round_trip(self, tmp_path, rng, shape):
        f = rng.integers(0, 256, shape, dtype=np.uint8)
        fio.write_pgm(tmp_path / "a.pgm", f)
        np.testing.assert_array_equal(fio.read_pgm(tmp_path / "a.pgm"), f)

    def test_pgm_comment_and_errors(self, tmp_path):
        p = tmp_path / "c.pgm"
        p.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x05\x06")
        np.testing.assert_array_equal(fio.read_pgm(p), [[5, 6]])
        p.write_bytes(b"P2\n2 1\n255\n56")
        with pytest.raises(fio.MalformedHeader):
            fio.read_pgm(p)
        p.write_bytes(b"P5\n2 2\n255\n\x01")
        with pytest.raises(fio.TruncatedPayload):
            fio.read_pgm(p)

    @pytest.mark.parametrize("shape", [(1, 1), (6, 9), (6, 9, 3)])
    def test_png_round_trip(self, tmp_path, rng, shape):
        img = rng.integers(0, 256, shape, dtype=np.uint8)
        fio.write_png(tmp_path / "a.png", img)
        np.testing.assert_array_equal(fio.read_png(tmp_path / "a.png"), img)

    def test_sequence_dir(self, tmp_path, rng):
        frames = [rng.integers(0, 256, (4, 6), dtype=np.uint8) for _ in range(3)]
        for i, f in enumerate(frames):
            (fio.write_pgm if i % 2 else fio.write_png)(tmp_path / f"f{i}.{'pgm' if i % 2 else 'png'}", f)
        back = list(fio.read_sequence(tmp_path))
        for a, b in zip(frames, back):
            np.testing.assert_array_equal(a, b)
        fio.write_pgm(tmp_path / "f9.pgm", np.zeros((5, 6), np.uint8))
        with pytest.raises(fio.DimensionMismatch):
            list(fio.read_sequence(tmp_path))

    def test_size_check(self):
        with pytest.raises(fio.DimensionMismatch):
            list(fio.read_sequence(Y4M, size=(4, 5)))
        with pytest.raises(ValueError):
            fio.read_sequence(DATA / "x.raw")


def one_pair_report():
    cfg = json.loads((DATA / "report_one_pair.json").read_text())["config"]
    modes = {"translational": 3, "equisolid": 10, "equisolid_invalid": 3}
    return fio.RunReport(cfg, [fio.PairResult(0, 4, 5, 30.123456, 31.49999999, 1234, 999, modes)])


class TestReport:
    def test_empty(self, tmp_path):
        cfg = {"camera": {}, "search_range": 1, "block_size": 8, "upsample_scale": 8, "mode": "tme"}
        doc = fio.write_report(fio.RunReport(cfg), tmp_path / "r.json")
        assert doc["pairs"] == [] and doc["config"] == cfg
        assert json.loads((tmp_path / "r.json").read_text()) == doc

    def test_golden(self, tmp_path):
        fio.write_report(one_pair_report(), tmp_path / "r.json")
        assert json.loads((tmp_path / "r.json").read_text()) == json.loads((DATA / "report_one_pair.json").read_text())
        assert list(json.loads((tmp_path / "r.json").read_text())) == ["format", "config", "pairs", "summary"]

    def test_schema(self):
        doc = one_pair_report().to_dict()
        jsonschema.validate(doc, fio.load_schema())

    def test_infinite_sentinel(self):
        rep = fio.RunReport({}, [fio.PairResult(0, 0, 1, math.inf, math.inf, 0, 0, {}), fio.PairResult(1, 1, 2, 30.0, 31.0, 5, 4, {})])
        d = rep.to_dict()
        p = d["pairs"][0]
        assert p["psnr_tme_db"] is None and p["psnr_tme_infinite"] is True
        assert p["psnr_hme_db"] is None and p["psnr_hme_infinite"] is True and p["delta_db"] is None
        assert d["summary"]["excluded_infinite_tme"] == 1
        assert d["summary"]["mean_delta_db"] == 1.0
        json.dumps(d, allow_nan=False)

    def test_delta_and_averages(self, rng):
        pairs = [
            fio.PairResult(i, i, i + 1, t, t + d, 1, 1, {})
            for i, (t, d) in enumerate(zip(rng.uniform(20, 40, 25), rng.uniform(0, 2, 25)))
        ]
        rep = fio.RunReport({}, pairs[::-1])
        s = rep.summary()
        assert s["mean_psnr_tme_db"] == pytest.approx(np.mean([p.psnr_tme for p in pairs]), abs=1e-9)
        assert s["mean_delta_db"] == pytest.approx(np.mean([p.delta for p in pairs]), abs=1e-9)
        d = rep.to_dict()
        assert [p["index"] for p in d["pairs"]] == list(range(25))
        for p in d["pairs"]:
            assert abs(p["delta_db"] - (p["psnr_hme_db"] - p["psnr_tme_db"])) <= 1e-4
