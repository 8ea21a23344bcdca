import numpy as np
import pytest

from fisheye_me import _kernels
from fisheye_me.metrics import luma_psnr
from fisheye_me.motion import (
    Block,
    Mode,
    MotionVector,
    SearchConfig,
    block_perspective_mm,
    eme_block_samples,
    eme_search,
    hybrid_compensate,
    render_decision_map,
    tile_blocks,
    tme_search,
)
from fisheye_me.projection import CameraModel, backproject_xy, reproject_xy
from fisheye_me.sampling import upsample


def naive_tme(target, ref, block, R):
    h, w = ref.shape
    best = None
    for dy in range(-R, R + 1):
        for dx in range(-R, R + 1):
            ssd = 0
            for i in range(block.height):
                for j in range(block.width):
                    r = min(max(block.row + i + dy, 0), h - 1)
                    c = min(max(block.col + j + dx, 0), w - 1)
                    d = int(target[block.row + i, block.col + j]) - int(ref[r, c])
                    ssd += d * d
            if best is None or ssd < best[1]:
                best = ((dx, dy), ssd)
    return best


class TestTME:
    def test_identical_frames(self, backend, rng):
        f = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        r = tme_search(f, f, Block(8, 8, 8, 8), SearchConfig(4, 8))
        assert r.mv == (0, 0) and r.ssd == 0

    def test_constant_frames_take_first_candidate(self, backend):
        f = np.full((16, 16), 9, np.uint8)
        r = tme_search(f, f, Block(4, 4, 8, 8), SearchConfig(3, 8))
        assert r.mv == (-3, -3) and r.ssd == 0

    def test_shifted_reference(self, backend, rng):
        target = rng.integers(0, 256, (40, 40), dtype=np.uint8)
        ref = np.roll(target, 3, axis=1)  # ref content sits 3 px to the right
        r = tme_search(target, ref, Block(16, 16, 8, 8), SearchConfig(5, 8))
        assert r.mv == MotionVector(3, 0) and r.ssd == 0

    def test_brute_force(self, backend, rng):
        for _ in range(5):
            t = rng.integers(0, 256, (20, 20), dtype=np.uint8)
            ref = rng.integers(0, 256, (20, 20), dtype=np.uint8)
            for b in tile_blocks(20, 20, 8):
                r = tme_search(t, ref, b, SearchConfig(3, 8))
                assert (tuple(r.mv), r.ssd) == naive_tme(t, ref, b, 3)

    def test_candidate_count(self, backend, rng):
        f = rng.integers(0, 256, (24, 24), dtype=np.uint8)
        cfg = SearchConfig(6, 8)
        assert tme_search(f, f, Block(8, 8, 8, 8), cfg).evaluated == cfg.candidate_count == 169

    def test_block_outside(self):
        f = np.zeros((16, 16), np.uint8)
        with pytest.raises(ValueError):
            tme_search(f, f, Block(12, 0, 8, 8), SearchConfig(2, 8))


class TestEME:
    cam = CameraModel.circular(128)

    def test_zero_vector_identity(self, backend, rng):
        f = rng.integers(0, 256, (128, 128), dtype=np.uint8)
        up = upsample(f, 8)
        b = Block(48, 56, 16, 16)
        np.testing.assert_array_equal(eme_block_samples(up, b, self.cam, MotionVector(0, 0)), f[b.slices()])
        r = eme_search(f, up, b, self.cam, SearchConfig(3, 16))
        assert r.mv == (0, 0) and r.ssd == 0.0
        assert r.evaluated == 49

    def test_periphery_invalid(self, backend):
        f = np.zeros((128, 128), np.uint8)
        assert eme_search(f, upsample(f, 2), Block(0, 0, 16, 16), self.cam, SearchConfig(2, 16)) is None

    def test_center_recovery(self, backend, planar_256):
        cam, ref, target = planar_256
        up = upsample(ref, 8)
        for b in (Block(112, 112, 16, 16), Block(128, 128, 16, 16)):
            r = eme_search(target, up, b, cam, SearchConfig(8, 16))
            assert r.mv == (5, 0)

    def test_deviation_from_translation_grows_radially(self):
        # odd size: pixel 32 is exactly on the optical axis
        cam = CameraModel.circular(65)
        cols = np.arange(32, 60, dtype=float)
        rows = np.full_like(cols, 32.0)
        x, y = cam.pixel_grid_mm(cols, rows)
        blk = Block(32, 32, 1, 1)
        assert block_perspective_mm(blk, cam)[0][0] == 0.0
        xp, yp, _ = backproject_xy(x, y, cam.f)
        xe, ye = reproject_xy(xp, yp + 2 * cam.pitch_y, cam.f)
        dev = np.hypot(xe / cam.pitch_x + cam.center[0] - cols, ye / cam.pitch_y + cam.center[1] - (rows + 2))
        assert dev[0] < 0.01
        assert np.all(np.diff(dev) > 0)


class TestHybrid:
    cam = CameraModel.circular(64)

    def test_self_prediction_bit_exact(self, backend, rng):
        f = rng.integers(0, 256, (64, 64), dtype=np.uint8)
        res = hybrid_compensate(f, f, self.cam, SearchConfig(3, 16))
        np.testing.assert_array_equal(res.compensated, f)
        assert all(b.mode is not Mode.EQUISOLID for b in res.blocks)
        assert res.totals()["hybrid"] == 0

    def test_integer_global_shift(self, backend, rng):
        f = np.full((64, 64), 100, np.uint8)
        f[8:-8, 8:-8] = rng.integers(0, 256, (48, 48), dtype=np.uint8)
        target = np.roll(f, (2, -3), axis=(0, 1))
        res = hybrid_compensate(target, f, self.cam, SearchConfig(4, 16))
        assert all(b.ssd_tme == 0 for b in res.blocks)
        np.testing.assert_array_equal(res.compensated, res.compensated_tme)
        np.testing.assert_array_equal(res.compensated, target)

    def test_dominance_and_block_invariants(self, backend, planar_256):
        cam, ref, target = planar_256
        res = hybrid_compensate(target, ref, cam, SearchConfig(6, 32))
        for b in res.blocks:
            if b.ssd_eme is None:
                assert b.mode is Mode.EQUISOLID_INVALID
            else:
                assert b.chosen_ssd == min(b.ssd_tme, b.ssd_eme)
                assert (b.mode is Mode.EQUISOLID) == (b.ssd_eme < b.ssd_tme)
        t = res.totals()
        assert t["hybrid"] <= t["tme"]
        assert t["hybrid"] == sum(
            int(((target[b.block.slices()].astype(int) - res.compensated[b.block.slices()]) ** 2).sum())
            for b in res.blocks
        )
        assert luma_psnr(target, res.compensated).psnr_db > luma_psnr(target, res.compensated_tme).psnr_db
        assert res.mode_counts()["equisolid"] > 0

    def test_partial_blocks(self, rng):
        cam = CameraModel.circular(20)
        f = rng.integers(0, 256, (20, 20), dtype=np.uint8)
        res = hybrid_compensate(f, f, cam, SearchConfig(2, 8))
        assert [tuple(b.block) for b in res.blocks][-1] == (16, 16, 4, 4)
        assert len(res.blocks) == 9
        np.testing.assert_array_equal(res.compensated, f)

    def test_tme_mode_skips_eme(self, rng):
        f = rng.integers(0, 256, (64, 64), dtype=np.uint8)
        res = hybrid_compensate(f, f, self.cam, SearchConfig(2, 16), mode="tme")
        assert res.compensated_eme is None
        assert all(b.mv_eme is None for b in res.blocks)

    def test_errors(self):
        a = np.zeros((64, 64), np.uint8)
        with pytest.raises(ValueError):
            hybrid_compensate(a, np.zeros((64, 60), np.uint8), self.cam, SearchConfig(2, 16))
        with pytest.raises(ValueError):
            hybrid_compensate(a, a, CameraModel.circular(32), SearchConfig(2, 16))
        with pytest.raises(ValueError):
            hybrid_compensate(a, a, self.cam, SearchConfig(2, 16), mode="sad")
        with pytest.raises(ValueError):
            SearchConfig(0, 16)

    def test_backends_agree(self, planar_256, monkeypatch):
        cam, ref, target = planar_256
        cfg = SearchConfig(4, 32)
        runs = []
        for use in (True, False):
            monkeypatch.setattr(_kernels, "USE_NUMBA", use and _kernels.HAVE_NUMBA)
            runs.append(hybrid_compensate(target, ref, cam, cfg))
        a, b = runs
        np.testing.assert_array_equal(a.compensated, b.compensated)
        assert [(x.mode, x.mv_tme, x.mv_eme, x.ssd_eme_search) for x in a.blocks] == [
            (x.mode, x.mv_tme, x.mv_eme, x.ssd_eme_search) for x in b.blocks
        ]

    def test_deterministic(self, planar_256):
        cam, ref, target = planar_256
        cfg = SearchConfig(3, 64)
        a = hybrid_compensate(target, ref, cam, cfg)
        b = hybrid_compensate(target, ref, cam, cfg)
        np.testing.assert_array_equal(a.compensated, b.compensated)
        assert a.blocks == b.blocks


class TestDecisionMap:
    def _result(self, modes, bs=4):
        cam = CameraModel.circular(8)
        f = np.full((8, 8), 128, np.uint8)
        res = hybrid_compensate(f, f, cam, SearchConfig(1, bs), mode="tme")
        for b, m in zip(res.blocks, modes):
            b.mode = m
        return res

    def test_all_red(self):
        res = self._result([Mode.TRANSLATIONAL] * 4)
        m = render_decision_map(res)
        assert (m == np.array([255, 0, 0], np.uint8)).all()

    def test_checkerboard(self):
        T, E = Mode.TRANSLATIONAL, Mode.EQUISOLID
        m = render_decision_map(self._result([T, E, E, Mode.EQUISOLID_INVALID]))
        assert (m[:4, :4] == [255, 0, 0]).all() and (m[:4, 4:] == [0, 255, 0]).all()
        assert (m[4:, :4] == [0, 255, 0]).all() and (m[4:, 4:] == [255, 0, 0]).all()

    def test_blend(self):
        res = self._result([Mode.EQUISOLID] * 4)
        m = render_decision_map(res, res.compensated)
        assert (m == np.array([64, 191, 64], np.uint8)).all()
