"""Time the numba and numpy search kernels on one block and one full frame.

    python benchmarks/bench_kernels.py [--range 32] [--block 16] [--size 256]

Both backends run in the same process and their cost surfaces are checked
for bit equality before timings are reported.
"""
import argparse
import time

import numpy as np

from fisheye_me import _kernels
from fisheye_me.motion import Block, SearchConfig, block_perspective_mm, hybrid_compensate
from fisheye_me.projection import CameraModel
from fisheye_me.sampling import upsample
from fisheye_me.synth import PlanarScene, noise_texture, render_sequence, translation_for_steps


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--range", type=int, default=32)
    ap.add_argument("--block", type=int, default=16)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cam = CameraModel.circular(args.size)
    depth = 1000.0
    scene = PlanarScene(noise_texture(512, 64, seed=1), 15.625, depth, translation_for_steps(cam, depth, 5))
    ref, target = render_sequence(scene, cam, 2)
    R, bs = args.range, args.block
    c = args.size // 2 - bs
    blk = Block(c, c, bs, bs)
    padded = np.pad(ref, R, mode="edge")
    up = upsample(ref, 8)
    tgt = np.ascontiguousarray(target[blk.slices()])
    xp, yp = block_perspective_mm(blk, cam)
    eme_args = (xp, yp, tgt.astype(np.float64).ravel(), up.plane, 8, cam.pitch_x, cam.pitch_y, cam.f, *cam.center, R)

    print(f"block {bs}x{bs}, R={R} ({(2 * R + 1) ** 2} candidates), frame {args.size}^2")
    rows = []
    surfaces = {}
    for name, tme_fn, eme_fn in [
        ("numba", _kernels.tme_surface_numba, _kernels.eme_surface_numba),
        ("numpy", _kernels.tme_surface_numpy, _kernels.eme_surface_numpy),
    ]:
        if tme_fn is None:
            print(f"{name}: unavailable")
            continue
        tme_fn(tgt, padded, blk.col, blk.row, 1)  # JIT warm-up
        eme_fn(*eme_args[:-1], 1)
        t_tme, s_tme = best_of(lambda: tme_fn(tgt, padded, blk.col, blk.row, R), args.repeat)
        t_eme, s_eme = best_of(lambda: eme_fn(*eme_args), args.repeat)
        surfaces[name] = (s_tme, s_eme)
        _kernels.USE_NUMBA = name == "numba"
        t_frame, _ = best_of(lambda: hybrid_compensate(target, ref, cam, SearchConfig(min(R, 16), 16), up_ref=up), 1)
        rows.append((name, t_tme, t_eme, t_frame))

    print(f"{'backend':8s} {'tme/block':>12s} {'eme/block':>12s} {'hybrid frame (R<=16)':>22s}")
    for name, a, b, c in rows:
        print(f"{name:8s} {a * 1e3:10.2f}ms {b * 1e3:10.2f}ms {c:20.2f}s")
    if len(surfaces) == 2:
        same = all(np.array_equal(x, y) for x, y in zip(surfaces["numba"], surfaces["numpy"]))
        print("cost surfaces bit-identical:", same)


if __name__ == "__main__":
    main()
