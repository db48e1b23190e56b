"""Smoke test for the `amrlab` extension module.

Build and install with `pip install ./crates/py` (needs maturin), or build
the shared library with
`cargo build --release -p amrlab-py --features extension-module` and copy
`target/release/libamrlab.so` to `amrlab.so` somewhere on PYTHONPATH.
"""

import math
import os
import tempfile

import amrlab


def main():
    ds = amrlab.generate("smooth", dims=32, seed=42)
    assert ds.num_levels == 2, ds
    assert tuple(ds.coarse_dims) == (16, 16, 16)
    dims, orig = ds.uniformize()
    assert tuple(dims) == (32, 32, 32) and len(orig) == 32 ** 3

    for codec in ("LR", "INTERP"):
        cd = amrlab.compress(ds, codec=codec, eb=1e-3, mode="rel")
        recon = amrlab.decompress(cd)
        errs = amrlab.verify_bound(ds, recon, cd)
        assert all(e <= eb for e, eb in zip(errs, cd.level_eb_abs))
        assert cd.compression_ratio() > 1.0
        _, rvals = recon.uniformize()
        p = amrlab.psnr(dims, orig, rvals)
        s = amrlab.ssim3d(dims, orig, rvals)
        assert p > 40.0 and 0.9 < s <= 1.0, (codec, p, s)
        assert amrlab.rssim(s) == 1.0 - s
        print(f"{codec}: cr={cd.compression_ratio():.2f} psnr={p:.2f} ssim={s:.6f}")

    blob = amrlab.compress_grid([16, 16, 16], orig[: 16 ** 3], codec="INTERP", eb=1e-4, mode="abs")
    gdims, gvals = amrlab.decompress_grid(blob)
    assert tuple(gdims) == (16, 16, 16)
    assert max(abs(a - b) for a, b in zip(orig, gvals)) <= 1e-4

    sphere = amrlab.two_level_sphere()
    cracks = {}
    for method in ("resample", "dual-pad", "dual-stitch"):
        mesh = amrlab.extract(sphere, method=method, iso=0.0)
        assert len(mesh) > 0 and mesh.area() > 0.0
        cracks[method] = mesh.interface_open_edges
    assert cracks["resample"] > 0 and cracks["dual-stitch"] == 0, cracks
    print("interface open edges:", cracks)

    original, blocked, resampled = amrlab.demo_1d([float(i) for i in range(9)], block=3)
    assert blocked == [1, 1, 1, 4, 4, 4, 7, 7, 7]
    assert resampled[3] == 2.5 and resampled[6] == 5.5

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "ds")
        ds.write(path)
        assert amrlab.read(path) == ds
        mesh.write_obj(os.path.join(tmp, "m.obj"))

    try:
        amrlab.generate("smooth", dims=12)
    except ValueError:
        pass
    else:
        raise AssertionError("dims 12 must be rejected")

    assert math.isinf(amrlab.psnr([8, 8, 8], orig[:512], orig[:512]))
    print("ok")


if __name__ == "__main__":
    main()
