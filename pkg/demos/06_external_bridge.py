"""Plug an out-of-process denoiser into the solver.

The solver talks to a child process over a small framed stdin/stdout protocol,
so any runtime that can read and write pipes can serve the noise predictions.
This demo drives the bundled Node bridge in its training-free Gaussian
fallback mode; swap --mode model --model-path adapter.mjs to serve a real
pretrained image denoiser.

Build the bridge first:  cd bridge && npm install && npm run build
"""

import shutil
from pathlib import Path

import numpy as np

import vidsolve as vs

bridge = Path(__file__).resolve().parent.parent / "bridge" / "dist" / "main.js"
node = shutil.which("node")
if node is None or not bridge.exists():
    raise SystemExit("bridge not built; run: cd bridge && npm install && npm run build")

cmd = f"{node} {bridge} --mode gaussian-fallback --mu 0.5 --sigma0 0.5"

clip = vs.synth_video("moving_square", 8, 1, 16, 16, seed=0)
op = vs.temporal_psf(vs.PsfSpec.uniform(3), clip.shape)
measurement = vs.degrade(clip, op, 0.0, seed=1)

with vs.ExternalEps(cmd, timeout=5.0) as remote:
    # spot-check one prediction against the in-process implementation
    x = np.random.default_rng(0).standard_normal((2, 1, 8, 8)).astype(np.float32).astype(np.float64)
    local = vs.OracleGaussianEps(0.5, 0.5).predict(x, 500, 0.3)
    over_the_wire = remote.predict(x, 500, 0.3)
    print(f"max |local - bridge| = {np.abs(local - over_the_wire).max():.2e} (float32 wire)")

    cfg = vs.SolverConfig(nfe=10, l=3, eta=0.15, seed=0)
    recon, _ = vs.solve(op, measurement, remote, vs.default_schedule(), cfg)
    print(f"solve through the bridge: PSNR {vs.psnr(recon, clip):.2f} dB "
          f"(raw {vs.psnr(measurement, clip):.2f} dB)")
