"""Recover a fast-moving scene from 7-frame temporal averaging.

The scene drifts 4 px/frame, so averaging each pixel over 7 consecutive
frames wipes out most of the modulation.  The solver alternates per-frame
denoising, 5 conjugate-gradient iterations of data consistency over the whole
volume, and synchronized renoising; the per-step trace shows the residual
falling as frames differentiate.
"""

import numpy as np

import vidsolve as vs

clip = vs.synth_video("gradient_drift", 16, 1, 32, 32, seed=0)
op = vs.temporal_psf(vs.PsfSpec.uniform(7), clip.shape)
measurement = vs.degrade(clip, op, noise_std=0.0, seed=13)

schedule = vs.default_schedule()
cfg = vs.SolverConfig(nfe=20, l=5, eta=0.15, seed=0)
recon, trace = vs.solve(op, measurement, vs.SmootherEps(0.3), schedule, cfg)

print(f"raw measurement : {vs.psnr(measurement, clip):6.2f} dB")
print(f"reconstruction  : {vs.psnr(recon, clip):6.2f} dB")
print(f"ssim            : {vs.ssim(recon, clip):6.3f}")

print("\nper-step data-consistency residual (squared):")
for record in trace.records()[::4]:
    print(f"  t={record['t']:4d}  residual={record['residual']:10.4f}  frame spread={record['inter_batch_diff']:8.2f}")

# the classical yardstick: plain CG with the same total iteration budget wins
# the residual race outright on a noiseless well-posed system; the sampler
# trades a little residual for the prior's influence
cg = vs.standalone_cg(op, measurement, total_iters=cfg.nfe * cfg.l)
print(f"\nstand-alone CG ({cfg.nfe * cfg.l} iters): {vs.psnr(cg, clip):6.2f} dB, "
      f"residual {np.sqrt(vs.residual(op, cg, measurement)):.2e} "
      f"(solver: {np.sqrt(vs.residual(op, recon, measurement)):.2e})")
