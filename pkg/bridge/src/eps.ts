// Noise predictors served by the bridge.  Every predictor maps each frame
// independently: output frame i depends only on input frame i.

import { Dims, voxels } from "./protocol.js";

export interface FramePredictor {
  predict(payload: Float32Array, dims: Dims, tIndex: number, abar: number): Promise<Float32Array>;
}

/**
 * Exact noise estimate under a Gaussian prior x0 ~ N(mu, sigma0^2 I): the
 * implied clean estimate is the analytic posterior mean, and the noise is
 * backed out of the forward corruption identity.  Math in float64, result
 * stored as float32 (the wire format).
 */
export class GaussianFallback implements FramePredictor {
  constructor(private readonly mu: number, private readonly sigma0: number) {
    if (!(sigma0 > 0)) throw new Error(`sigma0 must be > 0, got ${sigma0}`);
  }

  async predict(payload: Float32Array, dims: Dims, _tIndex: number, abar: number): Promise<Float32Array> {
    const out = new Float32Array(payload.length);
    if (abar >= 1.0) return out;
    const sa = Math.sqrt(abar);
    const var0 = this.sigma0 * this.sigma0;
    const gain = (sa * var0) / (abar * var0 + 1.0 - abar);
    const root = Math.sqrt(1.0 - abar);
    for (let i = 0; i < payload.length; i++) {
      const x = payload[i];
      const posterior = this.mu + gain * (x - sa * this.mu);
      out[i] = (x - sa * posterior) / root;
    }
    return out;
  }
}

export interface ModelModule {
  predict(
    frames: Float32Array,
    dims: Dims,
    tIndex: number,
    abar: number,
    device: string,
  ): Float32Array | Promise<Float32Array>;
}

/**
 * Wraps a user-supplied ES module (the pretrained-model adapter).  The module
 * may batch all frames through its backend in one call; the protocol only
 * requires that the result equals per-frame application.  When the adapter
 * emits 2x the input channels (mean + variance heads), the variance half of
 * each frame is stripped.
 */
export class ModuleModel implements FramePredictor {
  constructor(
    private readonly module: ModelModule,
    private readonly device: string,
    private readonly stripVarianceHead: boolean,
  ) {}

  static async load(modelPath: string, device: string, stripVarianceHead: boolean): Promise<ModuleModel> {
    const loaded = await import(modelPath);
    const mod: ModelModule = loaded.default ?? loaded;
    if (typeof mod.predict !== "function") {
      throw new Error(`model module ${modelPath} does not export predict()`);
    }
    return new ModuleModel(mod, device, stripVarianceHead);
  }

  async predict(payload: Float32Array, dims: Dims, tIndex: number, abar: number): Promise<Float32Array> {
    const raw = await this.module.predict(payload, dims, tIndex, abar, this.device);
    const expected = voxels(dims);
    if (raw.length === expected) return Float32Array.from(raw);
    if (this.stripVarianceHead && raw.length === 2 * expected) {
      // layout (n, 2c, h, w): keep the first c channels of each frame
      const frame = dims.c * dims.h * dims.w;
      const out = new Float32Array(expected);
      for (let f = 0; f < dims.n; f++) {
        out.set(raw.subarray(f * 2 * frame, f * 2 * frame + frame), f * frame);
      }
      return out;
    }
    throw new Error(`model returned ${raw.length} values, expected ${expected}`);
  }
}
