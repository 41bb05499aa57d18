// Event loop: handshake once, then strict one-response-per-request in order.
// A single bad request answers with a nonzero status and the stream keeps
// serving; only an unparseable stream (garbage magic) ends the session,
// since raw binary framing cannot be resynchronized.

import { Readable, Writable } from "node:stream";
import { FramePredictor, GaussianFallback, ModuleModel } from "./eps.js";
import {
  ByteQueue,
  MAGIC_HELO,
  MAGIC_REQ,
  PROTOCOL_VERSION,
  REQ_HEADER_BYTES,
  STATUS_BAD_REQUEST,
  STATUS_MODEL_ERROR,
  STATUS_TOO_LARGE,
  STATUS_VERSION_MISMATCH,
  decodeRequestHeader,
  encodeErrorResponse,
  encodeOkResponse,
  voxels,
} from "./protocol.js";

export interface BridgeConfig {
  mode: "model" | "gaussian-fallback";
  modelPath?: string;
  device: string;
  stripVarianceHead: boolean;
  mu: number;
  sigma0: number;
  maxVoxels: number;
}

export const DEFAULT_CONFIG: BridgeConfig = {
  mode: "gaussian-fallback",
  device: "cpu",
  stripVarianceHead: true,
  mu: 0.0,
  sigma0: 1.0,
  maxVoxels: 1 << 26,
};

export async function buildPredictor(cfg: BridgeConfig): Promise<FramePredictor> {
  if (cfg.mode === "gaussian-fallback") {
    return new GaussianFallback(cfg.mu, cfg.sigma0);
  }
  if (!cfg.modelPath) {
    throw new Error("mode=model requires --model-path");
  }
  return ModuleModel.load(cfg.modelPath, cfg.device, cfg.stripVarianceHead);
}

function writeAll(out: Writable, buf: Buffer): Promise<void> {
  return new Promise((resolve, reject) => {
    out.write(buf, (err) => (err ? reject(err) : resolve()));
  });
}

export async function serve(cfg: BridgeConfig, input: Readable, output: Writable): Promise<void> {
  const predictor = await buildPredictor(cfg);
  const queue = new ByteQueue();
  let wake: (() => void) | null = null;
  let ended = false;

  input.on("data", (chunk: Buffer) => {
    queue.push(chunk);
    wake?.();
  });
  input.on("end", () => {
    ended = true;
    wake?.();
  });
  input.on("error", () => {
    ended = true;
    wake?.();
  });

  const need = async (n: number): Promise<Buffer | null> => {
    for (;;) {
      const got = queue.take(n);
      if (got !== null) return got;
      if (ended) return null;
      await new Promise<void>((resolve) => {
        wake = resolve;
      });
      wake = null;
    }
  };

  // one handshake per session
  const hello = await need(8);
  if (hello === null) return;
  const version = hello.readUInt32LE(4);
  if (!hello.subarray(0, 4).equals(MAGIC_HELO) || version !== PROTOCOL_VERSION) {
    await writeAll(
      output,
      encodeErrorResponse(
        STATUS_VERSION_MISMATCH,
        `unsupported handshake (wanted HELO v${PROTOCOL_VERSION})`,
      ),
    );
    return;
  }
  await writeAll(output, hello);

  for (;;) {
    const header = await need(REQ_HEADER_BYTES);
    if (header === null) return; // clean end of stream
    if (!header.subarray(0, 4).equals(MAGIC_REQ)) {
      await writeAll(output, encodeErrorResponse(STATUS_BAD_REQUEST, "bad request magic"));
      return; // framing lost; cannot resync a raw byte stream
    }
    const req = decodeRequestHeader(header);
    const count = voxels(req.dims);
    const byteCount = count * 4;
    if (count === 0 || count > cfg.maxVoxels) {
      // consume the declared payload so the stream stays in sync
      let remaining = byteCount;
      while (remaining > 0) {
        const dropped = queue.discard(remaining);
        remaining -= dropped;
        if (remaining > 0) {
          if (ended) return;
          await new Promise<void>((resolve) => {
            wake = resolve;
          });
          wake = null;
        }
      }
      await writeAll(
        output,
        encodeErrorResponse(STATUS_TOO_LARGE, `request of ${count} voxels exceeds limit ${cfg.maxVoxels}`),
      );
      continue;
    }
    const body = await need(byteCount);
    if (body === null) return;
    const payload = new Float32Array(body.buffer, body.byteOffset, count);
    try {
      const eps = await predictor.predict(payload, req.dims, req.tIndex, req.abar);
      if (eps.length !== count) {
        throw new Error(`predictor returned ${eps.length} values, expected ${count}`);
      }
      await writeAll(output, encodeOkResponse(req.dims, eps));
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      await writeAll(output, encodeErrorResponse(STATUS_MODEL_ERROR, message));
    }
  }
}
