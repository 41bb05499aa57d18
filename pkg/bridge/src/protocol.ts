// Wire protocol shared with the solver client (all little-endian):
//   handshake  client -> "HELO" + u32 version; server echoes the 8 bytes, or
//              refuses with an error frame.
//   request    "EPQ1" + u32 tIndex + f64 abar + u32 n,c,h,w + n*c*h*w float32
//   response   "EPR1" + u32 status; status 0 carries u32 n,c,h,w + float32
//              payload, nonzero status carries u32 length + UTF-8 message.

export const PROTOCOL_VERSION = 1;
export const MAGIC_HELO = Buffer.from("HELO", "ascii");
export const MAGIC_REQ = Buffer.from("EPQ1", "ascii");
export const MAGIC_RSP = Buffer.from("EPR1", "ascii");

export const STATUS_OK = 0;
export const STATUS_BAD_REQUEST = 1;
export const STATUS_MODEL_ERROR = 2;
export const STATUS_TOO_LARGE = 3;
export const STATUS_VERSION_MISMATCH = 9;

export interface Dims {
  n: number;
  c: number;
  h: number;
  w: number;
}

export interface EpsRequest {
  tIndex: number;
  abar: number;
  dims: Dims;
  payload: Float32Array;
}

export const REQ_HEADER_BYTES = 4 + 4 + 8 + 16;

export function voxels(d: Dims): number {
  return d.n * d.c * d.h * d.w;
}

export function encodeHandshake(version: number = PROTOCOL_VERSION): Buffer {
  const out = Buffer.alloc(8);
  MAGIC_HELO.copy(out, 0);
  out.writeUInt32LE(version >>> 0, 4);
  return out;
}

export function encodeRequest(req: EpsRequest): Buffer {
  const head = Buffer.alloc(REQ_HEADER_BYTES);
  MAGIC_REQ.copy(head, 0);
  head.writeUInt32LE(req.tIndex >>> 0, 4);
  head.writeDoubleLE(req.abar, 8);
  head.writeUInt32LE(req.dims.n, 16);
  head.writeUInt32LE(req.dims.c, 20);
  head.writeUInt32LE(req.dims.h, 24);
  head.writeUInt32LE(req.dims.w, 28);
  const body = Buffer.from(req.payload.buffer, req.payload.byteOffset, req.payload.byteLength);
  return Buffer.concat([head, body]);
}

export function decodeRequestHeader(buf: Buffer): EpsRequest {
  return {
    tIndex: buf.readUInt32LE(4),
    abar: buf.readDoubleLE(8),
    dims: {
      n: buf.readUInt32LE(16),
      c: buf.readUInt32LE(20),
      h: buf.readUInt32LE(24),
      w: buf.readUInt32LE(28),
    },
    payload: new Float32Array(0),
  };
}

export function encodeOkResponse(dims: Dims, payload: Float32Array): Buffer {
  const head = Buffer.alloc(4 + 4 + 16);
  MAGIC_RSP.copy(head, 0);
  head.writeUInt32LE(STATUS_OK, 4);
  head.writeUInt32LE(dims.n, 8);
  head.writeUInt32LE(dims.c, 12);
  head.writeUInt32LE(dims.h, 16);
  head.writeUInt32LE(dims.w, 20);
  const body = Buffer.from(payload.buffer, payload.byteOffset, payload.byteLength);
  return Buffer.concat([head, body]);
}

export function encodeErrorResponse(status: number, message: string): Buffer {
  const msg = Buffer.from(message, "utf-8");
  const head = Buffer.alloc(12);
  MAGIC_RSP.copy(head, 0);
  head.writeUInt32LE(status >>> 0, 4);
  head.writeUInt32LE(msg.length, 8);
  return Buffer.concat([head, msg]);
}

/** Incremental reader over an arbitrary chunk stream. */
export class ByteQueue {
  private chunks: Buffer[] = [];
  private total = 0;

  push(chunk: Buffer): void {
    this.chunks.push(chunk);
    this.total += chunk.length;
  }

  get length(): number {
    return this.total;
  }

  /** Remove and return exactly n bytes, or null if not buffered yet. */
  take(n: number): Buffer | null {
    if (this.total < n) return null;
    const out = Buffer.alloc(n);
    let copied = 0;
    while (copied < n) {
      const head = this.chunks[0];
      const want = n - copied;
      if (head.length <= want) {
        head.copy(out, copied);
        copied += head.length;
        this.chunks.shift();
      } else {
        head.copy(out, copied, 0, want);
        this.chunks[0] = head.subarray(want);
        copied += want;
      }
    }
    this.total -= n;
    return out;
  }

  /** Discard up to n bytes; returns how many were dropped. */
  discard(n: number): number {
    let dropped = 0;
    while (dropped < n && this.chunks.length > 0) {
      const head = this.chunks[0];
      const want = n - dropped;
      if (head.length <= want) {
        dropped += head.length;
        this.chunks.shift();
      } else {
        this.chunks[0] = head.subarray(want);
        dropped += want;
      }
    }
    this.total -= dropped;
    return dropped;
  }
}
