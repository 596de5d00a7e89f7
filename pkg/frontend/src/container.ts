/**
 * WPH0 raw grid container (little-endian):
 *   bytes 0..3   magic "WPH0"
 *   bytes 4..7   u32 height
 *   bytes 8..11  u32 width
 *   bytes 12..15 u32 reserved (zero)
 *   then height*width float32 values, row-major.
 */

import { promises as fs } from "node:fs";

import { ValidationError } from "./errors.js";

export const RAW_MAGIC = "WPH0";
export const RAW_HEADER_BYTES = 16;

export interface Grid {
  height: number;
  width: number;
  data: Float32Array;
}

export function encodeGrid(height: number, width: number, values: ArrayLike<number>): Buffer {
  if (values.length !== height * width) {
    throw new ValidationError(`grid data length ${values.length} does not match ${height}x${width}`);
  }
  const buf = Buffer.alloc(RAW_HEADER_BYTES + 4 * height * width);
  buf.write(RAW_MAGIC, 0, "ascii");
  buf.writeUInt32LE(height, 4);
  buf.writeUInt32LE(width, 8);
  buf.writeUInt32LE(0, 12);
  const out = new Float32Array(buf.buffer, buf.byteOffset + RAW_HEADER_BYTES, height * width);
  out.set(Array.from(values).map(Number));
  return buf;
}

export function decodeGrid(buf: Buffer): Grid {
  if (buf.length < RAW_HEADER_BYTES) {
    throw new ValidationError(`raw container truncated: ${buf.length} bytes`);
  }
  if (buf.toString("ascii", 0, 4) !== RAW_MAGIC) {
    throw new ValidationError(`bad raw container magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  const height = buf.readUInt32LE(4);
  const width = buf.readUInt32LE(8);
  const expected = RAW_HEADER_BYTES + 4 * height * width;
  if (buf.length !== expected) {
    throw new ValidationError(`raw container size ${buf.length}, expected ${expected} for ${height}x${width}`);
  }
  // Copy out of the Buffer so alignment and lifetime are our own.
  const data = new Float32Array(height * width);
  for (let i = 0; i < data.length; i++) {
    data[i] = buf.readFloatLE(RAW_HEADER_BYTES + 4 * i);
  }
  return { height, width, data };
}

export async function writeGridFile(path: string, height: number, width: number, values: ArrayLike<number>): Promise<void> {
  await fs.writeFile(path, encodeGrid(height, width, values));
}

export async function readGridFile(path: string): Promise<Grid> {
  return decodeGrid(await fs.readFile(path));
}
