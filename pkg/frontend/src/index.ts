/**
 * Node client for the wavelet-persistence channel extractor.
 *
 * Both entry points delegate to the `wph` command line through its
 * documented interfaces (the extract/pool subcommands and the WPH0 raw
 * grid container), so results are byte-identical to what the CLI
 * produces: there is exactly one implementation of the math. Calls are
 * asynchronous; the host event loop is never blocked while the core
 * computes.
 */

import { execFile } from "node:child_process";
import { promises as fs } from "node:fs";
import os from "node:os";
import path from "node:path";
import { promisify } from "node:util";

import { readGridFile, writeGridFile } from "./container.js";
import { CoreError, ValidationError } from "./errors.js";

export { CoreError, ValidationError } from "./errors.js";
export { decodeGrid, encodeGrid, readGridFile, writeGridFile, type Grid } from "./container.js";

const execFileAsync = promisify(execFile);

export const VERSION = "0.1.0";

/** Channel file ordering shared with the CLI's extract output. */
export const CHANNEL_NAMES = [
  "lh_h0",
  "hl_h0",
  "hh_h0",
  "lh_h1",
  "hl_h1",
  "hh_h1",
  "image_h0",
  "image_h1",
] as const;

export interface ExternArray {
  /** (channels, height, width); channels is 8, or 9 with concat. */
  shape: [number, number, number];
  /** Row-major float32 values, channel-major. Caller owns this copy. */
  data: Float32Array;
}

export interface ImageGrid {
  height: number;
  width: number;
  /** Row-major intensities in [0, 1]. */
  data: Float32Array | Float64Array | number[];
}

export interface CoreOptions {
  /** CLI invocation, e.g. ["wph"] or ["python3", "-m", "wph"]. Defaults to $WPH_CLI or "wph". */
  command?: string[];
}

export interface ExtractOptions extends CoreOptions {
  family?: "haar" | "db2" | "db4";
  depth?: 1 | 2 | 3;
  h1Pct?: number;
  epsilon?: number;
  persistenceSide?: number;
  waveletSide?: number;
  mask?: boolean;
  h1Order?: "top" | "lowest";
  diagramSource?: "image" | "wavelet";
  /** Return the 9-channel [input, channels...] variant. */
  concat?: boolean;
}

function coreCommand(opts: CoreOptions): string[] {
  if (opts.command && opts.command.length > 0) return opts.command;
  const env = process.env.WPH_CLI;
  return env ? env.split(" ") : ["wph"];
}

async function runCore(opts: CoreOptions, args: string[]): Promise<string> {
  const [cmd, ...prefix] = coreCommand(opts);
  if (!cmd) throw new ValidationError("empty core command");
  try {
    const { stdout } = await execFileAsync(cmd, [...prefix, ...args], {
      maxBuffer: 64 * 1024 * 1024,
    });
    return stdout;
  } catch (err) {
    const e = err as NodeJS.ErrnoException & { code?: unknown; stderr?: string };
    if (typeof e.code === "string") {
      // Spawn failure (ENOENT and friends): the core never ran.
      throw new CoreError(`failed to launch core command ${cmd}: ${e.code}`, null, "");
    }
    const stderr = (e.stderr ?? "").trim();
    const exitCode = typeof e.code === "number" ? e.code : null;
    const reason = stderr.split("\n").filter(Boolean).pop() ?? "unknown core failure";
    throw new CoreError(reason, exitCode, stderr);
  }
}

function toImageGrid(image: ImageGrid | number[][]): ImageGrid {
  if (Array.isArray(image)) {
    const height = image.length;
    const width = height > 0 ? image[0]!.length : 0;
    const data = new Float64Array(height * width);
    for (let r = 0; r < height; r++) {
      const row = image[r]!;
      if (row.length !== width) {
        throw new ValidationError(`ragged image: row ${r} has ${row.length} values, expected ${width}`);
      }
      data.set(row, r * width);
    }
    return { height, width, data };
  }
  return image;
}

function validateImage(img: ImageGrid): void {
  if (!Number.isInteger(img.height) || !Number.isInteger(img.width) || img.height < 2 || img.width < 2) {
    throw new ValidationError(`image must be at least 2x2, got ${img.height}x${img.width}`);
  }
  if (img.data.length !== img.height * img.width) {
    throw new ValidationError(
      `image data length ${img.data.length} does not match ${img.height}x${img.width}`,
    );
  }
  for (let i = 0; i < img.data.length; i++) {
    const v = img.data[i] as number;
    if (!Number.isFinite(v)) {
      throw new ValidationError(`image contains a non-finite value at index ${i}`);
    }
    if (v < 0 || v > 1) {
      throw new ValidationError(`image value ${v} at index ${i} outside [0, 1]`);
    }
  }
}

async function withTempDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await fs.mkdtemp(path.join(os.tmpdir(), "wph-client-"));
  try {
    return await fn(dir);
  } finally {
    await fs.rm(dir, { recursive: true, force: true });
  }
}

function extractArgs(opts: ExtractOptions): string[] {
  const args: string[] = [];
  if (opts.family) args.push("--family", opts.family);
  if (opts.depth !== undefined) args.push("--depth", String(opts.depth));
  if (opts.h1Pct !== undefined) args.push("--h1-pct", String(opts.h1Pct));
  if (opts.epsilon !== undefined) args.push("--epsilon", String(opts.epsilon));
  if (opts.persistenceSide !== undefined) args.push("--max-side", String(opts.persistenceSide));
  if (opts.waveletSide !== undefined) args.push("--wavelet-side", String(opts.waveletSide));
  if (opts.mask === false) args.push("--no-mask");
  if (opts.h1Order) args.push("--h1-order", opts.h1Order);
  if (opts.diagramSource) args.push("--diagram-source", opts.diagramSource);
  if (opts.concat) args.push("--concat");
  return args;
}

/**
 * Extract the 8-channel topological map (9 with `concat`) of one image.
 * Byte-identical to `wph extract` with the same configuration.
 */
export async function extractChannels(
  image: ImageGrid | number[][],
  opts: ExtractOptions = {},
): Promise<ExternArray> {
  const img = toImageGrid(image);
  validateImage(img);
  return withTempDir(async (dir) => {
    const inDir = path.join(dir, "in");
    const outDir = path.join(dir, "out");
    await fs.mkdir(inDir);
    await writeGridFile(path.join(inDir, "image.wph"), img.height, img.width, img.data);
    await runCore(opts, ["extract", "--input", inDir, "--out", outDir, ...extractArgs(opts)]);

    const stackDir = path.join(outDir, "image");
    const files: string[] = [];
    if (opts.concat) files.push(path.join(stackDir, "input.wph"));
    for (let k = 0; k < CHANNEL_NAMES.length; k++) {
      files.push(path.join(stackDir, `channel_${String(k).padStart(2, "0")}_${CHANNEL_NAMES[k]}.wph`));
    }

    const data = new Float32Array(files.length * img.height * img.width);
    for (let k = 0; k < files.length; k++) {
      const grid = await readGridFile(files[k]!);
      if (grid.height !== img.height || grid.width !== img.width) {
        throw new CoreError(
          `core returned a ${grid.height}x${grid.width} channel for a ${img.height}x${img.width} image`,
          null,
          "",
        );
      }
      data.set(grid.data, k * img.height * img.width);
    }
    return { shape: [files.length, img.height, img.width] as [number, number, number], data };
  });
}

/**
 * Spatial mean of each channel, in channel order. Delegates to
 * `wph pool`, so values match the CLI manifest embeddings exactly.
 */
export async function poolEmbedding(
  channels: ExternArray,
  opts: CoreOptions = {},
): Promise<Float64Array> {
  const [nch, height, width] = channels.shape;
  if (nch !== CHANNEL_NAMES.length) {
    throw new ValidationError(`pooling expects ${CHANNEL_NAMES.length} channels, got ${nch}`);
  }
  if (channels.data.length !== nch * height * width) {
    throw new ValidationError(
      `channel data length ${channels.data.length} does not match shape ${channels.shape.join("x")}`,
    );
  }
  for (let i = 0; i < channels.data.length; i++) {
    if (!Number.isFinite(channels.data[i] as number)) {
      throw new ValidationError(`channel data contains a non-finite value at index ${i}`);
    }
  }
  return withTempDir(async (dir) => {
    for (let k = 0; k < nch; k++) {
      const name = `channel_${String(k).padStart(2, "0")}_${CHANNEL_NAMES[k]}.wph`;
      const slice = channels.data.subarray(k * height * width, (k + 1) * height * width);
      await writeGridFile(path.join(dir, name), height, width, slice);
    }
    const stdout = await runCore(opts, ["pool", "--stack", dir]);
    const values = stdout
      .trim()
      .split("\n")
      .map((line) => Number(line));
    if (values.length !== nch || values.some((v) => Number.isNaN(v))) {
      throw new CoreError(`unexpected pool output: ${JSON.stringify(stdout)}`, null, "");
    }
    return Float64Array.from(values);
  });
}

/** Version string reported by the core CLI; matches VERSION when paired. */
export async function coreVersion(opts: CoreOptions = {}): Promise<string> {
  return (await runCore(opts, ["--version"])).trim();
}
