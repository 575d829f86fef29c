/**
 * Loader and forward pass for the binary model file format (magic "RFF1"):
 * four magic bytes, five little-endian uint32 dims (height, width, channels,
 * hidden, classes), then the tensors as little-endian float64 in order
 * w1 (inputDim x hidden, row-major), b1, w2 (hidden x classes), b2.
 */

import * as fs from "fs";

export interface DenseModel {
  height: number;
  width: number;
  channels: number;
  hidden: number;
  classes: number;
  w1: Float64Array;
  b1: Float64Array;
  w2: Float64Array;
  b2: Float64Array;
}

const MAGIC = "RFF1";
const HEADER_BYTES = 4 + 5 * 4;

export class ModelFormatError extends Error {}

export function loadModel(path: string): DenseModel {
  const raw = fs.readFileSync(path);
  if (raw.length < HEADER_BYTES) {
    throw new ModelFormatError(`truncated header: ${raw.length} bytes`);
  }
  if (raw.toString("latin1", 0, 4) !== MAGIC) {
    throw new ModelFormatError(`bad magic ${JSON.stringify(raw.toString("latin1", 0, 4))}`);
  }
  const height = raw.readUInt32LE(4);
  const width = raw.readUInt32LE(8);
  const channels = raw.readUInt32LE(12);
  const hidden = raw.readUInt32LE(16);
  const classes = raw.readUInt32LE(20);
  const inputDim = height * width * channels;
  const counts = [inputDim * hidden, hidden, hidden * classes, classes];
  const expected = HEADER_BYTES + 8 * counts.reduce((a, b) => a + b, 0);
  if (raw.length !== expected) {
    throw new ModelFormatError(
      `expected ${expected} bytes for declared dimensions, got ${raw.length}`
    );
  }
  let offset = HEADER_BYTES;
  const tensors: Float64Array[] = counts.map((count) => {
    const out = new Float64Array(count);
    for (let i = 0; i < count; i++) {
      out[i] = raw.readDoubleLE(offset);
      offset += 8;
    }
    return out;
  });
  return {
    height,
    width,
    channels,
    hidden,
    classes,
    w1: tensors[0],
    b1: tensors[1],
    w2: tensors[2],
    b2: tensors[3],
  };
}

/** Pre-softmax logits for a flat pixel vector. */
export function logits(model: DenseModel, pixels: Float32Array | Float64Array): Float64Array {
  const d = model.height * model.width * model.channels;
  const hidden = new Float64Array(model.hidden);
  for (let j = 0; j < model.hidden; j++) {
    let acc = model.b1[j];
    for (let i = 0; i < d; i++) {
      acc += pixels[i] * model.w1[i * model.hidden + j];
    }
    hidden[j] = acc > 0 ? acc : 0;
  }
  const out = new Float64Array(model.classes);
  for (let k = 0; k < model.classes; k++) {
    let acc = model.b2[k];
    for (let j = 0; j < model.hidden; j++) {
      acc += hidden[j] * model.w2[j * model.classes + k];
    }
    out[k] = acc;
  }
  return out;
}

/** Lowest index wins on ties, matching the detector's convention. */
export function argmax(values: Float64Array): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    if (values[i] > values[best]) {
      best = i;
    }
  }
  return best;
}

export function softmax(values: Float64Array): number[] {
  let max = -Infinity;
  for (const v of values) {
    if (v > max) max = v;
  }
  let sum = 0;
  const out = new Array(values.length);
  for (let i = 0; i < values.length; i++) {
    out[i] = Math.exp(values[i] - max);
    sum += out[i];
  }
  for (let i = 0; i < values.length; i++) {
    out[i] /= sum;
  }
  return out;
}
