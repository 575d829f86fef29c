import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { argmax, loadModel, logits, ModelFormatError, softmax } from "../src/rff";

export function buildModelBuffer(opts: {
  height: number;
  width: number;
  channels: number;
  hidden: number;
  classes: number;
  w1: number[];
  b1: number[];
  w2: number[];
  b2: number[];
}): Buffer {
  const tensors = [...opts.w1, ...opts.b1, ...opts.w2, ...opts.b2];
  const buf = Buffer.alloc(4 + 5 * 4 + tensors.length * 8);
  buf.write("RFF1", 0, "latin1");
  buf.writeUInt32LE(opts.height, 4);
  buf.writeUInt32LE(opts.width, 8);
  buf.writeUInt32LE(opts.channels, 12);
  buf.writeUInt32LE(opts.hidden, 16);
  buf.writeUInt32LE(opts.classes, 20);
  tensors.forEach((value, i) => buf.writeDoubleLE(value, 24 + i * 8));
  return buf;
}

export function writeTempModel(buf: Buffer): string {
  const file = path.join(fs.mkdtempSync(path.join(os.tmpdir(), "rff-")), "model.rff");
  fs.writeFileSync(file, buf);
  return file;
}

// 1 pixel -> 2 hidden (identity-ish) -> 2 classes with opposing weights
const TINY = {
  height: 1,
  width: 1,
  channels: 1,
  hidden: 2,
  classes: 2,
  w1: [1, -1],
  b1: [0, 0],
  w2: [2, -2, 0, 0],
  b2: [0.5, 0],
};

describe("loadModel", () => {
  it("round-trips a hand-built file", () => {
    const model = loadModel(writeTempModel(buildModelBuffer(TINY)));
    expect(model.height).toBe(1);
    expect(model.hidden).toBe(2);
    expect(model.classes).toBe(2);
    expect(Array.from(model.w1)).toEqual([1, -1]);
    expect(Array.from(model.w2)).toEqual([2, -2, 0, 0]);
  });

  it("rejects a bad magic", () => {
    const buf = buildModelBuffer(TINY);
    buf.write("XXXX", 0, "latin1");
    expect(() => loadModel(writeTempModel(buf))).toThrow(ModelFormatError);
  });

  it("rejects truncation with byte counts in the message", () => {
    const buf = buildModelBuffer(TINY).subarray(0, 40);
    expect(() => loadModel(writeTempModel(Buffer.from(buf)))).toThrow(/expected \d+ bytes/);
  });
});

describe("forward pass", () => {
  it("matches hand arithmetic through the ReLU", () => {
    const model = loadModel(writeTempModel(buildModelBuffer(TINY)));
    // pixel 0.5: hidden = [0.5, relu(-0.5)=0]; logits = [0.5*2+0.5, 0.5*-2+0]
    const z = logits(model, Float32Array.from([0.5]));
    expect(z[0]).toBeCloseTo(1.5, 12);
    expect(z[1]).toBeCloseTo(-1.0, 12);
    expect(argmax(z)).toBe(0);
  });

  it("breaks argmax ties toward the lowest index", () => {
    expect(argmax(Float64Array.from([1, 1, 1]))).toBe(0);
  });

  it("softmax preserves argmax and sums to one", () => {
    const z = Float64Array.from([0.3, 2.5, -1]);
    const p = softmax(z);
    expect(p.reduce((a, b) => a + b, 0)).toBeCloseTo(1, 12);
    expect(p.indexOf(Math.max(...p))).toBe(argmax(z));
  });
});
