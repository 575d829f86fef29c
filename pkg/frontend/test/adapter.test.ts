import { ChildProcessWithoutNullStreams, spawn } from "child_process";
import * as path from "path";
import * as readline from "readline";
import { afterEach, describe, expect, it } from "vitest";

import { buildModelBuffer, writeTempModel } from "./rff.test";

const ADAPTER = path.join(__dirname, "..", "dist", "adapter.js");

function encodePixels(values: number[]): string {
  const buf = Buffer.alloc(values.length * 4);
  values.forEach((v, i) => buf.writeFloatLE(v, i * 4));
  return buf.toString("base64");
}

function request(id: number, h: number, w: number, c: number, value = 0.5): string {
  return JSON.stringify({
    id,
    height: h,
    width: w,
    channels: c,
    pixels: encodePixels(new Array(h * w * c).fill(value)),
  });
}

class AdapterHarness {
  child: ChildProcessWithoutNullStreams;
  private lines: string[] = [];
  private waiters: Array<(line: string) => void> = [];

  constructor(args: string[]) {
    this.child = spawn("node", [ADAPTER, ...args]);
    const rl = readline.createInterface({ input: this.child.stdout });
    rl.on("line", (line) => {
      const waiter = this.waiters.shift();
      if (waiter) {
        waiter(line);
      } else {
        this.lines.push(line);
      }
    });
  }

  send(line: string): void {
    this.child.stdin.write(line + "\n");
  }

  next(timeoutMs = 5000): Promise<string> {
    const buffered = this.lines.shift();
    if (buffered !== undefined) {
      return Promise.resolve(buffered);
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("timed out waiting for response")), timeoutMs);
      this.waiters.push((line) => {
        clearTimeout(timer);
        resolve(line);
      });
    });
  }

  kill(): void {
    this.child.kill();
  }
}

let harness: AdapterHarness | null = null;

afterEach(() => {
  harness?.kill();
  harness = null;
});

describe("fixture mode", () => {
  it("answers the fixed label with one-hot scores", async () => {
    harness = new AdapterHarness(["--fixture-label", "3"]);
    harness.send(request(7, 2, 2, 1));
    const reply = JSON.parse(await harness.next());
    expect(reply.id).toBe(7);
    expect(reply.label).toBe(3);
    expect(reply.scores.length).toBeGreaterThanOrEqual(10);
    expect(reply.scores[3]).toBe(1);
    expect(reply.scores.reduce((a: number, b: number) => a + b, 0)).toBe(1);
  });

  it("passes a 1000-request soak in order and survives one malformed line", async () => {
    harness = new AdapterHarness(["--fixture-label", "0"]);
    const total = 1000;
    for (let id = 1; id <= total; id++) {
      harness.send(request(id, 1, 1, 1));
      if (id === 500) {
        harness.send("this is not json at all");
      }
    }
    const replies: any[] = [];
    for (let i = 0; i < total + 1; i++) {
      replies.push(JSON.parse(await harness.next(20000)));
    }
    const errors = replies.filter((r) => "error" in r);
    expect(errors.length).toBe(1);
    const answered = replies.filter((r) => !("error" in r)).map((r) => r.id);
    expect(answered).toEqual(Array.from({ length: total }, (_, i) => i + 1));
  }, 60000);

  it("names the expected byte count on a short payload", async () => {
    harness = new AdapterHarness(["--fixture-label", "1"]);
    harness.send(
      JSON.stringify({ id: 9, height: 2, width: 2, channels: 3, pixels: encodePixels([0.5]) })
    );
    const reply = JSON.parse(await harness.next());
    expect(reply.id).toBe(9);
    expect(reply.error).toMatch(/expected 48 pixel bytes, got 4/);
  });
});

describe("model mode", () => {
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

  it("answers the model argmax with softmax scores", async () => {
    harness = new AdapterHarness(["--model", writeTempModel(buildModelBuffer(TINY))]);
    harness.send(request(1, 1, 1, 1, 0.5));
    const reply = JSON.parse(await harness.next());
    expect(reply.id).toBe(1);
    expect(reply.label).toBe(0);
    expect(reply.scores.length).toBe(2);
    expect(reply.scores[0]).toBeGreaterThan(reply.scores[1]);
  });

  it("reports shape mismatches as error objects and keeps serving", async () => {
    harness = new AdapterHarness(["--model", writeTempModel(buildModelBuffer(TINY))]);
    harness.send(request(1, 2, 2, 1));
    const err = JSON.parse(await harness.next());
    expect(err.id).toBe(1);
    expect(err.error).toMatch(/does not match model input/);
    harness.send(request(2, 1, 1, 1));
    const ok = JSON.parse(await harness.next());
    expect(ok.id).toBe(2);
    expect(ok.label).toBe(0);
  });

  it("exits nonzero on an unreadable model file", async () => {
    const buf = buildModelBuffer(TINY);
    buf.write("JUNK", 0, "latin1");
    const child = spawn("node", [ADAPTER, "--model", writeTempModel(buf)]);
    const code = await new Promise<number | null>((resolve) => child.on("exit", resolve));
    expect(code).not.toBe(0);
  });

  it("requires exactly one mode flag", async () => {
    const child = spawn("node", [ADAPTER]);
    const code = await new Promise<number | null>((resolve) => child.on("exit", resolve));
    expect(code).not.toBe(0);
  });
});
