/**
 * Reference external predictor speaking the stdio JSON line protocol.
 *
 * Modes (exactly one):
 *   --fixture-label N   always answer label N with a one-hot score vector
 *   --model PATH        answer the argmax of an RFF1 dense model
 *
 * Malformed requests get an {"id", "error"} object and the loop continues;
 * an unreadable model file aborts at startup with a nonzero exit code.
 */

import * as readline from "readline";
import { parseArgs } from "util";

import { decodeRequest, ErrorResponse, PredictResponse, RequestError } from "./protocol";
import { argmax, DenseModel, loadModel, logits, softmax } from "./rff";

interface Config {
  fixtureLabel: number | null;
  model: DenseModel | null;
}

function parseConfig(argv: string[]): Config {
  const { values } = parseArgs({
    args: argv,
    options: {
      "fixture-label": { type: "string" },
      model: { type: "string" },
    },
  });
  const fixture = values["fixture-label"];
  const modelPath = values.model;
  if ((fixture === undefined) === (modelPath === undefined)) {
    throw new Error("exactly one of --fixture-label or --model is required");
  }
  if (fixture !== undefined) {
    const label = Number(fixture);
    if (!Number.isInteger(label) || label < 0) {
      throw new Error(`--fixture-label must be a non-negative integer, got ${fixture}`);
    }
    return { fixtureLabel: label, model: null };
  }
  return { fixtureLabel: null, model: loadModel(modelPath as string) };
}

function answer(config: Config, line: string): PredictResponse | ErrorResponse {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch {
    return { id: null, error: "malformed request: not valid JSON" };
  }
  const id =
    typeof parsed === "object" && parsed !== null && typeof (parsed as any).id === "number"
      ? ((parsed as any).id as number)
      : null;
  try {
    const { request, pixels } = decodeRequest(parsed);
    if (config.fixtureLabel !== null) {
      const label = config.fixtureLabel;
      const scores = new Array(Math.max(10, label + 1)).fill(0);
      scores[label] = 1;
      return { id: request.id, label, scores };
    }
    const model = config.model as DenseModel;
    if (
      request.height !== model.height ||
      request.width !== model.width ||
      request.channels !== model.channels
    ) {
      return {
        id: request.id,
        error:
          `image shape ${request.height}x${request.width}x${request.channels} does not match ` +
          `model input ${model.height}x${model.width}x${model.channels}`,
      };
    }
    const z = logits(model, pixels);
    return { id: request.id, label: argmax(z), scores: softmax(z) };
  } catch (err) {
    if (err instanceof RequestError) {
      return { id, error: err.message };
    }
    throw err;
  }
}

export function main(): void {
  let config: Config;
  try {
    config = parseConfig(process.argv.slice(2));
  } catch (err) {
    console.error(`recess-adapter: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line) => {
    if (!line.trim()) {
      return;
    }
    process.stdout.write(JSON.stringify(answer(config, line)) + "\n");
  });
}

if (require.main === module) {
  main();
}
