/**
 * Wire protocol: one JSON object per line over stdin/stdout.
 *
 * Request:  {"id": number, "height": H, "width": W, "channels": C,
 *            "pixels": base64 of H*W*C little-endian float32, row-major interleaved}
 * Response: {"id": same, "label": int, "scores": [floats]?}
 * Error:    {"id": same (or null if unparseable), "error": message}
 *
 * Requests are answered strictly in order, one at a time.
 */

export interface PredictRequest {
  id: number;
  height: number;
  width: number;
  channels: number;
  pixels: string;
}

export interface PredictResponse {
  id: number;
  label: number;
  scores?: number[];
}

export interface ErrorResponse {
  id: number | null;
  error: string;
}

export class RequestError extends Error {}

function isPositiveInt(value: unknown): value is number {
  return typeof value === "number" && Number.isInteger(value) && value > 0;
}

/** Validate a parsed request object and decode its pixel payload. */
export function decodeRequest(value: unknown): { request: PredictRequest; pixels: Float32Array } {
  if (typeof value !== "object" || value === null) {
    throw new RequestError("request must be a JSON object");
  }
  const req = value as Record<string, unknown>;
  if (typeof req.id !== "number" || !Number.isInteger(req.id) || req.id < 0) {
    throw new RequestError("request id must be a non-negative integer");
  }
  if (!isPositiveInt(req.height) || !isPositiveInt(req.width) || !isPositiveInt(req.channels)) {
    throw new RequestError("height, width and channels must be positive integers");
  }
  if (typeof req.pixels !== "string") {
    throw new RequestError("pixels must be a base64 string");
  }
  const expectedBytes = req.height * req.width * req.channels * 4;
  const raw = Buffer.from(req.pixels, "base64");
  if (raw.length !== expectedBytes) {
    throw new RequestError(`expected ${expectedBytes} pixel bytes, got ${raw.length}`);
  }
  const pixels = new Float32Array(expectedBytes / 4);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = raw.readFloatLE(i * 4);
  }
  return { request: value as PredictRequest, pixels };
}
