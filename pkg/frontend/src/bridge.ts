/**
 * Process bridge to the Python loss evaluator.
 *
 * Every call spawns `python3 -m liegdt loss --requests -`, writes the
 * request batch as JSON to stdin, and parses the response array from
 * stdout.  The evaluator computes each element independently, so one
 * singular matrix never poisons the rest of the batch.
 */

import { spawn } from "node:child_process";
import {
  BridgeOptions,
  FlatLossResult,
  LossMode,
  LossRequest,
  LossResponse,
  STATUS_CODES,
} from "./types.js";

/** Raised when the evaluator process fails (bad request shape, missing
 * interpreter, timeout); per-element domain failures come back as
 * response statuses instead. */
export class BridgeError extends Error {
  constructor(
    message: string,
    readonly exitCode: number | null = null,
    readonly stderr = "",
  ) {
    super(message);
    this.name = "BridgeError";
  }
}

function pythonExecutable(options: BridgeOptions): string {
  return options.python ?? process.env["LIEGDT_PYTHON"] ?? "python3";
}

function runEvaluator(
  stdin: string,
  options: BridgeOptions,
): Promise<{ code: number | null; stdout: string; stderr: string }> {
  return new Promise((resolve, reject) => {
    const child = spawn(
      pythonExecutable(options),
      ["-m", "liegdt", "loss", "--requests", "-"],
      { stdio: ["pipe", "pipe", "pipe"] },
    );
    let stdout = "";
    let stderr = "";
    let settled = false;
    let timer: NodeJS.Timeout | undefined;
    if (options.timeoutMs !== undefined) {
      timer = setTimeout(() => {
        settled = true;
        child.kill("SIGKILL");
        reject(new BridgeError(`evaluator timed out after ${options.timeoutMs} ms`));
      }, options.timeoutMs);
    }
    child.stdout.setEncoding("utf8");
    child.stderr.setEncoding("utf8");
    child.stdout.on("data", (chunk: string) => (stdout += chunk));
    child.stderr.on("data", (chunk: string) => (stderr += chunk));
    child.on("error", (err) => {
      if (timer) clearTimeout(timer);
      if (!settled) reject(new BridgeError(`failed to spawn evaluator: ${err.message}`));
    });
    child.on("close", (code) => {
      if (timer) clearTimeout(timer);
      if (!settled) resolve({ code, stdout, stderr });
    });
    child.stdin.write(stdin);
    child.stdin.end();
  });
}

/**
 * Evaluate a batch of loss requests, order-preserving.
 *
 * Rejects with {@link BridgeError} on structural problems (wrong array
 * lengths, non-finite numbers, unknown mode), which the evaluator
 * reports on stderr with exit code 2.
 */
export async function evalLossBatch(
  requests: LossRequest[],
  options: BridgeOptions = {},
): Promise<LossResponse[]> {
  const { code, stdout, stderr } = await runEvaluator(JSON.stringify(requests), options);
  if (code !== 0) {
    throw new BridgeError(
      `evaluator exited with code ${code}: ${stderr.trim() || stdout.trim()}`,
      code,
      stderr,
    );
  }
  const parsed: unknown = JSON.parse(stdout);
  if (!Array.isArray(parsed) || parsed.length !== requests.length) {
    throw new BridgeError(`expected ${requests.length} responses, got ${stdout.length} bytes`);
  }
  return parsed as LossResponse[];
}

/** Evaluate a single matrix pair. */
export async function evalLoss(
  t: ArrayLike<number>,
  that: ArrayLike<number>,
  request: Omit<LossRequest, "t" | "that"> = {},
  options: BridgeOptions = {},
): Promise<LossResponse> {
  const batch = await evalLossBatch(
    [{ ...request, t: Array.from(t), that: Array.from(that) }],
    options,
  );
  return batch[0]!;
}

/**
 * Typed-array interface: `count` row-major 3x3 matrices per side packed
 * into contiguous doubles.  Mirrors the Python flat interface: failed
 * slots hold NaN, and `status` carries the {@link STATUS_CODES} integers.
 */
export async function evalLossFlat(
  tFlat: Float64Array | ArrayLike<number>,
  thatFlat: Float64Array | ArrayLike<number>,
  count: number,
  request: { lambda?: number; angle_power?: 1 | 2; mode?: LossMode } = {},
  options: BridgeOptions = {},
): Promise<FlatLossResult> {
  const ts = Array.from(tFlat);
  const thats = Array.from(thatFlat);
  if (ts.length !== 9 * count || thats.length !== 9 * count) {
    throw new BridgeError(
      `expected ${9 * count} doubles per side, got ${ts.length} and ${thats.length}`,
    );
  }
  const requests: LossRequest[] = [];
  for (let i = 0; i < count; i++) {
    requests.push({
      ...request,
      t: ts.slice(9 * i, 9 * i + 9),
      that: thats.slice(9 * i, 9 * i + 9),
    });
  }
  const responses = await evalLossBatch(requests, options);
  const loss = new Float64Array(count).fill(NaN);
  const grad = new Float64Array(9 * count).fill(NaN);
  const status = new Int32Array(count);
  responses.forEach((resp, i) => {
    status[i] = STATUS_CODES[resp.status];
    if (resp.loss !== null && resp.grad !== null) {
      loss[i] = resp.loss;
      grad.set(resp.grad, 9 * i);
    }
  });
  return { loss, grad, status };
}
