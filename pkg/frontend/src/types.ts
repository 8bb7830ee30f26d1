/**
 * Wire types for the loss evaluator.
 *
 * Matrices travel as row-major 9-vectors of doubles.  Requests and
 * responses mirror the JSON accepted and produced by
 * `python3 -m liegdt loss --requests -` exactly, so values parsed here
 * are bit-identical to what the Python library computes.
 */

/** Which loss to evaluate. */
export type LossMode = "surrogate" | "exact" | "mse";

/**
 * Per-element outcome.  `singular` and `no_convergence` are failures
 * (numeric fields come back null); `near_singular_gradient` marks a
 * successful evaluation whose gradient went through a guarded fallback.
 */
export type LossStatus =
  | "ok"
  | "singular"
  | "no_convergence"
  | "near_singular_gradient";

/** Integer codes used by the flat typed-array interface. */
export const STATUS_CODES: Record<LossStatus, number> = {
  ok: 0,
  singular: 1,
  no_convergence: 2,
  near_singular_gradient: 3,
};

/** One evaluation request. */
export interface LossRequest {
  /** Truth matrix, 9 reals row-major. */
  t: number[];
  /** Predicted matrix, 9 reals row-major. */
  that: number[];
  /** Weight of the projection-residual term (default 1). */
  lambda?: number;
  /** Exponent on the rotation angle term (default 1). */
  angle_power?: 1 | 2;
  /** Loss to evaluate (default "surrogate"). */
  mode?: LossMode;
  /** Zero the ninth gradient entry, for callers holding it fixed. */
  fix_last?: boolean;
}

/** One evaluation result.  Fields are null when the mode does not define
 * them (theta and residual_sq outside surrogate mode) or on failure. */
export interface LossResponse {
  loss: number | null;
  grad: number[] | null;
  theta: number | null;
  residual_sq: number | null;
  status: LossStatus;
}

/** Options controlling how the Python evaluator process is spawned. */
export interface BridgeOptions {
  /** Python executable; defaults to $LIEGDT_PYTHON, then "python3". */
  python?: string;
  /** Kill the evaluator and reject after this many milliseconds. */
  timeoutMs?: number;
}

/** Result triple of the flat interface, one slot per input matrix pair.
 * Failed slots hold NaN in `loss` and `grad`. */
export interface FlatLossResult {
  loss: Float64Array;
  grad: Float64Array;
  status: Int32Array;
}
