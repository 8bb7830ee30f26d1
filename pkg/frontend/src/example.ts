/**
 * Walkthrough: evaluate geodesic losses from Node.
 *
 * Run with `npm run example` (needs the Python package installed so that
 * `python3 -m liegdt` resolves, or point $LIEGDT_PYTHON at the right
 * interpreter).
 */

import { evalLoss, evalLossBatch, evalLossFlat } from "./bridge.js";

const identity = [1, 0, 0, 0, 1, 0, 0, 0, 1];

// a mild rotation-plus-shear prediction against the identity truth
const prediction = [0.96, -0.28, 0.02, 0.28, 0.96, -0.05, 0.01, 0.0, 1.02];

const single = await evalLoss(identity, prediction);
console.log("single pair:");
console.log("  status     ", single.status);
console.log("  loss       ", single.loss);
console.log("  theta      ", single.theta);
console.log("  residual^2 ", single.residual_sq);

// batch: a clean pair, a singular prediction, another clean pair; the
// bad element reports its own status without disturbing its neighbors
const singular = [1, 2, 3, 4, 5, 6, 5, 7, 9]; // third row = row1 + row2
const batch = await evalLossBatch([
  { t: identity, that: prediction },
  { t: identity, that: singular },
  { t: identity, that: prediction, mode: "exact" },
]);
console.log("\nbatch statuses:", batch.map((r) => r.status).join(", "));
console.log("exact-mode loss:", batch[2]?.loss);

// typed-array interface for numeric callers
const flat = await evalLossFlat(
  new Float64Array([...identity, ...identity]),
  new Float64Array([...prediction, ...singular]),
  2,
);
console.log("\nflat losses:  ", Array.from(flat.loss));
console.log("flat statuses:", Array.from(flat.status));

// using the evaluator as a custom training-loss node: the caller owns the
// parameters (here the matrix entries themselves), the bridge supplies
// value and gradient, and any optimizer consumes them; fix_last pins the
// ninth entry the way an 8-parameter decoder head would
const params = prediction.slice();
console.log("\ngradient descent through the bridge (squared-angle loss):");
for (let step = 0; step <= 10; step++) {
  const res = await evalLoss(identity, params, { angle_power: 2, fix_last: true });
  if (res.loss === null || res.grad === null) break;
  if (step % 5 === 0) console.log(`  step ${step}  loss ${res.loss.toFixed(6)}`);
  for (let k = 0; k < 9; k++) params[k] = params[k]! - 0.2 * res.grad[k]!;
}
