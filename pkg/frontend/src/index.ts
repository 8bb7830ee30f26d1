export { BridgeError, evalLoss, evalLossBatch, evalLossFlat } from "./bridge.js";
export type {
  BridgeOptions,
  FlatLossResult,
  LossMode,
  LossRequest,
  LossResponse,
  LossStatus,
} from "./types.js";
export { STATUS_CODES } from "./types.js";
