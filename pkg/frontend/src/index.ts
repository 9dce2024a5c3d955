export {
  NativeClient,
  ProtocolError,
  DEFAULT_COMMAND,
  nativeCommand,
  type ManifestEntry,
  type CallResult,
} from "./protocol.js";
export {
  Session,
  Connection,
  NativeError,
  ALLOCATION_RESULT,
  DESTROYERS,
  WRAPPER_SYMBOLS,
} from "./session.js";
