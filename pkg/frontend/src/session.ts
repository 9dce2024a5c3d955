/**
 * Idiomatic wrappers over the flat handle API.
 *
 * The native side speaks in integer handles and sentinel return values,
 * with a thread-local last-error slot behind them. This module converts
 * that convention into the shapes a TypeScript caller expects: objects
 * with methods and exceptions on failure, with handles reclaimed
 * automatically when their wrappers are garbage collected.
 *
 * The one rule the flat API imposes that matters here: every call except
 * the error read clears the error slot on entry. So whenever a call comes
 * back with a sentinel, the error text must be fetched before any cleanup
 * call runs, or the cleanup will erase it.
 */

import { NativeClient, type ManifestEntry } from "./protocol.js";

/** The native side reported a failure; the message is its last-error text. */
export class NativeError extends Error {
  override name = "NativeError";
}

/**
 * Which kind of object each allocation symbol hands back. Paired with
 * {@link DESTROYERS}, this is the wrapper's full ownership picture: every
 * handle the wrapper can receive has a known release call.
 */
export const ALLOCATION_RESULT: Record<string, "connection" | "string"> = {
  Connection_create_barrier_gate: "connection",
  Connection_from_json_string: "connection",
  Connection_name: "string",
  Connection_type: "string",
  Connection_to_json_string: "string",
  String_create: "string",
};

export const DESTROYERS: Record<"connection" | "string", string> = {
  connection: "Connection_destroy",
  string: "String_destroy",
};

/** Every native symbol the wrapper layer invokes. */
export const WRAPPER_SYMBOLS: readonly string[] = [
  ...Object.keys(ALLOCATION_RESULT),
  ...Object.values(DESTROYERS),
  "Connection_is_barrier_gate",
  "String_read",
  "LastError_read",
  "Debug_handle_count",
];

interface Finalizable {
  client: NativeClient;
  symbol: string;
  handle: number;
}

// One registry for the whole module: when a wrapper is collected without
// being disposed, release its native handle. Cleanup is fire and forget;
// there is no one left to report a failure to.
const registry = new FinalizationRegistry<Finalizable>(({ client, symbol, handle }) => {
  void client.call(symbol, [handle]).catch(() => undefined);
});

export class Session {
  private constructor(private readonly client: NativeClient) {}

  /** Spawn the native process and prove it answers before handing it out. */
  static async open(command?: readonly string[]): Promise<Session> {
    const client = NativeClient.spawn(command);
    const session = new Session(client);
    try {
      await session.debugHandleCount();
    } catch (error) {
      await client.close();
      throw error;
    }
    return session;
  }

  async close(): Promise<void> {
    await this.client.close();
  }

  /** Build a barrier-gate connection with the given name. */
  async barrierGate(name: string): Promise<Connection> {
    return this.withString(name, async (handle) => {
      const raw = await this.expectHandle("Connection_create_barrier_gate", [handle]);
      return this.adopt(raw);
    });
  }

  /** Parse a serialized connection document. */
  async fromJson(text: string): Promise<Connection> {
    return this.withString(text, async (handle) => {
      const raw = await this.expectHandle("Connection_from_json_string", [handle]);
      return this.adopt(raw);
    });
  }

  /** Read the thread-local error slot without disturbing it. */
  async lastError(): Promise<string> {
    const { value } = await this.client.call("LastError_read", []);
    return String(value ?? "");
  }

  /** Number of live native handles; the leak tests' measuring stick. */
  async debugHandleCount(): Promise<number> {
    const { value } = await this.client.call("Debug_handle_count", []);
    if (typeof value !== "number") {
      throw new NativeError(`Debug_handle_count returned ${String(value)}`);
    }
    return value;
  }

  /** The {symbol, category} table the native side serves. */
  manifest(): Promise<ManifestEntry[]> {
    return this.client.manifest();
  }

  private adopt(handle: number): Connection {
    return new Connection(this, this.client, handle);
  }

  /**
   * Turn a sentinel result into an exception. Must run before any cleanup
   * call, because cleanup clears the error slot this reads.
   */
  private async failure(fallback: string): Promise<NativeError> {
    const text = await this.lastError();
    return new NativeError(text !== "" ? text : fallback);
  }

  /** Call a handle-returning symbol; zero means failure. */
  async expectHandle(symbol: string, args: readonly (number | string)[]): Promise<number> {
    const { value } = await this.client.call(symbol, args);
    if (typeof value !== "number" || value === 0) {
      throw await this.failure(`${symbol} returned no handle`);
    }
    return value;
  }

  /**
   * Call a boolean symbol. A false paired with an empty error slot is a
   * genuine answer; false with a message is a failure.
   */
  async callFlag(symbol: string, args: readonly number[]): Promise<boolean> {
    const { value } = await this.client.call(symbol, args);
    if (value === true) {
      return true;
    }
    const text = await this.lastError();
    if (text !== "") {
      throw new NativeError(text);
    }
    return false;
  }

  /** Run a job with a temporary native string, releasing it afterwards. */
  async withString<T>(text: string, job: (handle: number) => Promise<T>): Promise<T> {
    const handle = await this.expectHandle("String_create", [text]);
    try {
      return await job(handle);
    } finally {
      await this.client.call("String_destroy", [handle]);
    }
  }

  /**
   * Copy a native string out and release it. The native side reports the
   * UTF-8 byte count alongside the text; a disagreement means the copy was
   * mangled in transit.
   */
  async takeString(handle: number): Promise<string> {
    try {
      const { value, byteLength } = await this.client.call("String_read", [handle]);
      if (typeof value !== "string") {
        throw await this.failure("String_read returned no text");
      }
      const measured = Buffer.byteLength(value, "utf8");
      if (byteLength !== undefined && byteLength !== measured) {
        throw new NativeError(
          `String_read advertised ${byteLength} bytes but delivered ${measured}`,
        );
      }
      return value;
    } finally {
      await this.client.call("String_destroy", [handle]);
    }
  }
}

export class Connection {
  private handle: number | null;

  constructor(
    private readonly session: Session,
    client: NativeClient,
    handle: number,
  ) {
    this.handle = handle;
    registry.register(this, { client, symbol: "Connection_destroy", handle }, this);
  }

  /** The connection's name, e.g. "B1". */
  async name(): Promise<string> {
    const text = await this.session.expectHandle("Connection_name", [this.live()]);
    return this.session.takeString(text);
  }

  /** The device feature this connection drives, e.g. "BarrierGate". */
  async type(): Promise<string> {
    const text = await this.session.expectHandle("Connection_type", [this.live()]);
    return this.session.takeString(text);
  }

  async isBarrierGate(): Promise<boolean> {
    return this.session.callFlag("Connection_is_barrier_gate", [this.live()]);
  }

  /** Canonical serialized form, byte-identical to the native library's. */
  async toJson(): Promise<string> {
    const text = await this.session.expectHandle("Connection_to_json_string", [this.live()]);
    return this.session.takeString(text);
  }

  /** Release the native handle. Safe to call more than once. */
  async dispose(): Promise<void> {
    if (this.handle === null) {
      return;
    }
    const handle = this.handle;
    this.handle = null;
    registry.unregister(this);
    await this.session.callFlag("Connection_destroy", [handle]);
  }

  get disposed(): boolean {
    return this.handle === null;
  }

  private live(): number {
    if (this.handle === null) {
      throw new NativeError("connection has been disposed");
    }
    return this.handle;
  }
}
