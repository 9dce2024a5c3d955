/**
 * Line-oriented JSON client for the native flat API process.
 *
 * The native side exports a C-style handle API and serves it over
 * stdin/stdout, one JSON request and one JSON response per line. This
 * client owns the child process and the correlation of requests to
 * responses. It deliberately knows nothing about the API's semantics:
 * sentinel values (a zero handle, false, null) come back as ordinary
 * results, exactly as an in-process caller of the flat API would see
 * them. Only malformed traffic surfaces as {@link ProtocolError}.
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import { createInterface, type Interface } from "node:readline";
import type { Readable, Writable } from "node:stream";

export interface ManifestEntry {
  symbol: string;
  category: string;
}

export interface CallResult {
  value: unknown;
  /** UTF-8 byte count accompanying text reads, when the native side sent one. */
  byteLength?: number;
}

/** The transport or the peer misbehaved; distinct from a native API failure. */
export class ProtocolError extends Error {
  override name = "ProtocolError";
}

interface PendingCall {
  resolve: (result: { value: unknown; byteLength?: number }) => void;
  reject: (error: Error) => void;
}

/** Command used when FALCON_CAPI_CMD is not set. */
export const DEFAULT_COMMAND = ["python3", "-m", "falcon.capi"];

export function nativeCommand(): string[] {
  const override = process.env.FALCON_CAPI_CMD;
  if (override !== undefined && override.trim() !== "") {
    return override.trim().split(/\s+/);
  }
  return [...DEFAULT_COMMAND];
}

export class NativeClient {
  private nextId = 1;
  private readonly pending = new Map<number, PendingCall>();
  private closed = false;
  private ended = false;
  private exitCode: number | null = null;

  private constructor(
    private readonly child: ChildProcessByStdio<Writable, Readable, null>,
    private readonly lines: Interface,
  ) {
    this.lines.on("line", (line) => this.onLine(line));
    this.child.on("error", (error) => {
      // Covers spawn failure, where no exit event ever comes.
      this.ended = true;
      this.failAll(new ProtocolError(error.message));
    });
    this.child.on("exit", (code) => {
      this.ended = true;
      this.exitCode = code;
      this.failAll(new ProtocolError(`native process exited with code ${code}`));
    });
  }

  static spawn(command?: readonly string[]): NativeClient {
    const argv = command !== undefined ? [...command] : nativeCommand();
    const head = argv[0];
    if (head === undefined) {
      throw new ProtocolError("native command must not be empty");
    }
    const child = spawn(head, argv.slice(1), {
      stdio: ["pipe", "pipe", "inherit"] as const,
    });
    return new NativeClient(child, createInterface({ input: child.stdout }));
  }

  /** Invoke one exported symbol. Rejects only on protocol-level trouble. */
  call(symbol: string, args: readonly (number | boolean | string)[]): Promise<CallResult> {
    return this.send({ op: "call", symbol, args: [...args] });
  }

  /** Fetch the {symbol, category} list the native side exports. */
  async manifest(): Promise<ManifestEntry[]> {
    const { value } = await this.send({ op: "manifest" });
    if (!Array.isArray(value)) {
      throw new ProtocolError("manifest response was not an array");
    }
    return value as ManifestEntry[];
  }

  /** End the session and wait for the child to exit. */
  close(): Promise<number | null> {
    this.closed = true;
    return new Promise((resolve) => {
      if (this.ended || this.child.exitCode !== null) {
        resolve(this.exitCode ?? this.child.exitCode);
        return;
      }
      this.child.once("exit", (code) => resolve(code));
      this.child.stdin.end();
    });
  }

  private send(request: Record<string, unknown>): Promise<CallResult> {
    if (this.closed) {
      return Promise.reject(new ProtocolError("client is closed"));
    }
    const id = this.nextId;
    this.nextId += 1;
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.child.stdin.write(JSON.stringify({ id, ...request }) + "\n", (error) => {
        if (error && this.pending.delete(id)) {
          reject(new ProtocolError(error.message));
        }
      });
    });
  }

  private onLine(line: string): void {
    let response: unknown;
    try {
      response = JSON.parse(line);
    } catch {
      this.failAll(new ProtocolError(`unparseable response line: ${line}`));
      return;
    }
    if (typeof response !== "object" || response === null) {
      this.failAll(new ProtocolError("response was not an object"));
      return;
    }
    const { id, ok, value, byteLength, error } = response as {
      id?: unknown;
      ok?: unknown;
      value?: unknown;
      byteLength?: unknown;
      error?: unknown;
    };
    if (typeof id !== "number") {
      // The peer could not even attribute the failure to a request; every
      // in-flight call is suspect.
      this.failAll(new ProtocolError(`request rejected: ${String(error)}`));
      return;
    }
    const waiter = this.pending.get(id);
    if (waiter === undefined) {
      return;
    }
    this.pending.delete(id);
    if (ok === true) {
      waiter.resolve(
        typeof byteLength === "number" ? { value, byteLength } : { value },
      );
    } else {
      waiter.reject(new ProtocolError(String(error ?? "request failed")));
    }
  }

  private failAll(error: Error): void {
    const waiters = [...this.pending.values()];
    this.pending.clear();
    for (const waiter of waiters) {
      waiter.reject(error);
    }
  }
}
