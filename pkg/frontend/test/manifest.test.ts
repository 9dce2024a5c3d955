/**
 * The checked-in manifest is the contract between the two packages: every
 * symbol the wrapper calls must be exported, and every handle the wrapper
 * can receive must have a destroyer the wrapper knows about.
 */

import { readFile } from "node:fs/promises";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import {
  ALLOCATION_RESULT,
  DESTROYERS,
  Session,
  WRAPPER_SYMBOLS,
  type ManifestEntry,
} from "../src/index.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const manifestPath = path.resolve(here, "..", "..", "capi-manifest.json");

let session: Session;
let served: ManifestEntry[];

beforeAll(async () => {
  session = await Session.open();
  served = await session.manifest();
});

afterAll(async () => {
  await session.close();
});

describe("checked-in manifest", () => {
  it("matches what the native process serves", async () => {
    const checkedIn = JSON.parse(await readFile(manifestPath, "utf8"));
    expect(served).toEqual(checkedIn);
  });

  it("assigns every symbol a known category", () => {
    const known = new Set(["allocation", "read", "deallocation", "debug"]);
    for (const entry of served) {
      expect(known.has(entry.category), `${entry.symbol}: ${entry.category}`).toBe(true);
    }
  });
});

describe("wrapper coverage", () => {
  it("calls only symbols the manifest exports", () => {
    const exported = new Set(served.map((entry) => entry.symbol));
    for (const symbol of WRAPPER_SYMBOLS) {
      expect(exported.has(symbol), symbol).toBe(true);
    }
  });

  it("knows the result kind of every allocation symbol", () => {
    const allocators = served
      .filter((entry) => entry.category === "allocation")
      .map((entry) => entry.symbol);
    expect(allocators.sort()).toEqual(Object.keys(ALLOCATION_RESULT).sort());
  });

  it("pairs every handle kind with an exported destroyer", () => {
    const deallocators = served
      .filter((entry) => entry.category === "deallocation")
      .map((entry) => entry.symbol);
    expect(deallocators.sort()).toEqual(Object.values(DESTROYERS).sort());
    for (const kind of Object.values(ALLOCATION_RESULT)) {
      expect(DESTROYERS[kind]).toBeDefined();
    }
  });
});
