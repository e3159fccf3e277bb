import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { decodeMessage, encodeMessage, WireError } from "../src/schema.js";
import type { Message } from "../src/schema.js";

const fixturesPath = fileURLToPath(
  new URL("../../schema/wire_fixtures.json", import.meta.url)
);
const fixtures = JSON.parse(readFileSync(fixturesPath, "utf-8")) as {
  messages: { name: string; decoded: Message; encoded: string }[];
};

describe("canonical codec", () => {
  it("has a reasonable fixture corpus", () => {
    expect(fixtures.messages.length).toBeGreaterThanOrEqual(8);
  });

  for (const { name, decoded, encoded } of fixtures.messages) {
    it(`encodes ${name} byte-for-byte`, () => {
      expect(encodeMessage(decoded)).toBe(encoded);
    });
    it(`decodes ${name} to the canonical object`, () => {
      expect(decodeMessage(encoded)).toEqual(decoded);
    });
  }

  it("normalizes negative zero", () => {
    const enc = encodeMessage({
      type: "state", t: 0.02, root_pos: [-0, 0], root_heading: -1e-9,
      joint_pos: [0, 0, 0, 0], active_skill: 0, r_s: 0,
    });
    expect(enc).not.toContain("-0.000000");
  });

  it("omits routed_from when absent", () => {
    const enc = encodeMessage({
      type: "state", t: 1, root_pos: [0, 0], root_heading: 0,
      joint_pos: [0, 0, 0, 0], active_skill: 1, r_s: 0.5,
    });
    expect(enc).not.toContain("routed_from");
  });

  it("rejects malformed input", () => {
    expect(() => decodeMessage("nope")).toThrow(WireError);
    expect(() => decodeMessage('{"type":"warp"}')).toThrow(WireError);
    expect(() => decodeMessage('{"type":"set_skill"}')).toThrow(WireError);
    expect(() =>
      decodeMessage('{"type":"set_skill","skill_id":"2"}')
    ).toThrow(WireError);
    expect(() => decodeMessage('{"type":"reset","x":1}')).toThrow(WireError);
  });

  it("rejects non-finite floats on encode", () => {
    expect(() =>
      encodeMessage({
        type: "state", t: Number.NaN, root_pos: [0, 0], root_heading: 0,
        joint_pos: [0, 0, 0, 0], active_skill: 0, r_s: 0,
      })
    ).toThrow(WireError);
  });
});
