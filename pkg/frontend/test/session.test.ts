import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { decodeMessage } from "../src/schema.js";
import type { OutboundMessage } from "../src/schema.js";
import { BUFFER_LIMIT, ConsoleState } from "../src/state.js";

const transcriptPath = fileURLToPath(
  new URL("../../schema/session_transcript.json", import.meta.url)
);
const transcript = JSON.parse(readFileSync(transcriptPath, "utf-8")) as {
  skills: { skill_id: number; name: string; caption: string }[];
  events: { dir: "in" | "out"; encoded: string; note?: string }[];
};

function outbound(): OutboundMessage[] {
  return transcript.events
    .filter((e) => e.dir === "out")
    .map((e) => decodeMessage(e.encoded) as OutboundMessage);
}

describe("scripted session drives the console state machine", () => {
  it("replays without error and hits every banner/trail stage", () => {
    const state = new ConsoleState();
    const seenBanners = new Set<string>();
    let states = 0;
    for (const msg of outbound()) {
      state.handleMessage(msg);
      seenBanners.add(state.banner);
      if (msg.type === "state") states += 1;
    }
    expect(states).toBeGreaterThanOrEqual(100);
    expect(state.status).toBe("connected");
    expect(state.skills.map((s) => s.name)).toEqual(
      transcript.skills.map((s) => s.name)
    );
    // stage 1: default skill banner after connect
    expect(seenBanners).toContain("Walk Forward");
    // stage 2: direct skill click
    expect(seenBanners).toContain("Turn Left");
    // stage 3: routed command banner carries the command text
    expect(seenBanners).toContain('"stand still" → Stand Still');
    // stage 4: rejected messages surface as error banners
    expect(seenBanners).toContain("error: bad-skill");
    expect(seenBanners).toContain("error: no-route");
    // protocol-level errors never fired
    expect(state.errors.filter((e) => e.code === "protocol")).toEqual([]);
  });

  it("keeps time strictly increasing and buffers bounded", () => {
    const state = new ConsoleState();
    let lastT = -Infinity;
    for (const msg of outbound()) {
      state.handleMessage(msg);
      if (msg.type === "state") {
        expect(msg.t).toBeGreaterThan(lastT);
        lastT = msg.t;
      }
      expect(state.trail.length).toBeLessThanOrEqual(BUFFER_LIMIT);
      expect(state.rsTrace.length).toBeLessThanOrEqual(BUFFER_LIMIT);
    }
  });

  it("colors the trail by the active skill across the switch points", () => {
    const state = new ConsoleState();
    for (const msg of outbound()) state.handleMessage(msg);
    const skillsSeen = new Set(state.trail.map((p) => p.skill));
    expect(skillsSeen.has(0)).toBe(true); // walk-forward start
    expect(skillsSeen.has(2)).toBe(true); // after set_skill
    expect(skillsSeen.has(3)).toBe(true); // after routed command
    // trail points are finite coordinates
    for (const p of state.trail) {
      expect(Number.isFinite(p.x)).toBe(true);
      expect(Number.isFinite(p.y)).toBe(true);
    }
  });

  it("caps the trail at the buffer limit under a message flood", () => {
    const state = new ConsoleState();
    state.handleMessage({
      type: "hello",
      skills: transcript.skills,
    });
    for (let i = 0; i < 2 * BUFFER_LIMIT; i++) {
      state.handleMessage({
        type: "state", t: (i + 1) * 0.02, root_pos: [i * 0.01, 0],
        root_heading: 0, joint_pos: [0, 0, 0, 0], active_skill: 0, r_s: 0.1,
      });
    }
    expect(state.trail.length).toBe(BUFFER_LIMIT);
    expect(state.rsTrace.length).toBe(BUFFER_LIMIT);
    expect(state.stateCount).toBe(2 * BUFFER_LIMIT);
  });

  it("tolerates out-of-order time without crashing", () => {
    const state = new ConsoleState();
    state.handleMessage({ type: "hello", skills: transcript.skills });
    const mk = (t: number) => ({
      type: "state" as const, t, root_pos: [0, 0] as [number, number],
      root_heading: 0, joint_pos: [0, 0, 0, 0], active_skill: 0, r_s: 0,
    });
    state.handleMessage(mk(0.04));
    state.handleMessage(mk(0.02)); // stale -> recorded as protocol error
    expect(state.trail.length).toBe(1);
    expect(state.errors.some((e) => e.code === "protocol")).toBe(true);
  });

  it("reconnect resets the roster and buffers", () => {
    const state = new ConsoleState();
    for (const msg of outbound()) state.handleMessage(msg);
    expect(state.trail.length).toBeGreaterThan(0);
    state.markClosed();
    expect(state.status).toBe("closed");
    state.resetForConnect();
    expect(state.skills).toEqual([]);
    expect(state.trail).toEqual([]);
    expect(state.status).toBe("connecting");
    // a fresh hello restores the roster
    state.handleMessage({ type: "hello", skills: transcript.skills });
    expect(state.status).toBe("connected");
    expect(state.skills.length).toBe(4);
  });
});
