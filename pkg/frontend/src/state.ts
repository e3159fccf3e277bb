/**
 * Console state machine, deliberately DOM-free.
 *
 * Consumes decoded outbound messages and maintains everything the render
 * layer draws: connection status, the skill roster, the active skill and
 * banner text, a bounded root-position trail colored by skill, and a
 * bounded style-reward trace. Message handling never throws on valid
 * protocol messages, so intake can never be blocked by rendering state.
 */

import type { OutboundMessage, SkillInfo, StateMessage } from "./schema.js";

export const BUFFER_LIMIT = 600;

export type ConnectionStatus = "connecting" | "connected" | "closed";

export interface TrailPoint {
  x: number;
  y: number;
  heading: number;
  skill: number;
}

export interface ErrorNote {
  code: string;
  detail: string;
}

export class ConsoleState {
  status: ConnectionStatus = "connecting";
  skills: SkillInfo[] = [];
  activeSkill: number | null = null;
  banner = "";
  lastCommand: string | null = null;
  lastT = -Infinity;
  trail: TrailPoint[] = [];
  rsTrace: number[] = [];
  errors: ErrorNote[] = [];
  stateCount = 0;

  /** Reset everything that belongs to one connection (roster included). */
  resetForConnect(): void {
    this.status = "connecting";
    this.skills = [];
    this.activeSkill = null;
    this.banner = "";
    this.lastCommand = null;
    this.lastT = -Infinity;
    this.trail = [];
    this.rsTrace = [];
    this.stateCount = 0;
  }

  markClosed(): void {
    this.status = "closed";
  }

  captionOf(skillId: number): string {
    const hit = this.skills.find((s) => s.skill_id === skillId);
    return hit ? hit.caption : `skill ${skillId}`;
  }

  handleMessage(msg: OutboundMessage): void {
    switch (msg.type) {
      case "hello":
        this.skills = msg.skills.slice();
        this.status = "connected";
        this.banner = "connected";
        break;
      case "state":
        this.applyState(msg);
        break;
      case "error":
        this.errors.push({ code: msg.code, detail: msg.detail });
        if (this.errors.length > 20) this.errors.shift();
        this.banner = `error: ${msg.code}`;
        break;
    }
  }

  private applyState(msg: StateMessage): void {
    if (this.status !== "connected") {
      // protocol guarantees hello-first; tolerate strays without crashing
      this.errors.push({ code: "protocol", detail: "state before hello" });
      return;
    }
    if (msg.t <= this.lastT) {
      this.errors.push({ code: "protocol", detail: `t went backwards (${msg.t})` });
      return;
    }
    this.lastT = msg.t;
    this.stateCount += 1;
    this.activeSkill = msg.active_skill;
    this.banner =
      msg.routed_from !== undefined
        ? `"${msg.routed_from}" → ${this.captionOf(msg.active_skill)}`
        : this.captionOf(msg.active_skill);
    this.lastCommand = msg.routed_from ?? this.lastCommand;
    this.trail.push({
      x: msg.root_pos[0],
      y: msg.root_pos[1],
      heading: msg.root_heading,
      skill: msg.active_skill,
    });
    if (this.trail.length > BUFFER_LIMIT) this.trail.shift();
    this.rsTrace.push(msg.r_s);
    if (this.rsTrace.length > BUFFER_LIMIT) this.rsTrace.shift();
  }
}
