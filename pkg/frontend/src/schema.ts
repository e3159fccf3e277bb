/**
 * Canonical session-message codec.
 *
 * This mirrors the service's encoder exactly; the shared fixture file
 * (schema/wire_fixtures.json at the repo root) pins both codecs to the
 * same bytes. Rules: one JSON object per message, fixed per-type key
 * order, compact separators, floats fixed to six fractional digits
 * (sign-normalized zero), integers bare, strings JSON-escaped.
 */

export interface SkillInfo {
  skill_id: number;
  name: string;
  caption: string;
}

export interface HelloMessage {
  type: "hello";
  skills: SkillInfo[];
}

export interface StateMessage {
  type: "state";
  t: number;
  root_pos: [number, number];
  root_heading: number;
  joint_pos: number[];
  active_skill: number;
  r_s: number;
  routed_from?: string;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
}

export type OutboundMessage = HelloMessage | StateMessage | ErrorMessage;

export type InboundMessage =
  | { type: "set_skill"; skill_id: number }
  | { type: "command"; text: string }
  | { type: "reset" }
  | { type: "pause" }
  | { type: "resume" };

export type Message = OutboundMessage | InboundMessage;

const FIELD_ORDER: Record<string, readonly string[]> = {
  hello: ["type", "skills"],
  state: ["type", "t", "root_pos", "root_heading", "joint_pos",
          "active_skill", "r_s", "routed_from"],
  error: ["type", "code", "detail"],
  set_skill: ["type", "skill_id"],
  command: ["type", "text"],
  reset: ["type"],
  pause: ["type"],
  resume: ["type"],
};

const FLOAT_FIELDS = new Set(["t", "root_heading", "r_s"]);
const FLOAT_LIST_FIELDS = new Set(["root_pos", "joint_pos"]);
const INT_FIELDS = new Set(["skill_id", "active_skill"]);
const STR_FIELDS = new Set(["type", "text", "code", "detail", "routed_from"]);

export class WireError extends Error {}

function fmtFloat(x: number): string {
  if (!Number.isFinite(x)) throw new WireError(`non-finite float ${x}`);
  let s = x.toFixed(6);
  if (s.startsWith("-") && Number(s) === 0) s = s.slice(1);
  return s;
}

function fmtInt(v: unknown): string {
  if (typeof v !== "number" || !Number.isInteger(v)) {
    throw new WireError(`expected integer, got ${JSON.stringify(v)}`);
  }
  return String(v);
}

function fmtStr(s: unknown): string {
  if (typeof s !== "string") {
    throw new WireError(`expected string, got ${JSON.stringify(s)}`);
  }
  return JSON.stringify(s);
}

function fmtSkillEntry(e: SkillInfo): string {
  return `{"skill_id":${fmtInt(e.skill_id)},"name":${fmtStr(e.name)},` +
         `"caption":${fmtStr(e.caption)}}`;
}

function fmtValue(field: string, value: unknown): string {
  if (FLOAT_FIELDS.has(field)) return fmtFloat(value as number);
  if (FLOAT_LIST_FIELDS.has(field)) {
    return "[" + (value as number[]).map(fmtFloat).join(",") + "]";
  }
  if (INT_FIELDS.has(field)) return fmtInt(value);
  if (STR_FIELDS.has(field)) return fmtStr(value);
  if (field === "skills") {
    return "[" + (value as SkillInfo[]).map(fmtSkillEntry).join(",") + "]";
  }
  throw new WireError(`no formatter for field '${field}'`);
}

export function encodeMessage(msg: Message): string {
  const order = FIELD_ORDER[msg.type];
  if (!order) throw new WireError(`unknown message type '${(msg as any).type}'`);
  const rec = msg as unknown as Record<string, unknown>;
  for (const key of Object.keys(rec)) {
    if (!order.includes(key)) {
      throw new WireError(`unexpected field '${key}' for '${msg.type}'`);
    }
  }
  const parts: string[] = [];
  for (const field of order) {
    const value = rec[field];
    if (field === "routed_from" && (value === undefined || value === null)) continue;
    if (value === undefined) {
      throw new WireError(`'${msg.type}' message missing field '${field}'`);
    }
    parts.push(`${JSON.stringify(field)}:${fmtValue(field, value)}`);
  }
  return "{" + parts.join(",") + "}";
}

export function decodeMessage(text: string): Message {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new WireError(`not a JSON document: ${e}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new WireError("message must be a JSON object");
  }
  const rec = doc as Record<string, unknown>;
  const mtype = rec.type;
  if (typeof mtype !== "string" || !(mtype in FIELD_ORDER)) {
    throw new WireError(`unknown message type ${JSON.stringify(mtype)}`);
  }
  const order = FIELD_ORDER[mtype];
  for (const key of Object.keys(rec)) {
    if (!order.includes(key)) {
      throw new WireError(`unexpected field '${key}' for '${mtype}'`);
    }
  }
  for (const field of order) {
    if (field === "routed_from") continue;
    if (!(field in rec)) {
      throw new WireError(`'${mtype}' message missing field '${field}'`);
    }
    validateField(field, rec[field]);
  }
  return doc as Message;
}

function validateField(field: string, value: unknown): void {
  if (FLOAT_FIELDS.has(field) && typeof value !== "number") {
    throw new WireError(`field '${field}' must be a number`);
  }
  if (FLOAT_LIST_FIELDS.has(field)) {
    if (!Array.isArray(value) || !value.every((v) => typeof v === "number")) {
      throw new WireError(`field '${field}' must be a number list`);
    }
  }
  if (INT_FIELDS.has(field) && (typeof value !== "number" || !Number.isInteger(value))) {
    throw new WireError(`field '${field}' must be an integer`);
  }
  if (STR_FIELDS.has(field) && typeof value !== "string") {
    throw new WireError(`field '${field}' must be a string`);
  }
  if (field === "skills") {
    if (!Array.isArray(value) || value.length === 0) {
      throw new WireError("hello.skills must be a non-empty list");
    }
    for (const e of value) {
      if (typeof e !== "object" || e === null) {
        throw new WireError("hello.skills entries must be objects");
      }
      for (const k of ["skill_id", "name", "caption"]) {
        if (!(k in (e as object))) throw new WireError(`skill entry missing '${k}'`);
      }
    }
  }
}
