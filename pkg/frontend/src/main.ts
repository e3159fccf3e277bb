/** Page wiring: websocket lifecycle with backoff, UI events, render loop. */

import { decodeMessage, encodeMessage, WireError } from "./schema.js";
import type { InboundMessage, OutboundMessage } from "./schema.js";
import { ConsoleState } from "./state.js";
import { drawReward, drawTrail, skillColor } from "./render.js";

const state = new ConsoleState();
let ws: WebSocket | null = null;
let reconnectAttempts = 0;
let reconnectTimer: number | undefined;

const $ = (id: string) => document.getElementById(id)!;
const urlInput = $("service-url") as HTMLInputElement;
const commandInput = $("command") as HTMLInputElement;

function send(msg: InboundMessage): void {
  if (ws && ws.readyState === WebSocket.OPEN) {
    ws.send(encodeMessage(msg));
  }
}

function connect(): void {
  if (reconnectTimer !== undefined) {
    clearTimeout(reconnectTimer);
    reconnectTimer = undefined;
  }
  ws?.close();
  state.resetForConnect();
  renderRoster();
  const url = urlInput.value.trim() || "ws://127.0.0.1:8765";
  ws = new WebSocket(url);

  ws.onopen = () => {
    reconnectAttempts = 0;
  };
  ws.onmessage = (ev) => {
    try {
      state.handleMessage(decodeMessage(String(ev.data)) as OutboundMessage);
    } catch (e) {
      if (e instanceof WireError) {
        state.errors.push({ code: "bad-wire", detail: String(e.message) });
      } else {
        throw e;
      }
    }
    if (state.skills.length > 0 && rosterStale) renderRoster();
  };
  ws.onclose = () => {
    state.markClosed();
    const timeout = Math.min(500 * 2 ** reconnectAttempts, 10_000);
    reconnectAttempts += 1;
    reconnectTimer = window.setTimeout(connect, timeout);
  };
}

let rosterStale = true;

function renderRoster(): void {
  const roster = $("roster");
  roster.innerHTML = "";
  for (const skill of state.skills) {
    const btn = document.createElement("button");
    btn.textContent = skill.caption;
    btn.style.borderLeft = `6px solid ${skillColor(skill.skill_id)}`;
    btn.onclick = () => send({ type: "set_skill", skill_id: skill.skill_id });
    roster.appendChild(btn);
  }
  rosterStale = state.skills.length === 0;
}

function renderFrame(): void {
  drawTrail($("trail") as HTMLCanvasElement, state);
  drawReward($("reward") as HTMLCanvasElement, state);
  $("banner").textContent = state.banner || "—";
  $("status").textContent = state.status;
  $("status").className = `status ${state.status}`;
  const roster = $("roster");
  Array.from(roster.children).forEach((el, i) => {
    const skill = state.skills[i];
    (el as HTMLElement).classList.toggle(
      "active", skill !== undefined && skill.skill_id === state.activeSkill
    );
  });
  const errs = state.errors.slice(-3).map((e) => `${e.code}: ${e.detail}`);
  $("errors").textContent = errs.join("\n");
  requestAnimationFrame(renderFrame);
}

$("connect").onclick = () => {
  reconnectAttempts = 0;
  connect();
};
$("send-command").onclick = () => {
  const text = commandInput.value.trim();
  if (text) send({ type: "command", text });
};
commandInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") {
    const text = commandInput.value.trim();
    if (text) send({ type: "command", text });
  }
});
$("reset").onclick = () => send({ type: "reset" });
$("pause").onclick = () => send({ type: "pause" });
$("resume").onclick = () => send({ type: "resume" });

connect();
requestAnimationFrame(renderFrame);
