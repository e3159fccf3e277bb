/** Canvas drawing: the root trail colored by active skill, plus the
 * style-reward sparkline. Pure draw-from-state; holds no state itself. */

import type { ConsoleState } from "./state.js";

export const SKILL_COLORS = [
  "#5aa7ff", "#2bbf6a", "#eec643", "#ff6b81",
  "#9b59b6", "#00c2a8", "#f0883e", "#c9d1d9",
];

export function skillColor(skillId: number): string {
  return SKILL_COLORS[skillId % SKILL_COLORS.length];
}

export function drawTrail(canvas: HTMLCanvasElement, state: ConsoleState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width: w, height: h } = canvas;
  ctx.fillStyle = "#0b1020";
  ctx.fillRect(0, 0, w, h);

  if (state.trail.length === 0) return;
  // fit the trail with a fixed-scale window centered on its bounding box
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const p of state.trail) {
    minX = Math.min(minX, p.x); maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y); maxY = Math.max(maxY, p.y);
  }
  const span = Math.max(maxX - minX, maxY - minY, 0.5);
  const scale = (Math.min(w, h) * 0.8) / span;
  const cx = (minX + maxX) / 2, cy = (minY + maxY) / 2;
  const px = (x: number) => w / 2 + (x - cx) * scale;
  const py = (y: number) => h / 2 - (y - cy) * scale;

  for (let i = 1; i < state.trail.length; i++) {
    const a = state.trail[i - 1], b = state.trail[i];
    ctx.strokeStyle = skillColor(b.skill);
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px(a.x), py(a.y));
    ctx.lineTo(px(b.x), py(b.y));
    ctx.stroke();
  }

  const last = state.trail[state.trail.length - 1];
  ctx.fillStyle = skillColor(last.skill);
  ctx.beginPath();
  ctx.arc(px(last.x), py(last.y), 6, 0, 2 * Math.PI);
  ctx.fill();
  ctx.strokeStyle = "#ffffff";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(px(last.x), py(last.y));
  ctx.lineTo(px(last.x) + 14 * Math.cos(last.heading),
             py(last.y) - 14 * Math.sin(last.heading));
  ctx.stroke();
}

export function drawReward(canvas: HTMLCanvasElement, state: ConsoleState): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width: w, height: h } = canvas;
  ctx.fillStyle = "#0b1020";
  ctx.fillRect(0, 0, w, h);
  const trace = state.rsTrace;
  if (trace.length < 2) return;
  const maxR = Math.max(1.0, ...trace);
  ctx.strokeStyle = "#2bbf6a";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  trace.forEach((r, i) => {
    const x = (i / (trace.length - 1)) * w;
    const y = h - (r / maxR) * (h - 4) - 2;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#a9b2cc";
  ctx.font = "11px system-ui, sans-serif";
  ctx.fillText(`r_s ${trace[trace.length - 1].toFixed(3)}`, 6, 13);
}
