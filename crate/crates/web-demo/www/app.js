import init, { hapticPreview, traceTaps, bordaTally } from "./pkg/nudge_web_demo.js";

const COLORS = { hand_raise: "#2f6fd6", confused: "#d63a3a", confident: "#e0b020" };
const $ = (id) => document.getElementById(id);

function fail(el, err) {
  el.innerHTML = "";
  const p = document.createElement("p");
  p.className = "err";
  p.textContent = String(err);
  el.appendChild(p);
}

let lastPattern = [];

function drawHaptics() {
  const out = $("h-out");
  let preview;
  try {
    preview = JSON.parse(hapticPreview($("h-kind").value, Number($("h-count").value), Number($("h-base").value), Number($("h-slope").value)));
  } catch (e) {
    fail(out, e);
    return;
  }
  lastPattern = preview.vibrate;
  const c = $("h-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const scale = (c.width - 20) / preview.total_duration_ms;
  const base = c.height - 20;
  g.fillStyle = COLORS[preview.kind];
  for (const [start, dur, intensity] of preview.timeline) {
    const h = intensity * (base - 10);
    g.fillRect(10 + start * scale, base - h, Math.max(1, dur * scale), h);
  }
  g.fillStyle = "#666";
  g.fillText(`0 ms`, 10, c.height - 5);
  g.fillText(`${preview.total_duration_ms} ms`, c.width - 60, c.height - 5);
  out.textContent = JSON.stringify(preview.sequence, null, 1);
}

function parseTaps(text) {
  return text.split("\n").map((l) => l.trim()).filter(Boolean).map((line, i) => {
    const [user, kind, at] = line.split(/\s+/);
    if (at === undefined) throw new Error(`line ${i + 1}: expected "user kind time_ms"`);
    return { user, kind, at: Number(at) };
  });
}

function runTrace() {
  const out = $("t-out");
  let trace;
  try {
    const config = {
      window_len_ms: Number($("t-window").value),
      moderation: { cooldown_ms: Number($("t-cooldown").value), escalation: $("t-escalation").value },
    };
    trace = JSON.parse(traceTaps(JSON.stringify(parseTaps($("t-taps").value)), JSON.stringify(config)));
  } catch (e) {
    fail(out, e);
    return;
  }
  const rows = trace.taps.map((t) => {
    const ok = t.count_in_window !== null;
    return `<tr class="${ok ? "" : "rejected"}"><td>${t.at}</td><td>${t.user}</td><td>${t.kind}</td>` +
      `<td>${t.verdict.kind}</td><td>${ok ? t.count_in_window : ""}</td><td>${t.play_haptic ? "haptic" : ""}</td>` +
      `<td>${t.cooldown_remaining_ms}</td></tr>`;
  });
  out.innerHTML = `<table><tr><th>ms</th><th>user</th><th>kind</th><th>verdict</th><th>count</th><th></th><th>cooldown left</th></tr>${rows.join("")}</table>`;

  const c = $("t-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const len = Number($("t-window").value);
  const end = Math.max(len, ...trace.taps.map((t) => t.at)) + len;
  const x = (t) => 10 + (t / end) * (c.width - 20);
  const lane = { hand_raise: 0, confused: 1, confident: 2 };
  for (const [kind, opened, count] of trace.windows) {
    const y = 10 + lane[kind] * 35;
    g.fillStyle = COLORS[kind] + "55";
    g.fillRect(x(opened), y, x(opened + len) - x(opened), 28);
    g.fillStyle = "#000";
    g.fillText(String(count), x(opened) + 3, y + 18);
  }
  for (const t of trace.taps) {
    const y = 10 + lane[t.kind] * 35;
    g.fillStyle = t.count_in_window === null ? "#999" : COLORS[t.kind];
    g.fillRect(x(t.at) - 1, y, 2, 28);
  }
}

function runBorda() {
  const c = $("b-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  let result;
  try {
    const ballots = $("b-ballots").value.split("\n").map((l) => l.trim()).filter(Boolean)
      .map((l, i) => ({ voter: `v${i + 1}`, ranking: l.split(",").map((s) => s.trim()).filter(Boolean) }));
    const weights = $("b-weights").value.split(",").map((s) => Number(s.trim()));
    result = JSON.parse(bordaTally(JSON.stringify(ballots), JSON.stringify(weights)));
  } catch (e) {
    g.fillStyle = "#a33";
    g.fillText(String(e), 10, 20);
    return;
  }
  const max = Math.max(1, ...Object.values(result.totals));
  const barH = Math.min(28, (c.height - 10) / Math.max(1, result.ranking.length));
  result.ranking.forEach((name, i) => {
    const pts = result.totals[name];
    const w = (pts / max) * (c.width - 260);
    g.fillStyle = i < 3 ? "#2f6fd6" : "#9bb4dd";
    g.fillRect(200, 5 + i * barH, w, barH - 4);
    g.fillStyle = "#000";
    g.fillText(name, 5, 5 + i * barH + barH / 2 + 3);
    g.fillText(String(pts), 205 + w, 5 + i * barH + barH / 2 + 3);
  });
}

await init();
for (const id of ["h-kind", "h-count", "h-base", "h-slope"]) $(id).addEventListener("input", drawHaptics);
$("h-vibrate").addEventListener("click", () => navigator.vibrate?.(lastPattern));
$("t-run").addEventListener("click", runTrace);
$("b-run").addEventListener("click", runBorda);
drawHaptics();
runTrace();
runBorda();
