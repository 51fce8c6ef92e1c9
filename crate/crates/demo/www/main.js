import init, { Session, lambda_curve } from "./pkg/elastic_dtn_demo.js";

const $ = (id) => document.getElementById(id);
let session = null;
const history = [];

function status(text) {
  $("status").textContent = text;
}

// blue -> yellow ramp on a log scale
function colour(v, lo, hi) {
  const t = hi > lo ? Math.min(1, Math.max(0, (Math.log(v) - lo) / (hi - lo))) : 0;
  const r = Math.round(40 + 215 * t), g = Math.round(60 + 170 * t), b = Math.round(160 - 120 * t);
  return `rgb(${r},${g},${b})`;
}

function drawMesh() {
  const c = $("mesh"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const xy = session.vertices(), tri = session.triangles();
  let ext = 0;
  for (const v of xy) ext = Math.max(ext, Math.abs(v));
  const s = (c.width / 2 - 8) / ext;
  const px = (i) => c.width / 2 + s * xy[2 * i], py = (i) => c.height / 2 - s * xy[2 * i + 1];
  const values = $("show").value === "eta" ? session.indicators() : session.magnitudes();
  let lo = Infinity, hi = -Infinity;
  for (const v of values) if (v > 0) { lo = Math.min(lo, Math.log(v)); hi = Math.max(hi, Math.log(v)); }
  ctx.lineWidth = 0.3;
  ctx.strokeStyle = "rgba(0,0,0,0.35)";
  for (let t = 0; t < tri.length / 3; t++) {
    const [a, b, d] = [tri[3 * t], tri[3 * t + 1], tri[3 * t + 2]];
    ctx.beginPath();
    ctx.moveTo(px(a), py(a));
    ctx.lineTo(px(b), py(b));
    ctx.lineTo(px(d), py(d));
    ctx.closePath();
    if (values.length) {
      ctx.fillStyle = values[t] > 0 ? colour(values[t], lo, hi) : "#223";
      ctx.fill();
    }
    ctx.stroke();
  }
}

function report() {
  const lines = [`N = ${session.truncation()}`, "dof      eps_h      e_h"];
  for (const [dof, eps, e] of history) {
    lines.push(`${String(dof).padEnd(8)} ${eps.toExponential(3)}  ${Number.isNaN(e) ? "-" : e.toExponential(3)}`);
  }
  status(lines.join("\n"));
}

function guarded(f) {
  return () => {
    try {
      f();
    } catch (e) {
      status(`error: ${e}`);
    }
  };
}

function reset() {
  session?.free();
  session = new Session(Number($("example").value), Number($("omega").value));
  history.length = 0;
  drawMesh();
  report();
}

function solve() {
  history.push(Array.from(session.solve()));
  drawMesh();
  report();
}

function refine() {
  session.refine();
  solve();
}

function plotLambda() {
  const c = $("lambda"), ctx = c.getContext("2d");
  const omega = Number($("omega").value), nmax = Number($("nmax").value);
  const data = lambda_curve(omega, 2.0, 1.0, 1.0, nmax);
  let lo = Infinity, hi = -Infinity;
  for (const v of data) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  const pad = 0.05 * (hi - lo || 1);
  lo -= pad; hi += pad;
  ctx.clearRect(0, 0, c.width, c.height);
  const x = (n) => 30 + (c.width - 40) * n / nmax, y = (v) => c.height - 20 - (c.height - 30) * (v - lo) / (hi - lo);
  for (const [part, style] of [[0, "#1f5fbf"], [1, "#c0392b"]]) {
    ctx.strokeStyle = style;
    ctx.beginPath();
    for (let n = 0; n <= nmax; n++) {
      const v = data[2 * n + part];
      n === 0 ? ctx.moveTo(x(n), y(v)) : ctx.lineTo(x(n), y(v));
    }
    ctx.stroke();
  }
  ctx.fillStyle = "#1f5fbf";
  ctx.fillText("Re Lambda_n", 40, 14);
  ctx.fillStyle = "#c0392b";
  ctx.fillText("Im Lambda_n", 130, 14);
  ctx.fillStyle = "#222";
  ctx.fillText(`n = 0 .. ${nmax}  (lambda = 2, mu = 1, R = 1)`, 30, c.height - 4);
}

await init();
$("reset").onclick = guarded(reset);
$("solve").onclick = guarded(solve);
$("refine").onclick = guarded(refine);
$("plot").onclick = guarded(plotLambda);
$("show").onchange = guarded(drawMesh);
guarded(reset)();
guarded(plotLambda)();
