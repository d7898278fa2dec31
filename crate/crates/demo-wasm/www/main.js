import init, { qpeDistribution, qpeEstimates, errorBound, closeCurve, lemmaAmplitudes } from "./pkg/qcloseness_demo.js";

const $ = (id) => document.getElementById(id);

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

function drawQpe() {
  const a = parseFloat($("qpe-a").value);
  const t = parseInt($("qpe-t").value, 10);
  const canvas = $("qpe-canvas");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 24;
  let dist;
  try {
    dist = qpeDistribution(a, t);
  } catch (e) {
    $("qpe-info").innerHTML = `<span class="err">${e.message ?? e}</span>`;
    return;
  }
  const est = qpeEstimates(t);
  const bound = errorBound(a, t);
  let inside = 0;
  dist.forEach((p, y) => { if (Math.abs(est[y] - a) <= bound) inside += p; });
  $("qpe-info").textContent = `M = ${dist.length}, P(|ã − a| ≤ ${bound.toFixed(4)}) = ${inside.toFixed(4)}`;

  axes(ctx, w, h, pad);
  const max = Math.max(...dist);
  const bw = (w - 2 * pad) / dist.length;
  dist.forEach((p, y) => {
    ctx.fillStyle = Math.abs(est[y] - a) <= bound ? "#2a7ab0" : "#b0b0b0";
    const bh = (p / max) * (h - 2 * pad);
    ctx.fillRect(pad + y * bw, h - pad - bh, Math.max(bw - 1, 1), bh);
  });
}

function drawCurve() {
  const eps = parseFloat($("cc-eps").value);
  const nu = parseFloat($("cc-nu").value);
  const reps = parseInt($("cc-rep").value, 10);
  const alg = $("cc-alg").checked;
  const canvas = $("cc-canvas");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 24;
  const xmax = 1.5 * eps;
  const xs = Array.from({ length: 301 }, (_, i) => (i / 300) * xmax);
  let ys;
  try {
    ys = closeCurve(eps, nu, reps, alg, new Float64Array(xs));
  } catch (e) {
    $("cc-info").innerHTML = `<span class="err">${e.message ?? e}</span>`;
    return;
  }
  $("cc-info").textContent = `P(CLOSE) at ‖p−q‖₂ = (1−ν)ε: ${ys[Math.round(300 * (1 - nu) / 1.5)].toFixed(4)}, at ε: ${ys[200].toFixed(4)}`;

  axes(ctx, w, h, pad);
  const px = (x) => pad + (x / xmax) * (w - 2 * pad);
  const py = (y) => h - pad - y * (h - 2 * pad);
  ctx.fillStyle = "rgba(200, 200, 200, 0.4)";
  ctx.fillRect(px((1 - nu) * eps), pad, px(eps) - px((1 - nu) * eps), h - 2 * pad);
  ctx.strokeStyle = "#c33";
  ctx.setLineDash([4, 4]);
  for (const y of [1 / 3, 2 / 3]) {
    ctx.beginPath();
    ctx.moveTo(pad, py(y));
    ctx.lineTo(w - pad, py(y));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  ctx.strokeStyle = "#2a7ab0";
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function showLemma() {
  const out = $("lm-out");
  let amps;
  try {
    amps = lemmaAmplitudes($("lm-p").value, $("lm-perm").checked, parseInt($("lm-seed").value, 10) >>> 0);
  } catch (e) {
    out.innerHTML = `<p class="err">${e.message ?? e}</p>`;
    return;
  }
  const p = $("lm-p").value.split(/[\s,]+/).filter(Boolean).map(Number);
  const rows = amps
    .map((v, k) => `<tr><td>${k + 1}</td><td>${p[k]}</td><td>${v.toFixed(15)}</td><td>${Math.abs(v - p[k]).toExponential(2)}</td></tr>`)
    .join("");
  out.innerHTML = `<table><tr><th>k</th><th>p_k</th><th>⟨0,0,k|Ũ_p|0,0,0⟩</th><th>|diff|</th></tr>${rows}</table>`;
}

await init();
for (const id of ["qpe-a", "qpe-t"]) $(id).addEventListener("input", drawQpe);
for (const id of ["cc-eps", "cc-nu", "cc-rep", "cc-alg"]) $(id).addEventListener("input", drawCurve);
for (const id of ["lm-p", "lm-perm", "lm-seed"]) $(id).addEventListener("input", showLemma);
drawQpe();
drawCurve();
showLemma();
