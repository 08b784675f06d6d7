import init, { lambda_table, signature, distance_curve, tree_check } from "./pkg/hinfty_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function showError(target, err) {
  target.innerHTML = `<p class="error">${err}</p>`;
}

function table(header, rows) {
  const head = `<tr>${header.map((h) => `<th>${h}</th>`).join("")}</tr>`;
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table>${head}${body}</table>`;
}

function runSignature() {
  const out = $("sig-out");
  try {
    const n = num("sig-n"), t = num("sig-t"), k = num("sig-k");
    const lam = lambda_table(n, t, k);
    const rows = Array.from(lam, (v, i) => [i, v.toPrecision(8)]);
    let index;
    try {
      index = signature(n, t, k);
    } catch (e) {
      index = `undefined (${e})`;
    }
    out.innerHTML = `<p>index: <b>${index}</b></p>` + table(["k", "λ_k"], rows);
  } catch (e) {
    showError(out, e);
  }
}

function runDistance() {
  const out = $("dist-out");
  const svg = $("dist-plot");
  try {
    const t = num("dist-t"), uMax = num("dist-u");
    const flat = distance_curve(num("dist-n"), t, uMax, 80);
    const pts = [];
    for (let i = 0; i < flat.length; i += 3) pts.push({ u: flat[i], d: flat[i + 1] });
    const last = pts[pts.length - 1];
    out.innerHTML = `<p>d / u at u = ${uMax}: <b>${(last.d / last.u).toFixed(6)}</b> (t = ${t})</p>`;
    plot(svg, pts, t, uMax);
  } catch (e) {
    showError(out, e);
    svg.innerHTML = "";
  }
}

function plot(svg, pts, t, uMax) {
  const w = svg.width.baseVal.value, h = svg.height.baseVal.value, pad = 40;
  const dMax = Math.max(...pts.map((p) => p.d), t * uMax) || 1;
  const x = (u) => pad + (u / uMax) * (w - 2 * pad);
  const y = (d) => h - pad - (d / dMax) * (h - 2 * pad);
  const curve = pts.map((p, i) => `${i ? "L" : "M"}${x(p.u).toFixed(1)},${y(p.d).toFixed(1)}`).join("");
  svg.innerHTML = `
    <line x1="${pad}" y1="${h - pad}" x2="${w - pad}" y2="${h - pad}" stroke="#444"/>
    <line x1="${pad}" y1="${pad}" x2="${pad}" y2="${h - pad}" stroke="#444"/>
    <path d="M${x(0)},${y(0)}L${x(uMax)},${y(t * uMax)}" stroke="#999" stroke-dasharray="4 4" fill="none"/>
    <path d="${curve}" stroke="#1565c0" stroke-width="2" fill="none"/>
    <text x="${w - pad}" y="${h - pad + 25}" text-anchor="end">u = ${uMax}</text>
    <text x="${pad + 5}" y="${pad - 10}">distance (solid), t·u (dashed)</text>`;
}

function runTree() {
  const out = $("tree-out");
  try {
    const [m, positive, distErr, gramErr] = tree_check($("tree-edges").value, num("tree-lam"));
    out.innerHTML = table(
      ["vertices", "positive eigenvalues", "max distance error", "max Gram error"],
      [[m, positive, distErr.toExponential(2), gramErr.toExponential(2)]],
    );
  } catch (e) {
    showError(out, e);
  }
}

await init();
$("sig-run").onclick = runSignature;
$("dist-run").onclick = runDistance;
$("tree-run").onclick = runTree;
runSignature();
runDistance();
runTree();
