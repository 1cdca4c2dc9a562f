import init, { solve, count, explore_shifts } from "./pkg/eed_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const mu = (id) => ($(id).value.trim() === "auto" ? NaN : parseFloat($(id).value));

function show(id, f) {
  const out = $(id);
  out.classList.remove("err");
  try {
    out.textContent = f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e);
  }
}

function plot(steps) {
  const c = $("plot");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (steps.length < 2) return;
  const pad = 40;
  const w = c.width - 2 * pad;
  const h = c.height - 2 * pad;
  const logs = steps.flatMap((s) => [s.omega, s.omega_bound, s.res_frob]).filter((v) => v > 0);
  const lo = Math.floor(Math.log10(Math.min(...logs)));
  const hi = Math.ceil(Math.log10(Math.max(...logs)));
  const taus = steps.map((s) => s.tau);
  const tmax = Math.max(...taus, 1);
  const x = (i) => pad + (w * i) / (steps.length - 1);
  const y = (v) => pad + h - (h * (Math.log10(v) - lo)) / Math.max(hi - lo, 1);
  const yt = (t) => pad + h - (h * t) / tmax;

  g.strokeStyle = "#999";
  g.fillStyle = "#333";
  g.font = "11px sans-serif";
  for (let e = lo; e <= hi; e++) {
    g.fillText(`1e${e}`, 2, y(10 ** e) + 4);
  }
  g.fillText(`tau ${tmax.toExponential(2)}`, c.width - pad - 40, pad - 8);

  const line = (color, pts) => {
    g.strokeStyle = color;
    g.beginPath();
    let started = false;
    for (const [px, py] of pts) {
      if (!Number.isFinite(py)) {
        started = false;
        continue;
      }
      if (started) g.lineTo(px, py);
      else g.moveTo(px, py);
      started = true;
    }
    g.stroke();
  };
  line("#1f77b4", steps.map((s, i) => [x(i), s.omega > 0 ? y(s.omega) : NaN]));
  line("#ff7f0e", steps.map((s, i) => [x(i), s.omega_bound ? y(s.omega_bound) : NaN]));
  line("#2ca02c", steps.map((s, i) => [x(i), s.res_frob > 0 ? y(s.res_frob) : NaN]));
  line("#aaa", steps.map((s, i) => [x(i), yt(s.tau)]));
}

await init();

$("solve").onclick = () =>
  show("solve-out", () => {
    const v = JSON.parse(solve($("gen").value, num("lo"), num("hi"), num("tol"), num("m"), mu("mu"), 0));
    plot(v.steps);
    const last = v.steps[v.steps.length - 1] || {};
    return [
      `n = ${v.n}, anorm = ${v.anorm.toExponential(4)}, mu = ${v.mu}`,
      `${v.lambdas.length} eigenvalues in the interval`,
      `final omega = ${last.omega?.toExponential(3)}, ||R||_F = ${last.res_frob?.toExponential(3)}`,
      `gamma_g = ${v.gamma_g}, tau_g = ${v.tau_g}`,
      ...v.warnings.map((w) => `warning: ${w}`),
      v.failure ? `failure: ${v.failure}` : "",
    ].join("\n");
  });

$("count").onclick = () =>
  show("solve-out", () => `exact count in [${num("lo")}, ${num("hi")}]: ${count($("gen").value, num("lo"), num("hi"))}`);

$("explore").onclick = () =>
  show("explore-out", () => {
    const eigs = new Float64Array($("eigs").value.split(",").map(Number));
    const v = JSON.parse(explore_shifts(eigs, eigs[0], eigs[eigs.length - 1], num("anorm"), num("tol"), mu("xmu")));
    const rows = v.steps.map(
      (s) =>
        `${s.step}\t${s.lambda}\t${s.gamma.toExponential(3)}\t${s.tau.toExponential(3)}\t` +
        `${s.assumption_ok ? s.omega_explicit.toExponential(2) : "-"}\t${s.stability_ok}`
    );
    return [`mu = ${v.mu}, gamma_g = ${v.gamma_g}, tau_g = ${v.tau_g}`, "step\tlambda\tgamma\ttau\tomega bound\tstable", ...rows].join("\n");
  });
