import init, { build_surface, export_obj, timescale_points } from "./pkg/ksurf_wasm.js";

const $ = (id) => document.getElementById(id);

const state = {
  mesh: null,       // { positions, normals, quads, rows, cols }
  report: null,
  yaw: 0.6,
  pitch: -0.45,
  zoom: 1.0,
  center: [0, 0, 0],
  radius: 1.0,
};

function familySpecs(family) {
  switch (family) {
    case "uniform":
      return [
        { kind: "uniform", t0: -1.5, step: 0.0625, n: 48 },
        { kind: "uniform", t0: -1.5, step: 0.0625, n: 48 },
      ];
    case "cantor":
      return [
        { kind: "cantor", level: 5, a: 0.0, b: 1.0 },
        { kind: "uniform", t0: -1.5, step: 0.0625, n: 48 },
      ];
    case "interval":
      return [
        { kind: "interval", a: -1.0, b: 1.0, n: 120 },
        { kind: "interval", a: -1.0, b: 1.0, n: 40 },
      ];
    case "union":
      return [
        {
          kind: "union",
          parts: [
            { kind: "interval", a: -1.0, b: 0.0, n: 25 },
            { kind: "uniform", t0: 0.0, step: 0.125, n: 9 },
          ],
        },
        { kind: "uniform", t0: -1.5, step: 0.0625, n: 48 },
      ];
  }
}

function currentConfig() {
  const [t1, t2] = familySpecs($("family").value);
  const darboux = [
    { kappa: Number($("kappa").value), phases: [0.25, Number($("phase").value)] },
  ];
  if ($("twoStep").checked) {
    darboux.push({ kappa: 0.6, phases: [0.9, 2.4] });
  }
  return {
    timescale1: t1,
    timescale2: t2,
    lambda: Number($("lambda").value),
    seed: "vacuum",
    darboux,
  };
}

function rebuild() {
  const config = currentConfig();
  $("lambdaVal").textContent = config.lambda.toFixed(2);
  $("kappaVal").textContent = config.darboux[0].kappa.toFixed(2);
  $("phaseVal").textContent = config.darboux[0].phases[1].toFixed(2);
  $("error").textContent = "";
  let mesh;
  try {
    mesh = build_surface(JSON.stringify(config));
  } catch (e) {
    $("error").textContent = String(e);
    return;
  }
  const rows = mesh.rows(), cols = mesh.cols();
  state.mesh = {
    rows, cols,
    positions: mesh.positions(),
    normals: mesh.normals(),
    quads: mesh.quads(),
  };
  state.report = JSON.parse(mesh.report_json());
  fitView();
  drawScaleStrip(config.timescale1);
  renderStats();
  render();
}

function fitView() {
  const p = state.mesh.positions;
  const lo = [Infinity, Infinity, Infinity], hi = [-Infinity, -Infinity, -Infinity];
  for (let i = 0; i < p.length; i += 3) {
    for (let k = 0; k < 3; k++) {
      lo[k] = Math.min(lo[k], p[i + k]);
      hi[k] = Math.max(hi[k], p[i + k]);
    }
  }
  state.center = [(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2];
  state.radius = Math.max(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) / 2 || 1;
}

function renderStats() {
  const r = state.report;
  const s = r.surfaces[r.surfaces.length - 1];
  const fmt = (x) => (x === 0 ? "0" : x.toExponential(1));
  const badge = r.pass
    ? '<span class="pass">all checks pass</span>'
    : '<span class="fail">CHECK FAILED</span>';
  $("stats").innerHTML = `
    <table>
      <tr><td>K expected</td><td>${s.K_expected.toFixed(4)}</td></tr>
      <tr><td>max |K error|</td><td>${fmt(s.K_max_abs_err)}</td></tr>
      <tr><td>asymptotic residual</td><td>${fmt(Math.max(...s.asym))}</td></tr>
      <tr><td>Chebyshev residual</td><td>${fmt(Math.max(...s.cheb))}</td></tr>
      <tr><td>tet vs dot curvature</td><td>${fmt(s.tet_vs_dot_max_rel)}</td></tr>
      ${s.segment ? `<tr><td>segment length</td><td>${s.segment.expected_length.toFixed(4)}</td></tr>` : ""}
      <tr><td>degenerate nodes</td><td>${s.degenerate_nodes}</td></tr>
      <tr><td colspan="2" style="padding-top:6px">${badge}</td></tr>
    </table>`;
}

function drawScaleStrip(spec) {
  const canvas = $("scaleStrip");
  const ctx = canvas.getContext("2d");
  const w = (canvas.width = canvas.clientWidth * devicePixelRatio);
  const h = (canvas.height = canvas.clientHeight * devicePixelRatio);
  ctx.clearRect(0, 0, w, h);
  let pts;
  try {
    pts = timescale_points(JSON.stringify(spec));
  } catch {
    return;
  }
  const lo = pts[0], hi = pts[pts.length - 1];
  const pad = 10 * devicePixelRatio;
  ctx.strokeStyle = "#33404f";
  ctx.beginPath();
  ctx.moveTo(pad, h / 2);
  ctx.lineTo(w - pad, h / 2);
  ctx.stroke();
  ctx.fillStyle = "#5ec8f2";
  for (const t of pts) {
    const x = pad + ((t - lo) / (hi - lo)) * (w - 2 * pad);
    ctx.fillRect(x - devicePixelRatio, h / 2 - 8 * devicePixelRatio, 2 * devicePixelRatio, 16 * devicePixelRatio);
  }
  ctx.fillStyle = "#8a94a6";
  ctx.font = `${10 * devicePixelRatio}px system-ui`;
  ctx.fillText(`t1 scale: ${pts.length} points`, pad, h - 4 * devicePixelRatio);
}

function rotation() {
  const cy = Math.cos(state.yaw), sy = Math.sin(state.yaw);
  const cp = Math.cos(state.pitch), sp = Math.sin(state.pitch);
  // yaw about y, then pitch about x
  return [
    [cy, 0, sy],
    [sy * sp, cp, -cy * sp],
    [-sy * cp, sp, cy * cp],
  ];
}

function render() {
  const canvas = $("view");
  const ctx = canvas.getContext("2d");
  const w = (canvas.width = canvas.clientWidth * devicePixelRatio);
  const h = (canvas.height = canvas.clientHeight * devicePixelRatio);
  ctx.clearRect(0, 0, w, h);
  if (!state.mesh) return;

  const { positions, normals, quads } = state.mesh;
  const R = rotation();
  const scale = (Math.min(w, h) / (2.6 * state.radius)) * state.zoom;
  const cx = w / 2, cy2 = h / 2;
  const n = positions.length / 3;
  const proj = new Float64Array(n * 3);
  for (let i = 0; i < n; i++) {
    const x = positions[3 * i] - state.center[0];
    const y = positions[3 * i + 1] - state.center[1];
    const z = positions[3 * i + 2] - state.center[2];
    proj[3 * i] = cx + scale * (R[0][0] * x + R[0][1] * y + R[0][2] * z);
    proj[3 * i + 1] = cy2 - scale * (R[1][0] * x + R[1][1] * y + R[1][2] * z);
    proj[3 * i + 2] = R[2][0] * x + R[2][1] * y + R[2][2] * z;
  }

  const wire = $("wireframe").checked;
  const nq = quads.length / 4;
  const order = new Array(nq);
  const depth = new Float64Array(nq);
  for (let q = 0; q < nq; q++) {
    order[q] = q;
    depth[q] =
      proj[3 * quads[4 * q] + 2] + proj[3 * quads[4 * q + 1] + 2] +
      proj[3 * quads[4 * q + 2] + 2] + proj[3 * quads[4 * q + 3] + 2];
  }
  order.sort((a, b) => depth[a] - depth[b]);

  const light = [0.37, 0.62, 0.69];
  for (const q of order) {
    const [a, b, c, d] = [quads[4 * q], quads[4 * q + 1], quads[4 * q + 2], quads[4 * q + 3]];
    // averaged node normal, rotated into view space
    let nx = 0, ny = 0, nz = 0;
    for (const v of [a, b, c, d]) {
      nx += normals[3 * v]; ny += normals[3 * v + 1]; nz += normals[3 * v + 2];
    }
    const vn = [
      R[0][0] * nx + R[0][1] * ny + R[0][2] * nz,
      R[1][0] * nx + R[1][1] * ny + R[1][2] * nz,
      R[2][0] * nx + R[2][1] * ny + R[2][2] * nz,
    ];
    const len = Math.hypot(...vn) || 1;
    const lambert = Math.abs((vn[0] * light[0] + vn[1] * light[1] + vn[2] * light[2]) / len);
    const shade = 35 + 160 * lambert;
    ctx.beginPath();
    ctx.moveTo(proj[3 * a], proj[3 * a + 1]);
    ctx.lineTo(proj[3 * b], proj[3 * b + 1]);
    ctx.lineTo(proj[3 * c], proj[3 * c + 1]);
    ctx.lineTo(proj[3 * d], proj[3 * d + 1]);
    ctx.closePath();
    if (wire) {
      ctx.strokeStyle = `rgb(${40 + shade * 0.4}, ${90 + shade * 0.6}, ${120 + shade * 0.7})`;
      ctx.stroke();
    } else {
      ctx.fillStyle = `rgb(${shade * 0.45}, ${shade * 0.8}, ${shade})`;
      ctx.fill();
      ctx.strokeStyle = "rgba(10, 14, 20, 0.35)";
      ctx.lineWidth = devicePixelRatio * 0.5;
      ctx.stroke();
    }
  }
}

function wireEvents() {
  const canvas = $("view");
  let dragging = false, last = [0, 0];
  canvas.addEventListener("pointerdown", (e) => {
    dragging = true;
    last = [e.clientX, e.clientY];
    canvas.setPointerCapture(e.pointerId);
  });
  canvas.addEventListener("pointermove", (e) => {
    if (!dragging) return;
    state.yaw += (e.clientX - last[0]) * 0.008;
    state.pitch += (e.clientY - last[1]) * 0.008;
    state.pitch = Math.max(-1.5, Math.min(1.5, state.pitch));
    last = [e.clientX, e.clientY];
    render();
  });
  canvas.addEventListener("pointerup", () => (dragging = false));
  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    state.zoom *= Math.exp(-e.deltaY * 0.001);
    state.zoom = Math.max(0.2, Math.min(8, state.zoom));
    render();
  }, { passive: false });

  let timer = null;
  const debounced = () => {
    clearTimeout(timer);
    timer = setTimeout(rebuild, 120);
  };
  for (const id of ["family", "lambda", "kappa", "phase", "twoStep"]) {
    $(id).addEventListener("input", debounced);
  }
  $("wireframe").addEventListener("input", render);
  window.addEventListener("resize", () => {
    drawScaleStrip(currentConfig().timescale1);
    render();
  });

  $("download").addEventListener("click", () => {
    try {
      const text = export_obj(JSON.stringify(currentConfig()));
      const blob = new Blob([text], { type: "model/obj" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "pseudospherical-net.obj";
      a.click();
      URL.revokeObjectURL(a.href);
    } catch (e) {
      $("error").textContent = String(e);
    }
  });
  $("showReport").addEventListener("click", () => {
    if (!state.report) return;
    const blob = new Blob([JSON.stringify(state.report, null, 2)], { type: "application/json" });
    window.open(URL.createObjectURL(blob), "_blank");
  });
}

init().then(() => {
  wireEvents();
  rebuild();
}).catch((e) => {
  $("stats").textContent = "failed to load wasm module";
  $("error").textContent = String(e);
});
