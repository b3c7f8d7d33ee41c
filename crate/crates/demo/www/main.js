import init, { project, delta_step, toy } from "./pkg/dsvm_demo.js";

const $ = (id) => document.getElementById(id);

function setupProjection() {
  const canvas = $("proj");
  const ctx = canvas.getContext("2d");
  // plane coordinates in [-0.5, 1.5]
  const toPx = (x, y) => [(x + 0.5) / 2 * canvas.width, (1.5 - y) / 2 * canvas.height];
  const fromPx = (px, py) => [px / canvas.width * 2 - 0.5, 1.5 - py / canvas.height * 2];
  let point = [1.0, 0.8];

  function draw() {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.strokeStyle = "#ddd";
    ctx.beginPath();
    ctx.moveTo(...toPx(-0.5, 0)); ctx.lineTo(...toPx(1.5, 0));
    ctx.moveTo(...toPx(0, -0.5)); ctx.lineTo(...toPx(0, 1.5));
    ctx.stroke();
    ctx.fillStyle = "rgba(60,120,200,0.15)";
    ctx.beginPath();
    ctx.moveTo(...toPx(0, 0)); ctx.lineTo(...toPx(1, 0)); ctx.lineTo(...toPx(0, 1));
    ctx.closePath(); ctx.fill();
    const p = project(new Float64Array(point));
    ctx.strokeStyle = "#888";
    ctx.setLineDash([4, 4]);
    ctx.beginPath(); ctx.moveTo(...toPx(...point)); ctx.lineTo(...toPx(p[0], p[1])); ctx.stroke();
    ctx.setLineDash([]);
    dot(ctx, toPx(...point), "#c33");
    dot(ctx, toPx(p[0], p[1]), "#36c");
    $("proj-out").textContent =
      `v = (${point[0].toFixed(3)}, ${point[1].toFixed(3)})  →  (${p[0].toFixed(4)}, ${p[1].toFixed(4)})`;
  }

  let dragging = false;
  const move = (e) => {
    const r = canvas.getBoundingClientRect();
    point = fromPx(e.clientX - r.left, e.clientY - r.top);
    draw();
  };
  canvas.addEventListener("mousedown", (e) => { dragging = true; move(e); });
  canvas.addEventListener("mousemove", (e) => { if (dragging) move(e); });
  window.addEventListener("mouseup", () => { dragging = false; });
  draw();
}

function dot(ctx, [x, y], color) {
  ctx.fillStyle = color;
  ctx.beginPath(); ctx.arc(x, y, 5, 0, 2 * Math.PI); ctx.fill();
}

function setupCubic() {
  const canvas = $("cubic");
  const ctx = canvas.getContext("2d");
  const ids = ["wsq", "c", "l2", "nu"];

  function draw() {
    const [wsq, c, l2, nu] = ids.map((id) => parseFloat($(id).value));
    let root;
    try {
      root = delta_step(wsq, c, l2, nu);
    } catch (e) {
      $("cubic-out").innerHTML = `<span class="err">${e}</span>`;
      return;
    }
    const f = (d) => l2 * wsq / d + nu * (d - c) ** 2;
    const dMax = Math.max(2 * root, c + 1, 1);
    const xs = Array.from({ length: 400 }, (_, i) => dMax * (i + 1) / 400);
    const ys = xs.map(f);
    const yMin = f(root);
    const yMax = Math.min(Math.max(...ys), yMin + 4 * (f(dMax) - yMin) + 1e-9);
    const px = (d) => d / dMax * canvas.width;
    const py = (v) => canvas.height - 10 - (Math.min(v, yMax) - yMin) / (yMax - yMin || 1) * (canvas.height - 20);

    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.strokeStyle = "#36c";
    ctx.beginPath();
    xs.forEach((d, i) => (i ? ctx.lineTo(px(d), py(ys[i])) : ctx.moveTo(px(d), py(ys[i]))));
    ctx.stroke();
    ctx.strokeStyle = "#ccc";
    ctx.beginPath(); ctx.moveTo(px(c), 0); ctx.lineTo(px(c), canvas.height); ctx.stroke();
    dot(ctx, [px(root), py(yMin)], "#c33");
    $("cubic-out").textContent =
      `w² = ${wsq}, c = ${c}, λ₂ = ${l2}, ν = ${nu}  →  δ = ${root.toFixed(6)} (grey line: c)`;
  }

  ids.forEach((id) => $(id).addEventListener("input", draw));
  draw();
}

function drawTask(task, size) {
  const canvas = document.createElement("canvas");
  canvas.width = canvas.height = size;
  const ctx = canvas.getContext("2d");
  const span = 3.5;
  const toPx = (x, y) => [(x + span) / (2 * span) * size, (span - y) / (2 * span) * size];
  ctx.strokeStyle = "#eee";
  ctx.beginPath();
  ctx.moveTo(...toPx(-span, 0)); ctx.lineTo(...toPx(span, 0));
  ctx.moveTo(...toPx(0, -span)); ctx.lineTo(...toPx(0, span));
  ctx.stroke();
  task.x.forEach(([a, b], i) => {
    ctx.fillStyle = task.y[i] > 0 ? "#c33" : "#36c";
    ctx.beginPath(); ctx.arc(...toPx(a, b), 3.5, 0, 2 * Math.PI); ctx.fill();
  });
  const line = ({ w, b }, dashed) => {
    // w·x + b = 0 clipped to the box
    const pts = [];
    if (Math.abs(w[1]) > 1e-12) {
      for (const x of [-span, span]) pts.push([x, -(w[0] * x + b) / w[1]]);
    } else if (Math.abs(w[0]) > 1e-12) {
      for (const y of [-span, span]) pts.push([-b / w[0], y]);
    } else {
      return;
    }
    ctx.strokeStyle = "#222";
    ctx.setLineDash(dashed ? [5, 4] : []);
    ctx.beginPath(); ctx.moveTo(...toPx(...pts[0])); ctx.lineTo(...toPx(...pts[1])); ctx.stroke();
    ctx.setLineDash([]);
  };
  line(task.svm, true);
  line(task.dsvm, false);
  return canvas;
}

function setupToy() {
  function run() {
    const seed = parseInt($("seed").value, 10) >>> 0;
    const tasks = parseInt($("tasks").value, 10);
    const ntrain = parseInt($("ntrain").value, 10);
    const gamma = parseFloat($("gamma").value);
    let result;
    try {
      result = JSON.parse(toy(seed, tasks, ntrain, gamma));
    } catch (e) {
      $("toy-out").innerHTML = `<span class="err">${e}</span>`;
      return;
    }
    $("toy-out").textContent =
      `held-out accuracy: independent SVM ${result.svm_accuracy.toFixed(1)}%, shared dictionary ${result.dsvm_accuracy.toFixed(1)}%`;
    const grid = $("toy-grid");
    grid.replaceChildren();
    result.tasks.forEach((t, i) => {
      const fig = document.createElement("figure");
      fig.appendChild(drawTask(t, 170));
      const cap = document.createElement("figcaption");
      cap.textContent = `task ${i}: ${t.svm.accuracy.toFixed(0)}% → ${t.dsvm.accuracy.toFixed(0)}%, δ = (${t.delta.map((d) => d.toExponential(1)).join(", ")})`;
      fig.appendChild(cap);
      grid.appendChild(fig);
    });
  }
  $("fit").addEventListener("click", run);
  run();
}

init().then(() => {
  $("status").textContent = "";
  setupProjection();
  setupCubic();
  setupToy();
}).catch((e) => {
  $("status").innerHTML = `<span class="err">Failed to load: ${e}</span>`;
});
