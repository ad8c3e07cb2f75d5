import init, { compose_preview, labelwise_curves, evaluate_text } from "./pkg/mlpc_demo.js";

const $ = (id) => document.getElementById(id);

function show(el, fn) {
  try {
    el.classList.remove("error");
    fn();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e.message ?? e);
  }
}

function compose() {
  show($("manifest"), () => {
    const [k, p] = $("grid").value.split(":").map(Number);
    const preview = compose_preview(
      BigInt($("seed").value), k, p, 512, Number($("index").value), 2000, 1000, $("distinct").checked,
    );
    const data = new ImageData(new Uint8ClampedArray(preview.rgba), preview.size, preview.size);
    $("canvas").getContext("2d").putImageData(data, 0, 0);
    $("manifest").textContent = preview.manifest;
    preview.free();
  });
}

const MODES = [["literal_hamming", "#1f77b4"], ["jaccard", "#ff7f0e"], ["recall", "#2ca02c"]];

function curves() {
  const table = $("table");
  show(table, () => {
    const rows = JSON.parse(labelwise_curves(Number($("classes").value), Number($("labels").value)));
    table.innerHTML = "<tr><th>m</th>" + MODES.map(([m]) => `<th>${m}</th>`).join("") + "</tr>" +
      rows.map((r) => `<tr><td>${r.mistakes}</td>` +
        MODES.map(([m]) => `<td>${r[m].toFixed(4)}</td>`).join("") + "</tr>").join("");
    const w = 420, h = 260, pad = 30;
    const x = (m) => pad + (m / Math.max(1, rows.length - 1)) * (w - 2 * pad);
    const y = (v) => h - pad - v * (h - 2 * pad);
    let svg = `<line x1="${pad}" y1="${h - pad}" x2="${w - pad}" y2="${h - pad}" stroke="#000"/>` +
      `<line x1="${pad}" y1="${pad}" x2="${pad}" y2="${h - pad}" stroke="#000"/>` +
      `<text x="${w / 2}" y="${h - 5}" text-anchor="middle" font-size="11">mistakes m</text>`;
    MODES.forEach(([mode, color], i) => {
      const pts = rows.map((r) => `${x(r.mistakes)},${y(r[mode])}`).join(" ");
      svg += `<polyline fill="none" stroke="${color}" stroke-width="2" points="${pts}"/>` +
        `<text x="${w - pad - 110}" y="${pad + 14 * i}" fill="${color}" font-size="11">${mode}</text>`;
    });
    $("plot").innerHTML = svg;
  });
}

function evaluate() {
  show($("report"), () => {
    const report = evaluate_text($("preds").value, $("anns").value, $("mode").value);
    $("report").textContent = JSON.stringify(JSON.parse(report), null, 2);
  });
}

await init();
$("compose").onclick = compose;
$("curves").onclick = curves;
$("evaluate").onclick = evaluate;
compose();
curves();
evaluate();
