import init, { Demo } from "./pkg/longbio_web.js";

const $ = (id) => document.getElementById(id);
let demo;
let current = null;

function sliderLabel(input, out, negative) {
  const v = Number(input.value);
  out.textContent = v < 0 ? negative : v.toFixed(2);
}

function drawMap(spans) {
  const map = $("map");
  map.replaceChildren();
  for (const s of spans) {
    const cell = document.createElement("div");
    cell.className = s.needle ? "needle" : s.forced_collision ? "forced" : "hay";
    cell.title = s.name;
    map.appendChild(cell);
  }
}

function build() {
  $("verdict").textContent = "";
  $("response").value = "";
  try {
    const view = JSON.parse(
      demo.generate(
        $("task").value,
        Number($("budget").value),
        Number($("depth").value),
        Number($("density").value),
        $("essay").checked,
        Number($("seed").value),
      ),
    );
    current = view.instance;
    drawMap(view.bio_spans);
    const ctx = current.context;
    $("summary").textContent =
      `${ctx.bios.length} bios, ${ctx.token_count} / ${ctx.token_budget} tokens, needles at bios ` +
      ctx.needle_indices.map((i) => i + 1).join(", ");
    $("question").textContent = current.questions.join(" ");
    $("context").textContent = ctx.text;
  } catch (e) {
    current = null;
    $("summary").textContent = String(e);
  }
}

function score() {
  if (!current) return;
  const rec = JSON.parse(demo.score(JSON.stringify(current), $("response").value));
  $("verdict").textContent = JSON.stringify(rec, null, 2);
}

await init();
demo = new Demo();
for (const [id, neg] of [["depth", "random"], ["density", "natural"]]) {
  $(id).addEventListener("input", () => sliderLabel($(id), $(id + "Out"), neg));
}
$("build").addEventListener("click", build);
$("score").addEventListener("click", score);
$("oracle").addEventListener("click", () => {
  if (current) $("response").value = demo.answer(JSON.stringify(current));
});
build();
