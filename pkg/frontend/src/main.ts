import { ApiClient } from "./api.js";
import { AppCore, type ViewState } from "./app.js";
import {
  candidateHighlight,
  renderCandidates,
  renderNet,
  renderTrace,
  traceToJsonl,
} from "./render.js";

const POLL_MS = 2000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function draw(view: ViewState, app: AppCore) {
  el("loader").style.display = view.phase === "empty" ? "block" : "none";
  el("workbench").style.display = view.phase === "ready" ? "grid" : "none";
  el("toasts").innerHTML = view.toasts
    .map((t) => `<div class="toast">${t}</div>`)
    .join("");
  if (view.phase !== "ready" || !view.flat) return;

  const highlight = candidateHighlight(app.selectedCandidate(), view.flat);
  el("canvas").innerHTML = renderNet(view.flat, view.state, highlight);
  el("candidates").innerHTML = renderCandidates(view.candidates, view.selected);
  el("trace").innerHTML = renderTrace(view.trace);
  el("state-hash").textContent = view.state
    ? `step ${view.state.step} · ${view.state.hash.slice(0, 12)}`
    : "";

  for (const item of el("candidates").querySelectorAll<HTMLElement>(".candidate")) {
    const index = Number(item.dataset.index);
    item.addEventListener("click", () => {
      if (app.view.selected === index) {
        void app.fireSelected();
      } else {
        app.select(index);
      }
    });
  }
}

function download(name: string, text: string) {
  const blob = new Blob([text], { type: "application/jsonl" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

export function start() {
  const api = new ApiClient("");
  const app = new AppCore(api, (view) => draw(view, app));

  el("load-example").addEventListener("click", () => {
    const name = el<HTMLSelectElement>("example-name").value;
    const n = Number(el<HTMLInputElement>("example-n").value) || 3;
    void app.loadExample(name, n);
  });

  el<HTMLInputElement>("net-file").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const doc = JSON.parse(await file.text());
    void app.loadNetJson(doc);
  });

  el("fire").addEventListener("click", () => void app.fireSelected());
  el("undo").addEventListener("click", () => void app.undo());
  el("reset").addEventListener("click", () => void app.reset());
  el("export").addEventListener("click", async () => {
    const trace = await app.exportTrace();
    if (trace) download("trace.jsonl", traceToJsonl(trace));
  });

  setInterval(() => {
    if (app.view.phase === "ready") void app.refresh();
  }, POLL_MS);
}

start();
