import { layoutNet } from "./layout.js";
import type {
  CandidateBody,
  FlatNet,
  PlaceMarking,
  StateBody,
  TraceBody,
  ValueJson,
} from "./model.js";
import { shortValue } from "./model.js";

const PLACE_R = 20;
const TRANS_W = 46;
const TRANS_H = 26;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Queue drawn in order with the head marked by angle brackets, then the
 * depository (the part transitions can see).
 */
export function queueLabel(marking: PlaceMarking): string {
  if (marking.kind === "multiset") {
    return marking.tokens
      .map(([v, c]) => (c > 1 ? `${shortValue(v)}x${c}` : shortValue(v)))
      .join(" ");
  }
  const queue = marking.queue.map((v, i) =>
    i === 0 ? `<${shortValue(v)}>` : shortValue(v),
  );
  const dep = marking.depository
    .map(([v, c]) => (c > 1 ? `${shortValue(v)}x${c}` : shortValue(v)))
    .join(" ");
  const parts = [];
  if (queue.length) parts.push("q: " + queue.join(" "));
  if (dep) parts.push("d: " + dep);
  return parts.join("  ");
}

export interface Highlight {
  transition: string | null;
  places: Set<string>;
}

export function candidateHighlight(c: CandidateBody | null, net: FlatNet): Highlight {
  if (!c) return { transition: null, places: new Set() };
  const placeOfArc = new Map<string, string>();
  for (const arc of net.arcs) {
    placeOfArc.set(arc.id, arc.source);
  }
  const places = new Set<string>();
  for (const sel of c.selections) {
    const place = placeOfArc.get(sel.arc);
    if (place) places.add(place);
  }
  return { transition: c.transition, places };
}

/** Whole net as an SVG document fragment. */
export function renderNet(
  net: FlatNet,
  state: StateBody | null,
  highlight: Highlight,
): string {
  const layout = layoutNet(net);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${layout.width} ` +
      `${layout.height}" width="${layout.width}" height="${layout.height}">`,
  );
  parts.push(
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ` +
      `markerWidth="7" markerHeight="7" orient="auto-start-reverse">` +
      `<path d="M 0 0 L 10 5 L 0 10 z" fill="#555"/></marker></defs>`,
  );
  for (const panel of layout.panels) {
    parts.push(
      `<g class="panel"><rect x="${panel.x}" y="${panel.y}" ` +
        `width="${panel.width}" height="${panel.height}" rx="8" ` +
        `class="panel-frame"/>` +
        `<text x="${panel.x + 10}" y="${panel.y + 16}" class="panel-title">` +
        `${esc(panel.name)}</text></g>`,
    );
  }
  const kinds = new Map(net.places.map((p) => [p.id, p.kind] as const));
  for (const arc of net.arcs) {
    const a = layout.positions.get(arc.source);
    const b = layout.positions.get(arc.target);
    if (!a || !b) continue;
    const double = arc.category.startsWith("qin-double");
    const readonly = arc.category.endsWith("-ro");
    const classes = ["arc"];
    if (arc.inscription && arc.inscription.startsWith("[")) classes.push("cond");
    if (readonly) classes.push("readonly");
    parts.push(
      `<line x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" ` +
        `class="${classes.join(" ")}" marker-end="url(#arrow)"` +
        `${double ? ' stroke-width="2.4"' : ""}/>`,
    );
  }
  for (const [id, pos] of layout.positions) {
    const kind = kinds.get(id);
    const marking = state?.places[id];
    if (kind) {
      const queuing = kind === "queuing";
      const selected = highlight.places.has(id);
      const place = net.places.find((p) => p.id === id)!;
      parts.push(
        `<g class="place${selected ? " selected" : ""}" data-id="${esc(id)}">` +
          `<ellipse cx="${pos.x}" cy="${pos.y}" rx="${PLACE_R + 6}" ` +
          `ry="${PLACE_R}" class="${queuing ? "queuing" : "multiset"}"/>` +
          `<text x="${pos.x}" y="${pos.y - PLACE_R - 4}" class="name">` +
          esc(place.name) +
          (place.compoundLabel ? ` [${esc(place.compoundLabel)}]` : "") +
          `</text>` +
          (marking
            ? `<text x="${pos.x}" y="${pos.y + PLACE_R + 12}" class="tokens">` +
              esc(queueLabel(marking)) +
              `</text>`
            : "") +
          `</g>`,
      );
    } else {
      const selected = highlight.transition === id;
      const t = net.transitions.find((x) => x.id === id)!;
      parts.push(
        `<g class="transition${selected ? " selected" : ""}" data-id="${esc(id)}">` +
          `<rect x="${pos.x - TRANS_W / 2}" y="${pos.y - TRANS_H / 2}" ` +
          `width="${TRANS_W}" height="${TRANS_H}" rx="3"/>` +
          `<text x="${pos.x}" y="${pos.y + 4}" class="tname">${esc(t.name)}</text>` +
          `</g>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("\n");
}

export function describeBinding(binding: Record<string, ValueJson>): string {
  const names = Object.keys(binding).sort();
  return names.map((n) => `${n} = ${shortValue(binding[n])}`).join(", ");
}

/** Candidate sidebar entries; the badge marks a nondeterministic choice. */
export function renderCandidates(
  candidates: CandidateBody[],
  selected: number | null,
): string {
  if (!candidates.length) {
    return `<p class="terminal">no enabled transitions &mdash; terminal state;` +
      ` download the trace below</p>`;
  }
  const badge =
    candidates.length > 1
      ? `<p class="badge">nondeterministic choice: ${candidates.length} candidates</p>`
      : "";
  const items = candidates
    .map((c) => {
      const cls = c.index === selected ? "candidate selected" : "candidate";
      const binding = describeBinding(c.binding);
      return (
        `<li class="${cls}" data-index="${c.index}">` +
        `<span class="cand-name">${esc(c.transitionName)}</span>` +
        `<span class="cand-area">area ${c.area}</span>` +
        (binding ? `<span class="cand-binding">${esc(binding)}</span>` : "") +
        `</li>`
      );
    })
    .join("");
  return `${badge}<ul class="candidates">${items}</ul>`;
}

/** Trace timeline with the event projection under each step. */
export function renderTrace(trace: TraceBody | null): string {
  if (!trace || !trace.steps.length) {
    return `<p class="empty">no steps fired yet</p>`;
  }
  const rows = trace.steps
    .map((s) => {
      const events = s.events
        .map((e) => `${e.label}(${shortValue(e.fields)})`)
        .join(" ");
      return (
        `<li><span class="step-no">${s.step}</span>` +
        `<span class="step-t">${esc(s.transition)}</span>` +
        (events ? `<span class="step-ev">${esc(events)}</span>` : "") +
        `</li>`
      );
    })
    .join("");
  return `<ol class="trace">${rows}</ol>`;
}

/** Trace as the JSON-lines file the command line can replay. */
export function traceToJsonl(trace: TraceBody): string {
  return trace.steps.map((s) => JSON.stringify(s)).join("\n") + "\n";
}
