/** Wire types of the simulation service. */

export type ValueJson =
  | number
  | boolean
  | string
  | ValueJson[]
  | { [field: string]: ValueJson };

export interface AddressEntry {
  address: number;
  name: string;
}

export interface FlatPlace {
  id: string;
  name: string;
  kind: "multiset" | "queuing";
  area: number;
  compoundLabel: string | null;
  discipline: string | null;
}

export interface FlatTransition {
  id: string;
  name: string;
  area: number;
}

export interface FlatArc {
  id: string;
  source: string;
  target: string;
  category: string;
  inscription: string | null;
}

export interface FlatNet {
  addressSpace: AddressEntry[];
  places: FlatPlace[];
  transitions: FlatTransition[];
  arcs: FlatArc[];
}

export interface QueuingMarking {
  kind: "queuing";
  queue: ValueJson[];
  depository: [ValueJson, number][];
}

export interface MultisetMarking {
  kind: "multiset";
  tokens: [ValueJson, number][];
}

export type PlaceMarking = QueuingMarking | MultisetMarking;

export interface StateBody {
  hash: string;
  step: number;
  places: Record<string, PlaceMarking>;
  memories: Record<string, ValueJson>;
}

export interface SelectionBody {
  arc: string;
  tokens: ValueJson[];
  readonly: boolean;
}

export interface CandidateBody {
  index: number;
  transition: string;
  transitionName: string;
  area: number;
  binding: Record<string, ValueJson>;
  picks: Record<string, ValueJson>;
  selections: SelectionBody[];
  key: string;
}

export interface EnabledBody {
  stateHash: string;
  candidates: CandidateBody[];
}

export interface TraceEvent {
  label: string;
  fields: ValueJson;
}

export interface TraceStepBody {
  step: number;
  transition: string;
  binding: Record<string, ValueJson>;
  picks: Record<string, ValueJson>;
  preHash: string;
  postHash: string;
  events: TraceEvent[];
}

export interface TraceBody {
  initialHash: string;
  steps: TraceStepBody[];
}

/** Compact one-line rendering of a token value. */
export function shortValue(v: ValueJson): string {
  if (Array.isArray(v)) {
    return "(" + v.map(shortValue).join(",") + ")";
  }
  if (typeof v === "object" && v !== null) {
    if ("$opaque" in v) {
      return "opaque";
    }
    const fields = Object.keys(v).sort();
    return "{" + fields.map((f) => `${f}=${shortValue(v[f])}`).join(",") + "}";
  }
  if (v === true) return "true";
  if (v === false) return "false";
  return String(v);
}
