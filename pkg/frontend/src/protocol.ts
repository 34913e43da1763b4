/**
 * Bridge protocol: typed views of the JSON events streamed on /bridge.
 *
 * Mirrors docs/bridge_schema.json in the repository root. Unknown event
 * types are surfaced as `unknown` (displayed raw, never dropped); anything
 * that fails validation becomes `malformed`.
 */

export interface TraceEvent {
  type: "trace";
  seq: number;
  tick: number;
  disposition: "delivered" | "broadcast" | "dead_letter";
  message: string;
}

export interface LastMove {
  speaker: string;
  act: string;
}

export interface StateEvent {
  type: "state";
  qud: string[];
  common_ground: string[];
  last_move: LastMove | null;
  agenda: string[];
}

export interface HypothesisRow {
  act: string;
  score: number;
  span_coverage?: number;
  utterance_coverage?: number;
  module: string;
  span?: [number, number];
}

export interface NBestEvent {
  type: "nbest";
  utterance: string;
  hypotheses: HypothesisRow[];
}

export interface SystemMoveEvent {
  type: "system_move";
  act: string;
}

export type BridgeEvent = TraceEvent | StateEvent | NBestEvent | SystemMoveEvent;

export type ParsedEvent =
  | { kind: "event"; event: BridgeEvent }
  | { kind: "unknown"; raw: unknown }
  | { kind: "malformed"; raw: string; reason: string };

const DISPOSITIONS = new Set(["delivered", "broadcast", "dead_letter"]);

function isStringArray(x: unknown): x is string[] {
  return Array.isArray(x) && x.every((v) => typeof v === "string");
}

function validate(obj: Record<string, unknown>): BridgeEvent | string {
  switch (obj.type) {
    case "trace": {
      if (
        typeof obj.seq === "number" &&
        typeof obj.tick === "number" &&
        typeof obj.disposition === "string" &&
        DISPOSITIONS.has(obj.disposition) &&
        typeof obj.message === "string"
      ) {
        return obj as unknown as TraceEvent;
      }
      return "bad trace fields";
    }
    case "state": {
      const lm = obj.last_move;
      const lastMoveOk =
        lm === null ||
        (typeof lm === "object" &&
          lm !== null &&
          typeof (lm as LastMove).speaker === "string" &&
          typeof (lm as LastMove).act === "string");
      if (
        isStringArray(obj.qud) &&
        isStringArray(obj.common_ground) &&
        isStringArray(obj.agenda) &&
        lastMoveOk
      ) {
        return obj as unknown as StateEvent;
      }
      return "bad state fields";
    }
    case "nbest": {
      const hyps = obj.hypotheses;
      if (
        typeof obj.utterance === "string" &&
        Array.isArray(hyps) &&
        hyps.every(
          (h) =>
            typeof h === "object" &&
            h !== null &&
            typeof h.act === "string" &&
            typeof h.score === "number" &&
            typeof h.module === "string",
        )
      ) {
        return obj as unknown as NBestEvent;
      }
      return "bad nbest fields";
    }
    case "system_move": {
      if (typeof obj.act === "string") {
        return obj as unknown as SystemMoveEvent;
      }
      return "bad system_move fields";
    }
    default:
      return "unknown type";
  }
}

export function parseEvent(raw: string): ParsedEvent {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch (e) {
    return { kind: "malformed", raw, reason: "not JSON" };
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return { kind: "malformed", raw, reason: "not an object" };
  }
  const record = obj as Record<string, unknown>;
  if (typeof record.type !== "string") {
    return { kind: "malformed", raw, reason: "missing type" };
  }
  const result = validate(record);
  if (typeof result === "string") {
    if (result === "unknown type") {
      return { kind: "unknown", raw: obj };
    }
    return { kind: "malformed", raw, reason: result };
  }
  return { kind: "event", event: result };
}

/** Field extraction from one encoded message line, for the trace table. */
export interface WireSummary {
  performative: string;
  sender: string;
  receiver: string;
  contentType: string | null;
  content: string;
}

export function summarizeWire(message: string): WireSummary {
  const perf = /^\(\s*([a-z_]+)/.exec(message);
  const sender = /:sender\s+(\S+)/.exec(message);
  const receiver = /:receiver\s+(\S+)/.exec(message);
  const contentType = /:content-type\s+(\S+)/.exec(message);
  const content = /:content\s+(.*)\)\s*$/.exec(message);
  return {
    performative: perf ? perf[1] : "?",
    sender: sender ? sender[1] : "?",
    receiver: receiver ? receiver[1] : "*",
    contentType: contentType ? contentType[1] : null,
    content: content ? content[1] : "",
  };
}

/** The user's original text, when a trace line carries an utterance term. */
export function utteranceText(message: string): string | null {
  const m = /:content\s+utterance\("((?:[^"\\]|\\.)*)"\)/.exec(message);
  if (!m) {
    return null;
  }
  return m[1].replace(/\\(["\\])/g, "$1");
}
