/**
 * Wire protocol: one UTF-8 JSON line per message, strictly increasing
 * per-direction sequence numbers. Mirrors the server's schema exactly;
 * the console never invents kinds.
 */

export const INBOUND_KINDS = [
  'user_text_chunk', 'user_audio_chunk', 'reset_command', 'feedback',
] as const;

export const OUTBOUND_KINDS = [
  'bot_token', 'bot_text', 'bot_audio_ref', 'eot_detected', 'interrupt_ack',
  'bot_initiate', 'state_update', 'latency_report', 'chunk_plan', 'error',
] as const;

export type InboundKind = typeof INBOUND_KINDS[number];
export type OutboundKind = typeof OUTBOUND_KINDS[number];
export type Kind = InboundKind | OutboundKind;

export const RESET_TEXT = '===';

export interface WireMessage {
  kind: Kind;
  t: number;
  seq: number;
  payload: Record<string, unknown>;
}

export interface TokenJson {
  type: 'text' | 'unit' | 'header' | 'eot';
  surface?: string;
  index?: number;
  speaker?: string;
}

const ALL_KINDS: ReadonlySet<string> =
  new Set([...INBOUND_KINDS, ...OUTBOUND_KINDS]);

export function encodeMessage(msg: WireMessage): string {
  return JSON.stringify({
    kind: msg.kind, t: msg.t, seq: msg.seq, payload: msg.payload,
  }) + '\n';
}

export function decodeMessage(line: string): WireMessage {
  const obj = JSON.parse(line.replace(/[\r\n]+$/, ''));
  if (typeof obj !== 'object' || obj === null) {
    throw new Error('wire message must be an object');
  }
  const { kind, t, seq } = obj as Record<string, unknown>;
  if (typeof kind !== 'string' || !ALL_KINDS.has(kind)) {
    throw new Error(`unknown message kind ${String(kind)}`);
  }
  if (typeof t !== 'number' || typeof seq !== 'number' || t < 0 || seq < 0) {
    throw new Error('t and seq must be non-negative numbers');
  }
  const payload = (obj as Record<string, unknown>).payload ?? {};
  if (typeof payload !== 'object' || payload === null) {
    throw new Error('payload must be an object');
  }
  return { kind: kind as Kind, t, seq, payload: payload as Record<string, unknown> };
}

export interface TraceEntry {
  direction: '>' | '<';
  message: WireMessage;
}

/** Parse a recorded trace file: `>|< <t_ms> <wire line>` per line. */
export function parseTrace(text: string): TraceEntry[] {
  const entries: TraceEntry[] = [];
  for (const raw of text.split('\n')) {
    if (!raw.trim()) continue;
    const direction = raw[0];
    if (direction !== '>' && direction !== '<') {
      throw new Error(`bad trace direction prefix: ${raw.slice(0, 8)}`);
    }
    const firstSpace = raw.indexOf(' ');
    const secondSpace = raw.indexOf(' ', firstSpace + 1);
    entries.push({
      direction,
      message: decodeMessage(raw.slice(secondSpace + 1)),
    });
  }
  return entries;
}
