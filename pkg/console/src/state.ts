/**
 * Console view state and its pure reducer.
 *
 * renderEvent(state, message) -> state is the only way server messages
 * reach the view, so replaying the same message sequence always produces
 * the same state (headless-testable). Messages arriving out of sequence
 * order are dropped and counted, never rendered twice.
 */

import { TokenJson, WireMessage } from './protocol.js';

export type BubbleState = 'open' | 'closed' | 'interrupted';

export interface Bubble {
  speaker: 'user' | 'bot';
  text: string;
  units: number;
  state: BubbleState;
  turn?: number;
  gen?: number;
  silenceInitiated?: boolean;
  vote?: 'up' | 'down';
  voteTag?: string;
}

export interface LatencyPanel {
  turn: number;
  spans: Record<string, number>;
  boundSync: number;
  boundAsync: number;
}

export interface ChunkPanelEntry {
  index: number;
  tMs: number;
  nUnits: number;
  playbackStartMs: number;
  playbackEndMs: number;
}

export interface ConsoleState {
  connection: 'connected' | 'disconnected';
  pending: string;               // keystroke buffer (mirrored for display)
  transcript: Bubble[];
  phase: string;
  latency: LatencyPanel | null;
  chunkPlan: ChunkPanelEntry[] | null;
  lastSeq: number;
  dropped: number;
  errors: string[];
}

export function initialState(): ConsoleState {
  return {
    connection: 'disconnected',
    pending: '',
    transcript: [],
    phase: 'Idle',
    latency: null,
    chunkPlan: null,
    lastSeq: -1,
    dropped: 0,
    errors: [],
  };
}

function openBot(state: ConsoleState, info: Partial<Bubble>): ConsoleState {
  const bubble: Bubble = {
    speaker: 'bot', text: '', units: 0, state: 'open', ...info,
  };
  return { ...state, transcript: [...state.transcript, bubble] };
}

function updateLastBot(state: ConsoleState,
                       fn: (b: Bubble) => Bubble): ConsoleState {
  for (let i = state.transcript.length - 1; i >= 0; i--) {
    const bubble = state.transcript[i]!;
    if (bubble.speaker === 'bot') {
      const transcript = state.transcript.slice();
      transcript[i] = fn(bubble);
      return { ...state, transcript };
    }
  }
  return state;
}

function lastOpenBotGen(state: ConsoleState): number | undefined {
  for (let i = state.transcript.length - 1; i >= 0; i--) {
    const bubble = state.transcript[i]!;
    if (bubble.speaker === 'bot' && bubble.state === 'open') return bubble.gen;
  }
  return undefined;
}

/** Record locally-sent user content (the server does not echo it). */
export function applyLocalSend(state: ConsoleState, text: string): ConsoleState {
  const last = state.transcript[state.transcript.length - 1];
  if (last && last.speaker === 'user' && last.state === 'open') {
    const transcript = state.transcript.slice();
    transcript[transcript.length - 1] = { ...last, text: last.text + text };
    return { ...state, transcript };
  }
  const bubble: Bubble = { speaker: 'user', text, units: 0, state: 'open' };
  return { ...state, transcript: [...state.transcript, bubble] };
}

export function renderEvent(state: ConsoleState,
                            msg: WireMessage): ConsoleState {
  if (msg.seq <= state.lastSeq) {
    return { ...state, dropped: state.dropped + 1 };
  }
  state = { ...state, lastSeq: msg.seq };

  switch (msg.kind) {
    case 'bot_token': {
      const token = msg.payload['token'] as TokenJson;
      const gen = msg.payload['gen'] as number;
      const turn = msg.payload['turn'] as number;
      if (lastOpenBotGen(state) !== gen) {
        state = openBot(state, { gen, turn });
      }
      return updateLastBot(state, (b) => {
        if (token.type === 'text') {
          return { ...b, text: b.text + (token.surface ?? '') };
        }
        if (token.type === 'unit') {
          return { ...b, units: b.units + 1 };
        }
        if (token.type === 'eot') {
          return { ...b, state: 'closed' };
        }
        return b;
      });
    }
    case 'bot_text':
      return updateLastBot(state, (b) => ({
        ...b, text: (msg.payload['text'] as string) ?? b.text,
      }));
    case 'eot_detected': {
      // the user's turn is complete; close the open user bubble
      const transcript = state.transcript.map((b) =>
        b.speaker === 'user' && b.state === 'open'
          ? { ...b, state: 'closed' as BubbleState } : b);
      return { ...state, transcript };
    }
    case 'interrupt_ack': {
      const gen = msg.payload['cancelled_gen'] as number;
      const transcript = state.transcript.map((b) =>
        b.speaker === 'bot' && b.gen === gen && b.state === 'open'
          ? { ...b, state: 'interrupted' as BubbleState } : b);
      return { ...state, transcript };
    }
    case 'bot_initiate':
      return openBot(state, {
        gen: msg.payload['gen'] as number,
        turn: msg.payload['turn'] as number,
        silenceInitiated: true,
      });
    case 'state_update':
      return { ...state, phase: (msg.payload['phase'] as string) ?? state.phase };
    case 'latency_report':
      return {
        ...state,
        latency: {
          turn: msg.payload['turn'] as number,
          spans: msg.payload['spans'] as Record<string, number>,
          boundSync: msg.payload['bound_sync'] as number,
          boundAsync: msg.payload['bound_async'] as number,
        },
      };
    case 'chunk_plan': {
      const entries = (msg.payload['entries'] as Array<Record<string, number>>)
        .map((e) => ({
          index: e['index']!, tMs: e['t_ms']!, nUnits: e['n_units']!,
          playbackStartMs: e['playback_start_ms']!,
          playbackEndMs: e['playback_end_ms']!,
        }));
      return { ...state, chunkPlan: entries };
    }
    case 'bot_audio_ref':
      return state; // symbolic audio: duration only, nothing to play
    case 'error':
      return {
        ...state,
        errors: [...state.errors, String(msg.payload['message'] ?? 'error')],
      };
    default:
      return state;
  }
}

/** A vote on a bot turn, sent back as a feedback record. */
export function voteRecord(turn: number, vote: 'up' | 'down',
                           tag?: 'quality' | 'flow' | 'completion') {
  return tag === undefined ? { turn, vote } : { turn, vote, tag };
}

export function applyVote(state: ConsoleState, turn: number,
                          vote: 'up' | 'down', tag?: string): ConsoleState {
  const transcript = state.transcript.map((b) =>
    b.speaker === 'bot' && b.turn === turn
      ? { ...b, vote, voteTag: tag } : b);
  return { ...state, transcript };
}
