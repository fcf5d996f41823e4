// Pure queue state. The server is the only authority: every transition
// here either mirrors a server acknowledgment or records a local draft
// that is explicitly flagged as unsent.

import type { Progress, QueueFilters, WarningCard } from "./api.js";

export interface Draft {
  card: WarningCard;
  verdict: "pass" | "fail";
  reason: string;
}

export interface AppState {
  cards: WarningCard[];
  index: number;
  progress: Progress | null;
  offline: boolean;
  drafts: Draft[];
  filters: QueueFilters;
}

export function initialState(): AppState {
  return { cards: [], index: 0, progress: null, offline: false, drafts: [], filters: {} };
}

export function cardKey(card: Pick<WarningCard, "run_id" | "item_id">): string {
  return `${card.run_id}/${card.item_id}`;
}

function clampIndex(index: number, length: number): number {
  if (length === 0) return 0;
  return Math.min(Math.max(index, 0), length - 1);
}

/** Replace the whole queue with the server view (a reload does exactly this). */
export function withQueue(state: AppState, cards: WarningCard[], progress: Progress): AppState {
  const currentKey = currentCard(state) ? cardKey(currentCard(state)!) : null;
  let index = cards.findIndex((c) => cardKey(c) === currentKey);
  if (index < 0) index = clampIndex(state.index, cards.length);
  return { ...state, cards: [...cards], index, progress };
}

export function currentCard(state: AppState): WarningCard | null {
  return state.cards[state.index] ?? null;
}

export function nextCard(state: AppState): AppState {
  return { ...state, index: clampIndex(state.index + 1, state.cards.length) };
}

export function prevCard(state: AppState): AppState {
  return { ...state, index: clampIndex(state.index - 1, state.cards.length) };
}

/** Drop one card after the server acknowledged its resolution. */
export function withoutCard(
  state: AppState,
  card: Pick<WarningCard, "run_id" | "item_id">,
  progress: Progress | null = null,
): AppState {
  const key = cardKey(card);
  const cards = state.cards.filter((c) => cardKey(c) !== key);
  return {
    ...state,
    cards,
    index: clampIndex(state.index, cards.length),
    progress: progress ?? state.progress,
  };
}

export function withOffline(state: AppState, offline: boolean): AppState {
  return { ...state, offline };
}

export function withFilters(state: AppState, filters: QueueFilters): AppState {
  return { ...state, filters: { ...filters }, index: 0 };
}

/** Keep an unsent verdict after a network failure; never auto-resubmitted. */
export function withDraft(state: AppState, draft: Draft): AppState {
  const others = state.drafts.filter((d) => cardKey(d.card) !== cardKey(draft.card));
  return { ...state, drafts: [...others, draft] };
}

export function withoutDraft(
  state: AppState,
  card: Pick<WarningCard, "run_id" | "item_id">,
): AppState {
  return { ...state, drafts: state.drafts.filter((d) => cardKey(d.card) !== cardKey(card)) };
}

export function draftFor(
  state: AppState,
  card: Pick<WarningCard, "run_id" | "item_id">,
): Draft | null {
  return state.drafts.find((d) => cardKey(d.card) === cardKey(card)) ?? null;
}
