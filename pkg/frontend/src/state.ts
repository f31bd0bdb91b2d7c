// View state and transitions for the triage page. Pure data + guard logic;
// no DOM access here so the rules are unit-testable.
//
// Invariants enforced:
//  - at most one in-flight match request per submission,
//  - at most one in-flight decision request,
//  - a history row exists only after a 2xx server acknowledgment,
//  - candidates are stored exactly as the server sent them.

import type { Candidate, MatchResponse, Stats } from "./api.js";

export type HistoryRow = {
  reviewText: string;
  decision: "linked" | "new_issue" | "dismissed";
  issueIid: number | null;
  decidedAt: string;
};

export type TriageViewState = {
  input: string;
  provider: string;
  k: number;
  threshold: number | null;
  matchPending: boolean;
  decisionPending: boolean;
  current: MatchResponse | null;
  matchError: string | null;
  decisionError: string | null;
  history: HistoryRow[];
  stats: Stats | null;
  offline: boolean;
};

export function initialState(): TriageViewState {
  return {
    input: "",
    provider: "ref-384",
    k: 5,
    threshold: null,
    matchPending: false,
    decisionPending: false,
    current: null,
    matchError: null,
    decisionError: null,
    history: [],
    stats: null,
    offline: false,
  };
}

export function canSubmit(state: TriageViewState): boolean {
  return state.input.trim().length > 0 && !state.matchPending;
}

/** Begin a match; returns false (no-op) when one is already in flight. */
export function beginMatch(state: TriageViewState): boolean {
  if (!canSubmit(state)) {
    return false;
  }
  state.matchPending = true;
  state.matchError = null;
  state.decisionError = null;
  return true;
}

export function completeMatch(state: TriageViewState, response: MatchResponse): void {
  state.matchPending = false;
  state.current = response;
}

export function failMatch(state: TriageViewState, message: string): void {
  state.matchPending = false;
  state.matchError = message;
}

export function canDecide(state: TriageViewState): boolean {
  return state.current !== null && !state.decisionPending && !state.matchPending;
}

/** Begin a decision; returns false for double clicks while one is in flight. */
export function beginDecision(state: TriageViewState): boolean {
  if (!canDecide(state)) {
    return false;
  }
  state.decisionPending = true;
  state.decisionError = null;
  return true;
}

export function completeDecision(
  state: TriageViewState,
  decision: HistoryRow["decision"],
  issueIid: number | null,
  decidedAt: string,
): void {
  const reviewText = state.current?.query_text ?? "";
  state.decisionPending = false;
  state.history.push({ reviewText, decision, issueIid, decidedAt });
}

export function failDecision(state: TriageViewState, message: string): void {
  state.decisionPending = false;
  state.decisionError = message;
}

export function candidateByRank(state: TriageViewState, rank: number): Candidate | null {
  return state.current?.candidates.find((c) => c.rank === rank) ?? null;
}
