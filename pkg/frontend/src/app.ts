// Page controller: wires the form, candidate list, decisions, history and
// stats together. Every state change waits for the server's acknowledgment;
// there is no optimistic UI.

import { ApiClient, ApiError } from "./api.js";
import {
  beginDecision,
  beginMatch,
  candidateByRank,
  canSubmit,
  completeDecision,
  completeMatch,
  failDecision,
  failMatch,
  initialState,
  type TriageViewState,
} from "./state.js";
import {
  renderBanner,
  renderCandidates,
  renderError,
  renderHistory,
  renderStats,
  renderSuggestion,
} from "./render.js";
import { suggestedTitle } from "./suggest.js";

export type AppElements = {
  input: HTMLTextAreaElement;
  submit: HTMLButtonElement;
  provider: HTMLInputElement;
  topK: HTMLInputElement;
  threshold: HTMLInputElement;
  banner: HTMLElement;
  candidates: HTMLElement;
  matchError: HTMLElement;
  decisionError: HTMLElement;
  suggestion: HTMLElement;
  newIssueButton: HTMLButtonElement;
  dismissButton: HTMLButtonElement;
  history: HTMLElement;
  stats: HTMLElement;
};

export class TriageApp {
  readonly state: TriageViewState = initialState();

  constructor(
    private els: AppElements,
    private api: ApiClient,
    private statsRetryMs = 5000,
    private scheduleRetry: (fn: () => void, ms: number) => void = (fn, ms) => {
      setTimeout(fn, ms);
    },
  ) {}

  bind(): void {
    this.els.input.addEventListener("input", () => {
      this.state.input = this.els.input.value;
      this.syncControls();
    });
    this.els.submit.addEventListener("click", () => {
      void this.submitReview();
    });
    this.els.newIssueButton.addEventListener("click", () => {
      void this.recordDecision("new_issue", null);
    });
    this.els.dismissButton.addEventListener("click", () => {
      void this.recordDecision("dismissed", null);
    });
    this.syncControls();
  }

  syncControls(): void {
    this.els.submit.disabled = !canSubmit(this.state);
    const decisionsDisabled =
      this.state.current === null || this.state.decisionPending || this.state.matchPending;
    this.els.newIssueButton.disabled = decisionsDisabled;
    this.els.dismissButton.disabled = decisionsDisabled;
  }

  private readOptions(): void {
    this.state.provider = this.els.provider.value.trim() || "ref-384";
    const k = Number.parseInt(this.els.topK.value, 10);
    this.state.k = Number.isFinite(k) && k >= 1 ? k : 5;
    const raw = this.els.threshold.value.trim();
    this.state.threshold = raw === "" ? null : Number.parseFloat(raw);
  }

  async submitReview(): Promise<void> {
    this.state.input = this.els.input.value;
    this.readOptions();
    if (!beginMatch(this.state)) {
      return;
    }
    this.syncControls();
    try {
      const response = await this.api.match({
        text: this.state.input.trim(),
        provider: this.state.provider,
        k: this.state.k,
        threshold: this.state.threshold,
      });
      completeMatch(this.state, response);
      renderBanner(this.els.banner, response);
      renderCandidates(this.els.candidates, response, (iid) => {
        void this.recordDecision("linked", iid);
      });
      renderSuggestion(this.els.suggestion, null);
    } catch (err) {
      failMatch(this.state, describeError(err));
      renderError(this.els.matchError, this.state.matchError, () => {
        void this.submitReview();
      });
    }
    if (this.state.matchError === null) {
      renderError(this.els.matchError, null, null);
    }
    this.syncControls();
  }

  async recordDecision(
    decision: "linked" | "new_issue" | "dismissed",
    issueIid: number | null,
  ): Promise<void> {
    if (!beginDecision(this.state)) {
      return;
    }
    this.syncControls();
    const reviewText = this.state.current?.query_text ?? "";
    try {
      const stored = await this.api.triage({
        review_text: reviewText,
        decision,
        ...(decision === "linked" && issueIid !== null ? { issue_iid: issueIid } : {}),
        decided_by: "triage-ui",
      });
      completeDecision(this.state, decision, issueIid, stored.decided_at);
      renderHistory(this.els.history, this.state.history);
      renderError(this.els.decisionError, null, null);
      if (decision === "new_issue") {
        renderSuggestion(this.els.suggestion, suggestedTitle(reviewText));
      }
      await this.refreshStats();
    } catch (err) {
      failDecision(this.state, describeError(err));
      renderError(this.els.decisionError, this.state.decisionError, null);
    }
    this.syncControls();
  }

  async refreshStats(): Promise<void> {
    try {
      const stats = await this.api.stats();
      this.state.stats = stats;
      this.state.offline = false;
      renderStats(this.els.stats, stats, false);
    } catch {
      this.state.offline = true;
      renderStats(this.els.stats, null, true);
      this.scheduleRetry(() => {
        void this.refreshStats();
      }, this.statsRetryMs);
    }
  }

  linkCandidateByRank(rank: number): void {
    const candidate = candidateByRank(this.state, rank);
    if (candidate !== null) {
      void this.recordDecision("linked", candidate.issue_iid);
    }
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status === 0 ? err.message : `${err.code}: ${err.message}`;
  }
  return String(err);
}

export function elementsFromDocument(doc: Document): AppElements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (node === null) {
      throw new Error(`missing element #${id}`);
    }
    return node as T;
  };
  return {
    input: byId<HTMLTextAreaElement>("review-input"),
    submit: byId<HTMLButtonElement>("submit-review"),
    provider: byId<HTMLInputElement>("opt-provider"),
    topK: byId<HTMLInputElement>("opt-top-k"),
    threshold: byId<HTMLInputElement>("opt-threshold"),
    banner: byId("match-banner"),
    candidates: byId("candidates"),
    matchError: byId("match-error"),
    decisionError: byId("decision-error"),
    suggestion: byId("suggestion"),
    newIssueButton: byId<HTMLButtonElement>("decide-new-issue"),
    dismissButton: byId<HTMLButtonElement>("decide-dismiss"),
    history: byId("history"),
    stats: byId("stats"),
  };
}

export function startApp(doc: Document, baseUrl = ""): TriageApp {
  const app = new TriageApp(elementsFromDocument(doc), new ApiClient(baseUrl));
  app.bind();
  void app.refreshStats();
  return app;
}
