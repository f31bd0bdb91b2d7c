import { describe, expect, it } from "vitest";

import type { MatchResponse, Stats } from "../src/api.js";
import { renderCandidates, renderHistory, renderStats } from "../src/render.js";

function response(overrides: Partial<MatchResponse> = {}): MatchResponse {
  return {
    review_id: "r-x",
    query_text: "audio gone",
    provider_id: "ref-384",
    k_requested: 5,
    threshold_applied: null,
    filtered_out: false,
    translated_text: null,
    label: null,
    candidates: [
      { issue_iid: 9, rank: 1, similarity: 0.91, percent: 91.0, title: "loud", title_translated: null, url: "https://t/9" },
      { issue_iid: 2, rank: 2, similarity: 0.455, percent: 45.5, title: "quiet", title_translated: null, url: null },
      { issue_iid: 5, rank: 3, similarity: 0.1, percent: 10.0, title: "hum", title_translated: null, url: null },
    ],
    ...overrides,
  };
}

describe("renderCandidates", () => {
  it("renders rows exactly in server order with verbatim percents", () => {
    const container = document.createElement("div");
    renderCandidates(container, response(), () => {});
    const rows = [...container.querySelectorAll('[data-role="candidate-row"]')];
    expect(rows.map((r) => r.getAttribute("data-iid"))).toEqual(["9", "2", "5"]);
    expect(rows.map((r) => r.getAttribute("data-rank"))).toEqual(["1", "2", "3"]);
    const bars = [...container.querySelectorAll<HTMLElement>('[data-role="similarity-bar"]')];
    expect(bars.map((b) => b.style.width)).toEqual(["91%", "45.5%", "10%"]);
    const percents = [...container.querySelectorAll(".percent")].map((p) => p.textContent);
    expect(percents).toEqual(["91.0%", "45.5%", "10.0%"]);
  });

  it("links open the tracker url", () => {
    const container = document.createElement("div");
    renderCandidates(container, response(), () => {});
    const anchor = container.querySelector("a");
    expect(anchor?.getAttribute("href")).toBe("https://t/9");
  });

  it("clicking Link reports the candidate's iid", () => {
    const container = document.createElement("div");
    const linked: number[] = [];
    renderCandidates(container, response(), (iid) => linked.push(iid));
    const buttons = container.querySelectorAll<HTMLButtonElement>('[data-role="link-button"]');
    buttons[1]!.click();
    expect(linked).toEqual([2]);
  });

  it("explains filtered-out results", () => {
    const container = document.createElement("div");
    renderCandidates(
      container,
      response({ filtered_out: true, label: "irrelevant", candidates: [] }),
      () => {},
    );
    const notice = container.querySelector('[data-role="filtered-out"]');
    expect(notice?.textContent).toContain("irrelevant");
    expect(container.querySelectorAll('[data-role="candidate-row"]')).toHaveLength(0);
  });

  it("handles empty candidate lists", () => {
    const container = document.createElement("div");
    renderCandidates(container, response({ candidates: [] }), () => {});
    expect(container.querySelector('[data-role="no-candidates"]')).not.toBeNull();
  });
});

describe("renderHistory", () => {
  it("labels decisions", () => {
    const container = document.createElement("div");
    renderHistory(container, [
      { reviewText: "a", decision: "linked", issueIid: 4, decidedAt: "t" },
      { reviewText: "b", decision: "new_issue", issueIid: null, decidedAt: "t" },
      { reviewText: "c", decision: "dismissed", issueIid: null, decidedAt: "t" },
    ]);
    const rows = [...container.querySelectorAll('[data-role="history-row"]')];
    expect(rows).toHaveLength(3);
    expect(rows[0]?.textContent).toContain("linked to !4");
    expect(rows[1]?.textContent).toContain("new issue needed");
    expect(rows[2]?.textContent).toContain("dismissed");
  });
});

describe("renderStats", () => {
  const stats: Stats = {
    issues: 574,
    reviews: 69,
    gold_links: 23,
    embeddings: { "ref-384": { issue: 574 } },
    providers: ["ref-384"],
    last_eval: null,
  };

  it("shows corpus counts", () => {
    const container = document.createElement("div");
    renderStats(container, stats, false);
    expect(container.querySelector('[data-role="stat-issues"]')?.textContent).toBe("574");
    expect(container.querySelector('[data-role="stat-reviews"]')?.textContent).toBe("69");
    expect(container.querySelector('[data-role="stat-gold-links"]')?.textContent).toBe("23");
    expect(container.querySelector('[data-role="stat-last-eval"]')?.textContent).toBe(
      "no evaluation run",
    );
  });

  it("shows the last eval summary when present", () => {
    const container = document.createElement("div");
    renderStats(
      container,
      { ...stats, last_eval: { n_hits: 13, n_gold: 23, hit_rate_percent: "56.5", k: 5 } },
      false,
    );
    expect(container.querySelector('[data-role="stat-last-eval"]')?.textContent).toBe(
      "13/23 (56.5%) at k=5",
    );
  });

  it("shows the offline banner and nothing else when unreachable", () => {
    const container = document.createElement("div");
    renderStats(container, stats, true);
    expect(container.querySelector('[data-role="offline-banner"]')).not.toBeNull();
    expect(container.querySelector('[data-role="stats"]')).toBeNull();
  });
});
