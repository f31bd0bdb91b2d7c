// DOM rendering. Candidates are rendered strictly in server order with the
// server's own percent figures; nothing is re-scored or re-sorted here.

import type { MatchResponse, Stats } from "./api.js";
import type { HistoryRow } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderBanner(container: HTMLElement, response: MatchResponse): void {
  container.innerHTML = "";
  if (response.translated_text && response.translated_text !== response.query_text) {
    const banner = el("div", { class: "banner", "data-role": "translation-banner" });
    banner.appendChild(el("span", { class: "banner-tag" }, "translated"));
    banner.appendChild(el("span", {}, response.translated_text));
    container.appendChild(banner);
  }
  if (response.label) {
    const banner = el("div", { class: "banner", "data-role": "class-banner" });
    banner.appendChild(el("span", { class: "banner-tag" }, "class"));
    banner.appendChild(el("span", {}, response.label));
    container.appendChild(banner);
  }
}

export function renderCandidates(
  container: HTMLElement,
  response: MatchResponse,
  onLink: (issueIid: number) => void,
): void {
  container.innerHTML = "";
  if (response.filtered_out) {
    container.appendChild(
      el(
        "p",
        { class: "notice", "data-role": "filtered-out" },
        `Review class "${response.label ?? "unknown"}" is outside the configured filter; no matching attempted.`,
      ),
    );
    return;
  }
  if (response.candidates.length === 0) {
    container.appendChild(
      el("p", { class: "notice", "data-role": "no-candidates" },
         "No candidates (threshold too high or empty corpus)."),
    );
    return;
  }
  const list = el("ol", { class: "candidates", "data-role": "candidates" });
  for (const candidate of response.candidates) {
    const row = el("li", {
      class: "candidate",
      "data-role": "candidate-row",
      "data-iid": String(candidate.issue_iid),
      "data-rank": String(candidate.rank),
      "data-percent": String(candidate.percent),
    });

    const head = el("div", { class: "candidate-head" });
    head.appendChild(el("span", { class: "rank" }, `#${candidate.rank}`));
    const title = candidate.title_translated ?? candidate.title ?? `issue ${candidate.issue_iid}`;
    if (candidate.url) {
      const link = el("a", { href: candidate.url, target: "_blank", rel: "noopener" }, title);
      head.appendChild(link);
    } else {
      head.appendChild(el("span", {}, title));
    }
    head.appendChild(el("span", { class: "iid" }, `!${candidate.issue_iid}`));
    row.appendChild(head);

    const barTrack = el("div", { class: "bar-track" });
    const bar = el("div", { class: "bar", "data-role": "similarity-bar" });
    bar.style.width = `${Math.max(0, candidate.percent)}%`;
    barTrack.appendChild(bar);
    row.appendChild(barTrack);

    const meta = el("div", { class: "candidate-meta" });
    meta.appendChild(el("span", { class: "percent" }, `${candidate.percent.toFixed(1)}%`));
    const linkBtn = el(
      "button",
      { type: "button", "data-role": "link-button", "data-iid": String(candidate.issue_iid) },
      "Link",
    );
    linkBtn.addEventListener("click", () => onLink(candidate.issue_iid));
    meta.appendChild(linkBtn);
    row.appendChild(meta);

    list.appendChild(row);
  }
  container.appendChild(list);
}

export function renderError(container: HTMLElement, message: string | null,
                            onRetry: (() => void) | null): void {
  container.innerHTML = "";
  if (message === null) {
    return;
  }
  const box = el("div", { class: "error", "data-role": "error" }, message);
  if (onRetry) {
    const retry = el("button", { type: "button", "data-role": "retry-button" }, "Retry");
    retry.addEventListener("click", onRetry);
    box.appendChild(retry);
  }
  container.appendChild(box);
}

export function renderSuggestion(container: HTMLElement, title: string | null): void {
  container.innerHTML = "";
  if (title === null) {
    return;
  }
  const box = el("div", { class: "suggestion", "data-role": "suggested-title" });
  box.appendChild(el("span", {}, "Suggested issue title: "));
  const code = el("code", { "data-role": "suggested-title-text" }, title);
  box.appendChild(code);
  const copy = el("button", { type: "button", "data-role": "copy-title" }, "Copy");
  copy.addEventListener("click", () => {
    void navigator.clipboard?.writeText(title);
  });
  box.appendChild(copy);
  container.appendChild(box);
}

export function renderHistory(container: HTMLElement, rows: HistoryRow[]): void {
  container.innerHTML = "";
  if (rows.length === 0) {
    container.appendChild(el("p", { class: "notice" }, "No decisions this session."));
    return;
  }
  const list = el("ul", { class: "history", "data-role": "history" });
  for (const row of rows) {
    const item = el("li", { "data-role": "history-row", "data-decision": row.decision });
    const label =
      row.decision === "linked"
        ? `linked to !${row.issueIid}`
        : row.decision === "new_issue"
          ? "new issue needed"
          : "dismissed";
    item.appendChild(el("span", { class: "history-decision" }, label));
    item.appendChild(el("span", { class: "history-text" }, row.reviewText));
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderStats(container: HTMLElement, stats: Stats | null, offline: boolean): void {
  container.innerHTML = "";
  if (offline) {
    container.appendChild(
      el("div", { class: "error", "data-role": "offline-banner" },
         "Service unreachable; retrying..."),
    );
    return;
  }
  if (stats === null) {
    return;
  }
  const grid = el("dl", { class: "stats", "data-role": "stats" });
  const pairs: Array<[string, string, string]> = [
    ["issues", String(stats.issues), "stat-issues"],
    ["reviews", String(stats.reviews), "stat-reviews"],
    ["gold links", String(stats.gold_links), "stat-gold-links"],
  ];
  for (const [label, value, role] of pairs) {
    grid.appendChild(el("dt", {}, label));
    grid.appendChild(el("dd", { "data-role": role }, value));
  }
  grid.appendChild(el("dt", {}, "last eval"));
  const evalText = stats.last_eval
    ? `${stats.last_eval.n_hits}/${stats.last_eval.n_gold} (${stats.last_eval.hit_rate_percent}%) at k=${stats.last_eval.k}`
    : "no evaluation run";
  grid.appendChild(el("dd", { "data-role": "stat-last-eval" }, evalText));
  container.appendChild(grid);
}
