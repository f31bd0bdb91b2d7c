// Suggested issue titles for "new issue needed" decisions: the first eight
// content-word tokens of the review, using the same tokenization and
// stopword/length/numeric rules as the matcher's content filter.

import { STOPWORDS } from "./stopwords.js";

const TOKEN_RE = /[\p{L}\p{N}]+/gu;
const DIGITS_RE = /^\p{Nd}+$/u;

export function tokenize(text: string): string[] {
  const normalized = text.normalize("NFKC").toLowerCase();
  return normalized.match(TOKEN_RE) ?? [];
}

export function contentTokens(text: string): string[] {
  const tokens = tokenize(text);
  const kept = tokens.filter(
    (tok) => !STOPWORDS.has(tok) && tok.length >= 2 && !DIGITS_RE.test(tok),
  );
  // degenerate reviews ("ok", all stopwords) still get a suggestion
  return kept.length > 0 ? kept : tokens;
}

export function suggestedTitle(reviewText: string, maxTokens = 8): string {
  return contentTokens(reviewText).slice(0, maxTokens).join(" ");
}
