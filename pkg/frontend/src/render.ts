/**
 * Pure HTML builders for the annotator and reviewer screens.
 *
 * Everything user-visible about the Likert scale (labels and descriptors)
 * comes from the API payload; nothing is hardcoded here. Rendering to
 * strings keeps these functions directly assertable in tests.
 */

import { InstancePayload, ReviewReport } from "./api.js";
import { SessionState } from "./session.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

/** Sentence with the target span wrapped in <mark>, offsets from the API. */
export function highlightTarget(payload: InstancePayload): string {
  const { sentence, target_start, target_end } = payload;
  const before = escapeHtml(sentence.slice(0, target_start));
  const target = escapeHtml(sentence.slice(target_start, target_end));
  const after = escapeHtml(sentence.slice(target_end));
  return `${before}<mark class="target">${target}</mark>${after}`;
}

export function renderAnnotation(state: SessionState, submitted: number): string {
  if (state.kind !== "annotating") {
    throw new Error(`renderAnnotation called in state ${state.kind}`);
  }
  const { payload, selected } = state;
  const options = payload.options
    .map((option) => {
      const checked = selected === option.value ? " checked" : "";
      return [
        `<label class="option">`,
        `<input type="radio" name="likert" value="${option.value}"${checked}>`,
        `<span class="option-label">${escapeHtml(option.label)}</span>`,
        `<span class="option-desc">${escapeHtml(option.description)}</span>`,
        `</label>`,
      ].join("");
    })
    .join("\n");
  const disabled = selected === null ? " disabled" : "";
  return [
    `<div class="progress">Annotated so far: <span id="submitted-count">${submitted}</span></div>`,
    `<p class="sentence" data-instance="${escapeHtml(payload.instance_id)}">${highlightTarget(payload)}</p>`,
    `<p class="prompt">How difficult is the highlighted ${payload.is_mwe ? "expression" : "word"}?</p>`,
    `<form id="likert-form">${options}</form>`,
    `<button id="submit-btn" type="button"${disabled}>Submit</button>`,
  ].join("\n");
}

export function renderDone(submitted: number): string {
  return [
    `<div class="complete">`,
    `<h2>Queue complete</h2>`,
    `<p>No more instances are available for you right now. You annotated ${submitted}.</p>`,
    `</div>`,
  ].join("\n");
}

export function renderLogin(): string {
  return [
    `<div class="login">`,
    `<h2>Session expired</h2>`,
    `<p>Your annotator token is not valid any more.</p>`,
    `<button id="login-btn" type="button">Start a new session</button>`,
    `</div>`,
  ].join("\n");
}

export function renderError(message: string): string {
  return [
    `<div class="error-banner">`,
    `<p>Connection problem: ${escapeHtml(message)}. Nothing was lost.</p>`,
    `<button id="retry-btn" type="button">Retry</button>`,
    `</div>`,
  ].join("\n");
}

export function renderNotice(message: string): string {
  return `<div class="notice">${escapeHtml(message)}</div>`;
}

/** Reviewer dashboard: per-annotator histograms, QC numbers, reject actions. */
export function renderDashboard(report: ReviewReport): string {
  const rows = Object.entries(report.label_histograms)
    .sort(([a], [b]) => (a < b ? -1 : 1))
    .map(([annotator, counts]) => {
      const total = counts.reduce((s, c) => s + c, 0);
      const bars = counts
        .map((c, i) => `<span class="bar" title="${i + 1}: ${c}">${c}</span>`)
        .join("");
      const reasons = report.flagged[annotator] ?? [];
      const rho = report.frequency_correlation?.[annotator];
      const rhoText = rho === undefined || rho === null ? "n/a" : rho.toFixed(3);
      const flaggedClass = reasons.length ? ` class="flagged"` : "";
      return [
        `<tr${flaggedClass} data-annotator="${escapeHtml(annotator)}">`,
        `<td class="annotator">${escapeHtml(annotator)}</td>`,
        `<td class="histogram">${bars}</td>`,
        `<td>${total}</td>`,
        `<td class="rho">${rhoText}</td>`,
        `<td class="reasons">${reasons.map(escapeHtml).join(", ") || "-"}</td>`,
        `<td><button class="reject-btn" data-annotator="${escapeHtml(annotator)}" type="button">Reject</button></td>`,
        `</tr>`,
      ].join("");
    })
    .join("\n");
  return [
    `<h2>Batch ${report.batch} review</h2>`,
    `<p>${report.records} records; flagged annotators: ${Object.keys(report.flagged).length}</p>`,
    `<table class="dashboard">`,
    `<thead><tr><th>Annotator</th><th>Labels 1-5</th><th>Total</th>`,
    `<th>Frequency rho</th><th>Flags</th><th></th></tr></thead>`,
    `<tbody>${rows}</tbody>`,
    `</table>`,
  ].join("\n");
}
