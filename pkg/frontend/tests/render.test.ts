import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { InstancePayload, ReviewReport } from "../src/api.js";
import {
  escapeHtml,
  highlightTarget,
  renderAnnotation,
  renderDashboard,
  renderDone,
} from "../src/render.js";
import { SessionState } from "../src/session.js";

const PAYLOAD: InstancePayload = {
  schema_version: "annot-v1",
  instance_id: "bible-single-00001",
  genre: "bible",
  sentence: "You will have treasure in heaven .",
  target_start: 26,
  target_end: 32,
  surface: "heaven",
  is_mwe: false,
  batch: 0,
  options: [
    { value: 1, label: "Very Easy", description: "served descriptor alpha" },
    { value: 2, label: "Easy", description: "served descriptor beta" },
    { value: 3, label: "Neutral", description: "served descriptor gamma" },
    { value: 4, label: "Difficult", description: "served descriptor delta" },
    { value: 5, label: "Very Difficult", description: "served descriptor epsilon" },
  ],
};

function annotating(selected: number | null): SessionState {
  return { kind: "annotating", payload: PAYLOAD, selected, startedAt: 0 };
}

describe("rendering", () => {
  it("highlights exactly the target span from the API offsets", () => {
    const html = highlightTarget(PAYLOAD);
    expect(html).toBe(
      "You will have treasure in <mark class=\"target\">heaven</mark> .",
    );
  });

  it("escapes markup in sentences", () => {
    const html = highlightTarget({
      ...PAYLOAD,
      sentence: "a <script> tag near heaven now",
      target_start: 20,
      target_end: 26,
    });
    expect(html).toContain("&lt;script&gt;");
    expect(html).toContain("<mark class=\"target\">heaven</mark>");
  });

  it("renders all five options with the served labels and descriptors", () => {
    const html = renderAnnotation(annotating(null), 0);
    for (const option of PAYLOAD.options) {
      expect(html).toContain(option.label);
      expect(html).toContain(option.description);
      expect(html).toContain(`value="${option.value}"`);
    }
  });

  it("disables submit until an option is chosen", () => {
    expect(renderAnnotation(annotating(null), 0)).toContain("disabled");
    const chosen = renderAnnotation(annotating(3), 0);
    expect(chosen).not.toContain("disabled");
    expect(chosen).toContain('value="3" checked');
  });

  it("shows the running progress counter", () => {
    expect(renderAnnotation(annotating(null), 17)).toContain(">17<");
    expect(renderDone(17)).toContain("17");
  });

  it("never hardcodes descriptor text: it all flows from the payload", () => {
    const here = dirname(fileURLToPath(import.meta.url));
    for (const file of ["render.ts", "session.ts", "main.ts", "api.ts", "dashboard.ts"]) {
      const source = readFileSync(join(here, "..", "src", file), "utf-8");
      expect(source).not.toMatch(/very familiar to an annotator/i);
      expect(source).not.toMatch(/aware of the meaning/i);
      expect(source).not.toMatch(/neither difficult nor easy/i);
    }
  });

  it("renders the reviewer dashboard with histograms, rho, and flags", () => {
    const report: ReviewReport = {
      schema_version: "annot-v1",
      batch: 0,
      records: 42,
      flagged: { bot1: ["uniform"] },
      label_histograms: { bot1: [0, 0, 20, 0, 0], human1: [4, 6, 5, 4, 3] },
      frequency_correlation: { bot1: null, human1: -0.62 },
      already_rejected: [],
    };
    const html = renderDashboard(report);
    expect(html).toContain("bot1");
    expect(html).toContain("uniform");
    expect(html).toContain('class="flagged"');
    expect(html).toContain("-0.620");
    expect(html).toContain("n/a");
    expect(html).toContain("reject-btn");
    const botRow = html.split("\n").find((line) => line.includes("bot1"));
    expect(botRow).toContain('title="3: 20"');
  });

  it("escapes untrusted annotator ids in the dashboard", () => {
    const report: ReviewReport = {
      schema_version: "annot-v1",
      batch: 0,
      records: 1,
      flagged: {},
      label_histograms: { "<img src=x>": [1, 0, 0, 0, 0] },
      already_rejected: [],
    };
    expect(renderDashboard(report)).not.toContain("<img");
  });

  it("escapeHtml handles every special character", () => {
    expect(escapeHtml(`<a href="x">&'</a>`)).toBe(
      "&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;",
    );
  });
});
