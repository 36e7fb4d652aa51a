/**
 * Reviewer flow: pull the QC report for a batch, render it, apply rejections.
 */

import { ApiClient, ReviewReport } from "./api.js";
import { renderDashboard } from "./render.js";

export class ReviewerDashboard {
  report: ReviewReport | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly force: boolean = true,
  ) {}

  async load(batch: number): Promise<ReviewReport> {
    this.report = await this.client.review(batch, { force: this.force });
    return this.report;
  }

  async reject(batch: number, annotator: string): Promise<ReviewReport> {
    this.report = await this.client.review(batch, {
      force: this.force,
      reject: [annotator],
    });
    return this.report;
  }

  html(): string {
    if (!this.report) {
      return `<p>Loading review…</p>`;
    }
    return renderDashboard(this.report);
  }
}
