/** Health report panel for one segment.
 *
 * Everything rendered comes straight from GET /api/segments/{id}/report;
 * the panel adds no health logic of its own. The notify action renders the
 * event optimistically with the delivery status the server returned
 * (pending: the outbox flushes after the transaction) and then refreshes
 * once so the row shows the settled status.
 */

import { ApiClient, ApiError } from "./api.js";
import { escapeHtml } from "./popup.js";
import type { AlertRow, HealthName, SegmentReport } from "./types.js";

export const HEALTH_COLORS: Record<HealthName, string> = {
  green: "#2e7d32",
  yellow: "#f9a825",
  orange: "#ef6c00",
  red: "#c62828",
};

export function countdownLabel(report: SegmentReport): string {
  const days = report.warranty.days_to_deadline;
  if (report.warranty.status === "expired") {
    return `warranty expired ${Math.abs(days)} days ago`;
  }
  return `${days} days to warranty deadline`;
}

export class ReportPanel {
  report: SegmentReport | null = null;
  /** Alert rows as displayed, newest last; notify prepends optimistically. */
  events: AlertRow[] = [];
  notice: string | null = null;
  /** Contact from an authenticated create/edit response, if the app has one. */
  contractorContact: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onAuthRequired: () => void = () => {},
  ) {}

  async load(segmentId: number, contractorContact: string | null = null): Promise<void> {
    this.report = await this.api.report(segmentId);
    this.events = [...this.report.alerts];
    this.contractorContact = contractorContact;
    this.notice = null;
  }

  get health(): HealthName {
    if (!this.report) throw new Error("panel has no report loaded");
    return this.report.health;
  }

  get bannerColor(): string {
    return HEALTH_COLORS[this.health];
  }

  /**
   * Ask the backend to message the contractor. Returns true when an event
   * was created. A missing/expired session surfaces as the auth callback,
   * not as an exception.
   */
  async notify(): Promise<boolean> {
    if (!this.report) throw new Error("panel has no report loaded");
    const segmentId = this.report.segment.id;
    let response;
    try {
      response = await this.api.notify(segmentId);
    } catch (err) {
      if (err instanceof ApiError && (err.status === 401 || err.status === 403)) {
        this.onAuthRequired();
        return false;
      }
      throw err;
    }
    if (response.suppressed || !response.event) {
      this.notice = "already notified today";
      return false;
    }
    this.events.push({
      id: response.event.id,
      transition: response.event.transition,
      health: this.report.health,
      message: "",
      delivery_status: response.event.delivery_status,
      created_at: response.event.created_at,
      attempts: response.event.attempts,
    });
    // One poll settles the optimistic row: the outbox has flushed by the
    // time this second read returns.
    await this.load(segmentId, this.contractorContact);
    return true;
  }

  html(): string {
    if (!this.report) return `<div class="panel panel-empty">select a segment</div>`;
    const r = this.report;
    const rows = [
      `<div class="panel-banner" style="background:${this.bannerColor}">` +
        `${escapeHtml(r.health)} — ${escapeHtml(countdownLabel(r))}</div>`,
      `<div class="panel-row">Density: ${r.density_per_km.toFixed(2)} potholes/km</div>`,
      `<div class="panel-row">Active: ${r.potholes.active}, repaired: ${r.potholes.repaired}</div>`,
      `<div class="panel-row">Contractor: ${escapeHtml(r.segment.contract.contractor_name)}</div>`,
    ];
    if (this.contractorContact) {
      rows.push(
        `<div class="panel-row panel-contact">Contact: ${escapeHtml(this.contractorContact)}</div>`,
      );
    }
    if (this.notice) {
      rows.push(`<div class="panel-notice">${escapeHtml(this.notice)}</div>`);
    }
    const events = this.events
      .map(
        (e) =>
          `<li class="event event-${escapeHtml(e.delivery_status)}">` +
          `${escapeHtml(e.transition)} · ${escapeHtml(e.delivery_status)}` +
          ` · ${escapeHtml(e.created_at)}</li>`,
      )
      .join("");
    rows.push(`<ul class="panel-events">${events}</ul>`);
    return `<div class="panel" data-segment-id="${r.segment.id}">${rows.join("")}</div>`;
  }
}
