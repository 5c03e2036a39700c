/** Segment creation flow.
 *
 * Two map clicks set the endpoints, either of which can then be dragged.
 * The preview polyline is the straight chord between them; the routed
 * geometry comes back from the server on submit. Submission stays disabled
 * until both endpoints and the required contract fields are in place, and a
 * routing failure keeps the draft alive with a straight-line fallback offer.
 */

import { ApiClient, ApiError, type SegmentInput } from "./api.js";
import type { LatLng, SegmentDetail } from "./types.js";

export interface ContractForm {
  contractor_name: string;
  contractor_contact: string;
  construction_date: string;
  budget: string;
  warranty_end: string;
  category: string;
}

const EMPTY_FORM: ContractForm = {
  contractor_name: "",
  contractor_contact: "",
  construction_date: "",
  budget: "",
  warranty_end: "",
  category: "",
};

export class SegmentDraft {
  start: LatLng | null = null;
  end: LatLng | null = null;
  mode: "routed" | "straight" = "routed";
  contract: ContractForm = { ...EMPTY_FORM };
  /** Message from a NoRoute failure; the draft then offers the fallback. */
  noRouteMessage: string | null = null;
  fallbackOffered = false;
  submitting = false;

  /** First click places the start, the second the end; later clicks move the end. */
  handleMapClick(p: LatLng): void {
    if (this.start === null) {
      this.start = p;
    } else {
      this.end = p;
    }
    this.clearRoutingFailure();
  }

  dragEndpoint(which: "start" | "end", p: LatLng): void {
    this[which] = p;
    this.clearRoutingFailure();
  }

  setField(name: keyof ContractForm, value: string): void {
    this.contract[name] = value;
  }

  /** Straight chord shown while drafting; null until both ends exist. */
  get preview(): [LatLng, LatLng] | null {
    return this.start && this.end ? [this.start, this.end] : null;
  }

  fieldErrors(): Partial<Record<keyof ContractForm, string>> {
    const errors: Partial<Record<keyof ContractForm, string>> = {};
    const c = this.contract;
    if (!c.contractor_name.trim()) errors.contractor_name = "required";
    if (!c.contractor_contact.trim()) errors.contractor_contact = "required";
    if (!c.construction_date) errors.construction_date = "required";
    if (!c.warranty_end) errors.warranty_end = "required";
    else if (c.construction_date && c.warranty_end < c.construction_date) {
      errors.warranty_end = "precedes construction date";
    }
    if (!c.budget.trim()) errors.budget = "required";
    else if (!Number.isFinite(Number(c.budget)) || Number(c.budget) < 0) {
      errors.budget = "must be a non-negative number";
    }
    return errors;
  }

  get canSubmit(): boolean {
    return (
      this.start !== null &&
      this.end !== null &&
      !this.submitting &&
      Object.keys(this.fieldErrors()).length === 0
    );
  }

  /**
   * Persist the draft. On a NoRoute rejection the error is absorbed into
   * `noRouteMessage`/`fallbackOffered` and null is returned; every other
   * failure propagates.
   */
  async submit(api: ApiClient, useFallback = false): Promise<SegmentDetail | null> {
    if (!this.canSubmit || !this.start || !this.end) {
      throw new Error("draft is not ready to submit");
    }
    const body: SegmentInput = {
      start: this.start,
      end: this.end,
      mode: this.mode,
      fallback_straight: useFallback,
      contract: {
        contractor_name: this.contract.contractor_name.trim(),
        contractor_contact: this.contract.contractor_contact.trim(),
        construction_date: this.contract.construction_date,
        budget: Number(this.contract.budget),
        warranty_end: this.contract.warranty_end,
        category: this.contract.category.trim() || null,
      },
    };
    this.submitting = true;
    try {
      return await api.createSegment(body);
    } catch (err) {
      if (err instanceof ApiError && err.code === "NoRoute") {
        this.noRouteMessage = err.message;
        this.fallbackOffered = true;
        return null;
      }
      throw err;
    } finally {
      this.submitting = false;
    }
  }

  /** Retry after a NoRoute failure, letting the server draw the chord. */
  submitWithStraightFallback(api: ApiClient): Promise<SegmentDetail | null> {
    return this.submit(api, true);
  }

  reset(): void {
    this.start = null;
    this.end = null;
    this.mode = "routed";
    this.contract = { ...EMPTY_FORM };
    this.clearRoutingFailure();
  }

  private clearRoutingFailure(): void {
    this.noRouteMessage = null;
    this.fallbackOffered = false;
  }
}
