/** Pothole popup content.
 *
 * Shows the evidence trail for one marker: thumbnail frame, detection
 * window, severity, status, and, when the pothole is attributed to a
 * registered segment, who built that road and when.
 */

import type { PotholeFeature, SegmentProperties } from "./types.js";

export function escapeHtml(raw: string): string {
  return raw
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function formatInstant(iso: string): string {
  return iso.replace("T", " ").replace("Z", " UTC");
}

export function popupHtml(
  feature: PotholeFeature,
  segment?: SegmentProperties,
): string {
  const p = feature.properties;
  const rows: string[] = [];
  if (p.thumbnail) {
    rows.push(
      `<img class="popup-thumb" alt="detection frame"` +
        ` src="data:image/jpeg;base64,${escapeHtml(p.thumbnail)}">`,
    );
  }
  rows.push(`<div class="popup-row popup-severity">Severity: ${escapeHtml(p.severity)}</div>`);
  rows.push(`<div class="popup-row">Status: ${escapeHtml(p.status)}</div>`);
  rows.push(
    `<div class="popup-row">Detected: ${escapeHtml(formatInstant(p.first_seen))}` +
      ` (seen ${p.detection_count}×, last ${escapeHtml(formatInstant(p.last_seen))})</div>`,
  );
  if (segment) {
    rows.push(
      `<div class="popup-row">Contractor: ${escapeHtml(segment.contractor_name)}</div>`,
    );
    rows.push(
      `<div class="popup-row">Constructed: ${escapeHtml(segment.construction_date)}</div>`,
    );
  }
  return `<div class="popup">${rows.join("")}</div>`;
}

/** Popup for a cluster: one block per member pothole. */
export function clusterPopupHtml(
  features: PotholeFeature[],
  segmentLookup: (segmentId: number | null) => SegmentProperties | undefined,
): string {
  const blocks = features.map((f) => popupHtml(f, segmentLookup(f.properties.segment_id)));
  return blocks.join("<hr>");
}
