/** Map view state and its URL round trip.
 *
 * Filter keys deliberately reuse the API's query parameter names (status,
 * from, to, category) so a shared console link describes a pothole query
 * verbatim, plus lat/lon/z for the viewport and layer toggles.
 */

import type { LatLng, PotholeStatus } from "./types.js";

export interface MapFilters {
  status: PotholeStatus | "all";
  from?: string;
  to?: string;
  category?: string;
}

export interface ViewState {
  center: LatLng;
  zoom: number;
  layers: { potholes: boolean; segments: boolean };
  filters: MapFilters;
}

export const DEFAULT_VIEW: ViewState = {
  center: { lat: 20.2961, lon: 85.8245 },
  zoom: 14,
  layers: { potholes: true, segments: true },
  filters: { status: "active" },
};

/** Query string for GET /api/potholes. Server defaults are omitted. */
export function potholeQuery(filters: MapFilters): URLSearchParams {
  const params = new URLSearchParams();
  if (filters.status !== "active") params.set("status", filters.status);
  if (filters.from) params.set("from", filters.from);
  if (filters.to) params.set("to", filters.to);
  if (filters.category) params.set("category", filters.category);
  return params;
}

const round = (v: number, places: number) => Number(v.toFixed(places));

export function toSearchParams(view: ViewState): URLSearchParams {
  const params = potholeQuery(view.filters);
  params.set("lat", String(round(view.center.lat, 5)));
  params.set("lon", String(round(view.center.lon, 5)));
  params.set("z", String(view.zoom));
  if (!view.layers.potholes) params.set("potholes", "off");
  if (!view.layers.segments) params.set("segments", "off");
  return params;
}

export function fromSearchParams(params: URLSearchParams): ViewState {
  const view: ViewState = {
    center: {
      lat: numberOr(params.get("lat"), DEFAULT_VIEW.center.lat),
      lon: numberOr(params.get("lon"), DEFAULT_VIEW.center.lon),
    },
    zoom: numberOr(params.get("z"), DEFAULT_VIEW.zoom),
    layers: {
      potholes: params.get("potholes") !== "off",
      segments: params.get("segments") !== "off",
    },
    filters: { status: "active" },
  };
  const status = params.get("status");
  if (status === "repaired" || status === "all") view.filters.status = status;
  const from = params.get("from");
  if (from) view.filters.from = from;
  const to = params.get("to");
  if (to) view.filters.to = to;
  const category = params.get("category");
  if (category) view.filters.category = category;
  return view;
}

function numberOr(raw: string | null, fallback: number): number {
  if (raw === null) return fallback;
  const parsed = Number(raw);
  return Number.isFinite(parsed) ? parsed : fallback;
}
