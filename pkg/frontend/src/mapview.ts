/** SVG slippy-map renderer.
 *
 * Produces one SVG document per frame: raster tiles from a configurable
 * template, segment polylines stroked by health, and clustered pothole
 * markers with count badges. Rendering is a pure function of API data plus
 * the viewport; interaction wiring lives in the app layer, keyed off the
 * data-* attributes emitted here.
 */

import { badge, clusterMarkers, type MarkerCluster } from "./cluster.js";
import { tilesFor, tileUrl, toScreen, type Viewport } from "./mercator.js";
import { HEALTH_COLORS } from "./panel.js";
import type { LatLng, PotholeFeature, SegmentFeature } from "./types.js";

const MARKER_RADIUS = 10;

export interface MapData {
  potholes: PotholeFeature[];
  segments: SegmentFeature[];
}

export interface DraftOverlay {
  start: LatLng | null;
  end: LatLng | null;
  preview: [LatLng, LatLng] | null;
}

function validPoint(f: PotholeFeature): boolean {
  const g = f.geometry;
  return (
    g?.type === "Point" &&
    Array.isArray(g.coordinates) &&
    g.coordinates.length === 2 &&
    g.coordinates.every(Number.isFinite)
  );
}

function validLine(f: SegmentFeature): boolean {
  const g = f.geometry;
  return (
    g?.type === "LineString" &&
    Array.isArray(g.coordinates) &&
    g.coordinates.length >= 2 &&
    g.coordinates.every((c) => Array.isArray(c) && c.length === 2 && c.every(Number.isFinite))
  );
}

/** Drop broken features rather than blanking the map. */
export function sanitize(data: MapData, warn: (msg: string) => void = console.warn): MapData {
  const potholes = data.potholes.filter((f) => {
    if (validPoint(f)) return true;
    warn(`skipping malformed pothole feature ${JSON.stringify(f?.id ?? f)}`);
    return false;
  });
  const segments = data.segments.filter((f) => {
    if (validLine(f)) return true;
    warn(`skipping malformed segment feature ${JSON.stringify(f?.id ?? f)}`);
    return false;
  });
  return { potholes, segments };
}

function segmentPoints(feature: SegmentFeature, view: Viewport): string {
  return feature.geometry.coordinates
    .map(([lon, lat]) => {
      const p = toScreen({ lat, lon }, view);
      return `${p.x.toFixed(1)},${p.y.toFixed(1)}`;
    })
    .join(" ");
}

function markerSvg(cluster: MarkerCluster, index: number): string {
  const ids = cluster.features.map((f) => f.id).join(",");
  const label = badge(cluster);
  const badgeSvg = label
    ? `<text class="badge" x="${cluster.x.toFixed(1)}" y="${(cluster.y + 4).toFixed(1)}"` +
      ` text-anchor="middle">${label}</text>`
    : "";
  return (
    `<g class="marker" data-cluster-index="${index}" data-feature-ids="${ids}">` +
    `<circle cx="${cluster.x.toFixed(1)}" cy="${cluster.y.toFixed(1)}" r="${MARKER_RADIUS}"/>` +
    badgeSvg +
    `</g>`
  );
}

export interface RenderedMap {
  svg: string;
  clusters: MarkerCluster[];
}

export function renderMap(
  view: Viewport,
  data: MapData,
  tileTemplate: string,
  draft?: DraftOverlay,
  warn: (msg: string) => void = console.warn,
): RenderedMap {
  const clean = sanitize(data, warn);
  const parts: string[] = [];

  for (const t of tilesFor(view)) {
    parts.push(
      `<image href="${tileUrl(tileTemplate, t)}" x="${t.px.toFixed(1)}"` +
        ` y="${t.py.toFixed(1)}" width="256" height="256"/>`,
    );
  }

  for (const s of clean.segments) {
    const color = HEALTH_COLORS[s.properties.health] ?? HEALTH_COLORS.green;
    parts.push(
      `<polyline class="segment" data-segment-id="${s.id}" fill="none"` +
        ` stroke="${color}" stroke-width="4" points="${segmentPoints(s, view)}"/>`,
    );
  }

  const clusters = clusterMarkers(clean.potholes, view);
  clusters.forEach((c, i) => parts.push(markerSvg(c, i)));

  if (draft) {
    if (draft.preview) {
      const [a, b] = draft.preview;
      const pa = toScreen(a, view);
      const pb = toScreen(b, view);
      parts.push(
        `<line class="draft-preview" stroke-dasharray="6 4" stroke="#1565c0" stroke-width="3"` +
          ` x1="${pa.x.toFixed(1)}" y1="${pa.y.toFixed(1)}"` +
          ` x2="${pb.x.toFixed(1)}" y2="${pb.y.toFixed(1)}"/>`,
      );
    }
    for (const which of ["start", "end"] as const) {
      const p = draft[which];
      if (!p) continue;
      const s = toScreen(p, view);
      parts.push(
        `<circle class="draft-handle" data-endpoint="${which}"` +
          ` cx="${s.x.toFixed(1)}" cy="${s.y.toFixed(1)}" r="7"/>`,
      );
    }
  }

  const svg =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${view.width}" height="${view.height}"` +
    ` viewBox="0 0 ${view.width} ${view.height}">` +
    parts.join("") +
    `</svg>`;
  return { svg, clusters };
}
