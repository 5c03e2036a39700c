/** Viewport marker clustering.
 *
 * Purely presentational: markers that would overlap on screen collapse into
 * one badge-carrying marker. Pothole identity is the backend's business (its
 * 2.5 m dedup); zooming in always recovers the individual markers.
 */

import { toScreen, type Viewport } from "./mercator.js";
import type { PotholeFeature } from "./types.js";

export interface MarkerCluster {
  /** Screen position of the first member; stable for a given input order. */
  x: number;
  y: number;
  features: PotholeFeature[];
}

export const CLUSTER_RADIUS_PX = 40;

export function clusterMarkers(
  features: PotholeFeature[],
  view: Viewport,
  radiusPx: number = CLUSTER_RADIUS_PX,
): MarkerCluster[] {
  const clusters: MarkerCluster[] = [];
  for (const feature of features) {
    const [lon, lat] = feature.geometry.coordinates;
    const p = toScreen({ lat, lon }, view);
    const near = clusters.find(
      (c) => (c.x - p.x) ** 2 + (c.y - p.y) ** 2 <= radiusPx ** 2,
    );
    if (near) {
      near.features.push(feature);
    } else {
      clusters.push({ x: p.x, y: p.y, features: [feature] });
    }
  }
  return clusters;
}

/** Count badge text; single markers carry no badge. */
export function badge(cluster: MarkerCluster): string {
  return cluster.features.length > 1 ? String(cluster.features.length) : "";
}
