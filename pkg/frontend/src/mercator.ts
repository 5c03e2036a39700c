/** Web Mercator projection and slippy tile math.
 *
 * World coordinates are pixels in the standard 256px tile grid, so a point's
 * position at zoom z is simply its world coordinate scaled by 2^z.
 */

import type { LatLng } from "./types.js";

export const TILE_SIZE = 256;

/** Latitude where the square Mercator world cuts off. */
export const MAX_LATITUDE = 85.05112878;

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

export function worldSize(zoom: number): number {
  return TILE_SIZE * 2 ** zoom;
}

/** Project to pixel coordinates at the given zoom. */
export function project(p: LatLng, zoom: number): { x: number; y: number } {
  const size = worldSize(zoom);
  const lat = clamp(p.lat, -MAX_LATITUDE, MAX_LATITUDE);
  const sin = Math.sin((lat * Math.PI) / 180);
  return {
    x: ((p.lon + 180) / 360) * size,
    y: (0.5 - Math.log((1 + sin) / (1 - sin)) / (4 * Math.PI)) * size,
  };
}

export function unproject(x: number, y: number, zoom: number): LatLng {
  const size = worldSize(zoom);
  const n = Math.PI - (2 * Math.PI * y) / size;
  return {
    lat: (180 / Math.PI) * Math.atan(Math.sinh(n)),
    lon: (x / size) * 360 - 180,
  };
}

export interface Viewport {
  center: LatLng;
  zoom: number;
  /** Screen size in pixels. */
  width: number;
  height: number;
}

/** Pixel position of a point relative to the viewport's top-left corner. */
export function toScreen(p: LatLng, view: Viewport): { x: number; y: number } {
  const c = project(view.center, view.zoom);
  const w = project(p, view.zoom);
  return { x: w.x - c.x + view.width / 2, y: w.y - c.y + view.height / 2 };
}

export function fromScreen(x: number, y: number, view: Viewport): LatLng {
  const c = project(view.center, view.zoom);
  return unproject(c.x - view.width / 2 + x, c.y - view.height / 2 + y, view.zoom);
}

export interface TilePlacement {
  z: number;
  x: number;
  y: number;
  /** Screen position of the tile's top-left corner. */
  px: number;
  py: number;
}

/** Tiles needed to paint the viewport, with wrap-around in longitude. */
export function tilesFor(view: Viewport): TilePlacement[] {
  const z = Math.round(view.zoom);
  const tiles: TilePlacement[] = [];
  const count = 2 ** z;
  const c = project(view.center, z);
  const left = c.x - view.width / 2;
  const top = c.y - view.height / 2;
  const x0 = Math.floor(left / TILE_SIZE);
  const y0 = Math.floor(top / TILE_SIZE);
  const x1 = Math.floor((left + view.width) / TILE_SIZE);
  const y1 = Math.floor((top + view.height) / TILE_SIZE);
  for (let ty = y0; ty <= y1; ty++) {
    if (ty < 0 || ty >= count) continue; // no vertical wrap
    for (let tx = x0; tx <= x1; tx++) {
      tiles.push({
        z,
        x: ((tx % count) + count) % count,
        y: ty,
        px: tx * TILE_SIZE - left,
        py: ty * TILE_SIZE - top,
      });
    }
  }
  return tiles;
}

/** Fill a `{z}/{x}/{y}` tile URL template. */
export function tileUrl(template: string, t: TilePlacement): string {
  return template
    .replace("{z}", String(t.z))
    .replace("{x}", String(t.x))
    .replace("{y}", String(t.y));
}
