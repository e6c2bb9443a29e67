import { Delaunay } from "d3-delaunay";
import { CandidateView } from "./api";

export interface Point {
  x: number;
  y: number;
}

export type Polygon = Point[];

export const GLYPH_MAX_PX = 50;

export function isPointInPolygon(point: Point, polygon: Polygon): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const xi = polygon[i].x;
    const yi = polygon[i].y;
    const xj = polygon[j].x;
    const yj = polygon[j].y;
    const intersects =
      yi > point.y !== yj > point.y &&
      point.x < ((xj - xi) * (point.y - yi)) / (yj - yi) + xi;
    if (intersects) inside = !inside;
  }
  return inside;
}

export function lassoSelect<T extends Point>(points: T[], polygon: Polygon): T[] {
  if (polygon.length < 3) return [];
  return points.filter((p) => isPointInPolygon(p, polygon));
}

/** Scale a rows x cols output shape into a glyph no larger than 50 px,
 * keeping the aspect ratio and a visible minimum. */
export function glyphSize(rows: number, cols: number): { width: number; height: number } {
  const r = Math.max(rows, 1);
  const c = Math.max(cols, 1);
  const scale = GLYPH_MAX_PX / Math.max(r, c);
  return {
    width: Math.max(6, Math.min(GLYPH_MAX_PX, c * scale)),
    height: Math.max(6, Math.min(GLYPH_MAX_PX, r * scale)),
  };
}

export interface Placed {
  candidate: CandidateView;
  x: number;
  y: number;
}

/** Map layout coordinates into pixel space with padding. */
export function placeCandidates(
  candidates: CandidateView[],
  width: number,
  height: number,
  padding = 48,
): Placed[] {
  if (candidates.length === 0) return [];
  const xs = candidates.map((c) => c.x);
  const ys = candidates.map((c) => c.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  return candidates.map((candidate) => ({
    candidate,
    x: padding + ((candidate.x - minX) / spanX) * (width - 2 * padding),
    y: padding + ((candidate.y - minY) / spanY) * (height - 2 * padding),
  }));
}

/** Voronoi cell polygons around the placed glyphs, clipped to the view. */
export function voronoiCells(placed: Placed[], width: number, height: number): string[] {
  if (placed.length === 0) return [];
  if (placed.length === 1) {
    return [`M0,0L${width},0L${width},${height}L0,${height}Z`];
  }
  const delaunay = Delaunay.from(
    placed,
    (p) => p.x,
    (p) => p.y,
  );
  const voronoi = delaunay.voronoi([0, 0, width, height]);
  return placed.map((_, i) => voronoi.renderCell(i));
}
