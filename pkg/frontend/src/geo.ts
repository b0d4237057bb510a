// Small geographic helpers for the map view and button enablement.

const EARTH_RADIUS_M = 6_371_000;

export function haversineM(
  aLat: number, aLon: number, bLat: number, bLon: number,
): number {
  const rad = Math.PI / 180;
  const dLat = (bLat - aLat) * rad;
  const dLon = (bLon - aLon) * rad;
  const h =
    Math.sin(dLat / 2) ** 2 +
    Math.cos(aLat * rad) * Math.cos(bLat * rad) * Math.sin(dLon / 2) ** 2;
  return 2 * EARTH_RADIUS_M * Math.asin(Math.min(1, Math.sqrt(h)));
}

export interface Bounds {
  minLat: number;
  maxLat: number;
  minLon: number;
  maxLon: number;
}

export interface Projection {
  x(lon: number): number;
  y(lat: number): number;
  width: number;
  height: number;
}

// Equirectangular projection of a lat/lon bounding box into pixel space,
// preserving the metric aspect ratio.
export function makeProjection(
  bounds: Bounds, width: number, padding = 24,
): Projection {
  const midLat = (bounds.minLat + bounds.maxLat) / 2;
  const lonScale = Math.cos((midLat * Math.PI) / 180);
  const spanX = Math.max(1e-9, (bounds.maxLon - bounds.minLon) * lonScale);
  const spanY = Math.max(1e-9, bounds.maxLat - bounds.minLat);
  const inner = width - 2 * padding;
  const scale = inner / Math.max(spanX, spanY);
  const height = spanY * scale + 2 * padding;
  return {
    width,
    height,
    x: (lon) => padding + (lon - bounds.minLon) * lonScale * scale,
    y: (lat) => height - padding - (lat - bounds.minLat) * scale,
  };
}

export function boundsOf(points: [number, number][]): Bounds {
  let minLat = Infinity, maxLat = -Infinity, minLon = Infinity, maxLon = -Infinity;
  for (const [lat, lon] of points) {
    minLat = Math.min(minLat, lat);
    maxLat = Math.max(maxLat, lat);
    minLon = Math.min(minLon, lon);
    maxLon = Math.max(maxLon, lon);
  }
  return { minLat, maxLat, minLon, maxLon };
}
