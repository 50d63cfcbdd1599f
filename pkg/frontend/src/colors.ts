// Weight-to-color mapping. Shares the service renderer's contract: white
// at weight 0 interpolating linearly to full red at 1, so a higher weight
// is always an equal-or-hotter color.

export const BUCKET_COUNT = 5;

/** Inline background color, monotone in weight. */
export function heatColor(weight: number): string {
  const clamped = Math.min(1, Math.max(0, weight));
  const channel = Math.round(255 * (1 - clamped));
  return `rgb(255,${channel},${channel})`;
}

/** Discrete bucket 0..4 over [0,1]; 4 is the hottest. */
export function heatBucket(weight: number): number {
  const clamped = Math.min(1, Math.max(0, weight));
  return Math.min(BUCKET_COUNT - 1, Math.floor(clamped * BUCKET_COUNT));
}

/** CSS class for a weight; "heat-4" marks the hottest bucket. */
export function heatClass(weight: number): string {
  return `heat-${heatBucket(weight)}`;
}
