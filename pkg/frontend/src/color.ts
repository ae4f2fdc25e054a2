// Point coloring. Users are colored by their most-used hashtag so clusters
// of topical accounts pop out; the mapping must be stable across renders
// and across scatter refetches, so it hashes the tag instead of handing out
// palette slots in arrival order.

export const NO_HASHTAG_COLOR = "#8a8f98";

// 12-way categorical palette, dark-background friendly
const PALETTE = [
  "#4fc3f7",
  "#ffb74d",
  "#81c784",
  "#e57373",
  "#ba68c8",
  "#fff176",
  "#4dd0e1",
  "#f06292",
  "#aed581",
  "#ff8a65",
  "#7986cb",
  "#dce775",
];

/** FNV-1a, 32 bit. Stable across sessions, unlike anything Math.random. */
export function hashString(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export function colorForHashtag(tag: string): string {
  if (!tag) return NO_HASHTAG_COLOR;
  return PALETTE[hashString(tag) % PALETTE.length];
}

export function paletteSize(): number {
  return PALETTE.length;
}
