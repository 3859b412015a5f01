/** Colorblind-safe class colors (Okabe-Ito), assigned by canonical movement
 * order so a movement keeps its color across the whole session. */

const MOVEMENT_ORDER = [
  "Rest",
  "Hand Open",
  "Power Grasp",
  "Wrist Pronate",
  "Wrist Supinate",
  "Tripod Grasp",
  "Key Grasp",
  "Index Point",
  "Precision Pinch",
];

const OKABE_ITO = [
  "#999999", // grey: rest
  "#E69F00", // orange
  "#56B4E9", // sky blue
  "#009E73", // bluish green
  "#F0E442", // yellow
  "#0072B2", // blue
  "#D55E00", // vermillion
  "#CC79A7", // reddish purple
  "#000000", // black
];

export function movementColor(movement: string): string {
  const idx = MOVEMENT_ORDER.indexOf(movement);
  if (idx >= 0) return OKABE_ITO[idx % OKABE_ITO.length];
  let hash = 0;
  for (const ch of movement) hash = (hash * 31 + ch.charCodeAt(0)) >>> 0;
  return OKABE_ITO[hash % OKABE_ITO.length];
}
