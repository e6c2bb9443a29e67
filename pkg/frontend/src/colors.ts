/** Global binary encoding: red shades for candidates that contain the
 * current decision variable, blue shades for those that exclude it;
 * the shade within each family tracks the display cluster. */

export type Family = "red" | "blue";

export function clusterShade(family: Family, cluster: number): string {
  const hue = family === "red" ? 4 : 215;
  const lightness = 38 + ((cluster * 11) % 34);
  return `hsl(${hue}, 64%, ${lightness}%)`;
}

export function cellShade(family: Family, cluster: number): string {
  const hue = family === "red" ? 4 : 215;
  const lightness = 78 + ((cluster * 5) % 14);
  return `hsl(${hue}, 52%, ${lightness}%)`;
}
