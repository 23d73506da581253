/** A small hand-built bundle whose every expected value is computable by eye. */

import { Bundle } from "../src/types.js";

export const HAND_BUNDLE: Bundle = {
  meta: { generated_at: "2024-01-01T00:00:00Z", tool_version: "0.1.0", config_hash: "cafe" },
  authors: [
    { author_id: "a", display_name: "Author A", birth_year: 1700, death_year: 1760 },
    { author_id: "b", display_name: "Author B", birth_year: 1720, death_year: 1790 },
    { author_id: "c", display_name: "Author C", birth_year: 1740, death_year: 1800 },
    { author_id: "p", display_name: "Author P", birth_year: 1680, death_year: 1750 },
    { author_id: "q", display_name: "Author Q", birth_year: 1710, death_year: 1770 },
    { author_id: "z", display_name: "Author Z", birth_year: 1600, death_year: 1670 },
  ],
  datasets: [
    {
      dataset_id: "main",
      label: "Main",
      nodes: ["a", "b", "c", "p", "q", "z"],
      edges: [
        { citing: "a", cited: "p", weight: 5 },
        { citing: "b", cited: "p", weight: 2 },
        { citing: "c", cited: "p", weight: 2 },
        { citing: "p", cited: "z", weight: 4 },
        { citing: "p", cited: "a", weight: 1 },
        { citing: "a", cited: "b", weight: 3 },
      ],
      per_node: {
        a: { in_total: 1, out_total: 8 },
        b: { in_total: 3, out_total: 2 },
        c: { in_total: 0, out_total: 2 },
        p: { in_total: 9, out_total: 5 },
        q: { in_total: 0, out_total: 0 },
        z: { in_total: 4, out_total: 0 },
      },
    },
    {
      dataset_id: "expanded",
      label: "Expanded",
      nodes: ["a", "b"],
      edges: [{ citing: "a", cited: "b", weight: 1 }],
      per_node: {
        a: { in_total: 0, out_total: 1 },
        b: { in_total: 1, out_total: 0 },
      },
    },
  ],
};

export function cloneBundle(): Bundle {
  return JSON.parse(JSON.stringify(HAND_BUNDLE)) as Bundle;
}
