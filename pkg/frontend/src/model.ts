/** Pure view-model logic: bundle validation, view state, edge filtering,
 * focal neighbourhoods, and layout geometry. Nothing here touches the DOM
 * or the network, so every behaviour is unit-testable. */

import {
  Bundle,
  BundleDataset,
  BundleEdge,
  DEFAULT_EDGE_RENDER_CAP,
  DEFAULT_THEME,
  LayoutPoint,
  RadiusTheme,
  ViewState,
} from "./types.js";

export class BundleLoadError extends Error {
  constructor(message: string, readonly path: string) {
    super(`${message} (at ${path})`);
    this.name = "BundleLoadError";
  }
}

export class SelectionError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SelectionError";
  }
}

function expect(condition: boolean, message: string, path: string): asserts condition {
  if (!condition) {
    throw new BundleLoadError(message, path);
  }
}

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

/** Structural validation with field-path error messages. */
export function validateBundle(data: unknown): Bundle {
  expect(isRecord(data), "bundle must be an object", "$");
  expect(isRecord(data.meta), "missing meta object", "meta");
  for (const key of ["generated_at", "tool_version", "config_hash"] as const) {
    expect(typeof data.meta[key] === "string", `meta.${key} must be a string`, `meta.${key}`);
  }
  expect(Array.isArray(data.authors), "authors must be an array", "authors");
  data.authors.forEach((author: unknown, i: number) => {
    expect(isRecord(author), "author must be an object", `authors[${i}]`);
    expect(typeof author.author_id === "string", "author_id must be a string", `authors[${i}].author_id`);
    expect(typeof author.display_name === "string", "display_name must be a string", `authors[${i}].display_name`);
    expect(Number.isInteger(author.birth_year), "birth_year must be an integer", `authors[${i}].birth_year`);
    expect(Number.isInteger(author.death_year), "death_year must be an integer", `authors[${i}].death_year`);
  });
  expect(Array.isArray(data.datasets), "datasets must be an array", "datasets");
  expect(data.datasets.length > 0, "datasets must be non-empty", "datasets");
  const seen = new Set<string>();
  data.datasets.forEach((dataset: unknown, d: number) => {
    expect(isRecord(dataset), "dataset must be an object", `datasets[${d}]`);
    expect(typeof dataset.dataset_id === "string", "dataset_id must be a string", `datasets[${d}].dataset_id`);
    expect(!seen.has(dataset.dataset_id as string), "duplicate dataset_id", `datasets[${d}].dataset_id`);
    seen.add(dataset.dataset_id as string);
    expect(typeof dataset.label === "string", "label must be a string", `datasets[${d}].label`);
    expect(Array.isArray(dataset.nodes), "nodes must be an array", `datasets[${d}].nodes`);
    const nodes = new Set<string>();
    (dataset.nodes as unknown[]).forEach((node, n) => {
      expect(typeof node === "string", "node must be a string", `datasets[${d}].nodes[${n}]`);
      nodes.add(node);
    });
    expect(Array.isArray(dataset.edges), "edges must be an array", `datasets[${d}].edges`);
    (dataset.edges as unknown[]).forEach((edge, e) => {
      expect(isRecord(edge), "edge must be an object", `datasets[${d}].edges[${e}]`);
      expect(typeof edge.citing === "string", "citing must be a string", `datasets[${d}].edges[${e}].citing`);
      expect(typeof edge.cited === "string", "cited must be a string", `datasets[${d}].edges[${e}].cited`);
      expect(
        Number.isInteger(edge.weight) && (edge.weight as number) > 0,
        "weight must be a positive integer",
        `datasets[${d}].edges[${e}].weight`,
      );
      expect(nodes.has(edge.citing as string), "edge endpoint not in node list", `datasets[${d}].edges[${e}].citing`);
      expect(nodes.has(edge.cited as string), "edge endpoint not in node list", `datasets[${d}].edges[${e}].cited`);
    });
    expect(isRecord(dataset.per_node), "per_node must be an object", `datasets[${d}].per_node`);
    for (const node of nodes) {
      const totals = (dataset.per_node as Record<string, unknown>)[node];
      expect(isRecord(totals), "missing per_node totals", `datasets[${d}].per_node.${node}`);
      expect(Number.isInteger(totals.in_total), "in_total must be an integer", `datasets[${d}].per_node.${node}.in_total`);
      expect(Number.isInteger(totals.out_total), "out_total must be an integer", `datasets[${d}].per_node.${node}.out_total`);
    }
  });
  return data as unknown as Bundle;
}

export function birthYears(bundle: Bundle): Map<string, number> {
  return new Map(bundle.authors.map((a) => [a.author_id, a.birth_year]));
}

export function initialViewState(bundle: Bundle): ViewState {
  const births = bundle.authors.map((a) => a.birth_year);
  const datasetId = bundle.datasets.some((d) => d.dataset_id === "main")
    ? "main"
    : bundle.datasets[0]!.dataset_id;
  return {
    datasetId,
    threshold: 1,
    timeRange: [Math.min(...births), Math.max(...births)],
    focal: null,
    highlightK: 5,
    selection: new Set(),
  };
}

/** Fetch + parse + validate; rejects before anything is rendered. */
export async function loadBundle(
  url: string,
  fetchFn: typeof fetch = fetch,
): Promise<{ bundle: Bundle; state: ViewState }> {
  let response: Response;
  try {
    response = await fetchFn(url);
  } catch (err) {
    throw new BundleLoadError(`cannot fetch bundle: ${String(err)}`, url);
  }
  if (!response.ok) {
    throw new BundleLoadError(`bundle request failed with status ${response.status}`, url);
  }
  let data: unknown;
  try {
    data = await response.json();
  } catch {
    throw new BundleLoadError("bundle is not valid JSON", url);
  }
  const bundle = validateBundle(data);
  return { bundle, state: initialViewState(bundle) };
}

export function datasetById(bundle: Bundle, datasetId: string): BundleDataset {
  const dataset = bundle.datasets.find((d) => d.dataset_id === datasetId);
  if (!dataset) {
    throw new SelectionError(`unknown dataset ${datasetId}`);
  }
  return dataset;
}

/** Edges at or above the weight threshold whose endpoints' birth years fall
 * inside the time range. Pure function of (dataset, state). */
export function visibleEdges(
  dataset: BundleDataset,
  state: ViewState,
  births: Map<string, number>,
): BundleEdge[] {
  const [lo, hi] = state.timeRange;
  const inRange = (id: string): boolean => {
    const birth = births.get(id);
    return birth !== undefined && birth >= lo && birth <= hi;
  };
  return dataset.edges.filter(
    (e) => e.weight >= state.threshold && inRange(e.citing) && inRange(e.cited),
  );
}

/** Highest-weight-first render cap; ties break on (citing, cited) for a
 * stable selection. */
export function capEdges(edges: BundleEdge[], limit: number = DEFAULT_EDGE_RENDER_CAP): BundleEdge[] {
  if (edges.length <= limit) {
    return edges;
  }
  return [...edges]
    .sort((a, b) => b.weight - a.weight || a.citing.localeCompare(b.citing) || a.cited.localeCompare(b.cited))
    .slice(0, limit);
}

export function visibleNodes(dataset: BundleDataset, state: ViewState, births: Map<string, number>): string[] {
  const [lo, hi] = state.timeRange;
  return dataset.nodes.filter((id) => {
    const birth = births.get(id);
    return birth !== undefined && birth >= lo && birth <= hi;
  });
}

export interface FocalNeighbours {
  topIncoming: { authorId: string; weight: number }[];
  topOutgoing: { authorId: string; weight: number }[];
}

/** Top-k counterpart authors by edge weight, descending; ties break on
 * author_id. No padding when the neighbourhood is smaller than k. */
export function focalHighlight(dataset: BundleDataset, focal: string, k: number): FocalNeighbours {
  if (!dataset.nodes.includes(focal)) {
    throw new SelectionError(`author ${focal} is not in dataset ${dataset.dataset_id}`);
  }
  const rank = (pairs: { authorId: string; weight: number }[]) =>
    pairs.sort((a, b) => b.weight - a.weight || a.authorId.localeCompare(b.authorId)).slice(0, k);
  return {
    topIncoming: rank(
      dataset.edges.filter((e) => e.cited === focal).map((e) => ({ authorId: e.citing, weight: e.weight })),
    ),
    topOutgoing: rank(
      dataset.edges.filter((e) => e.citing === focal).map((e) => ({ authorId: e.cited, weight: e.weight })),
    ),
  };
}

export function radiusFor(inTotal: number, theme: RadiusTheme = DEFAULT_THEME): number {
  return theme.rMin + theme.scale * Math.log(1 + inTotal);
}

/** x = birth year, y = outgoing total under the active dataset, radius grows
 * logarithmically with received references. */
export function layoutPoints(
  dataset: BundleDataset,
  state: ViewState,
  births: Map<string, number>,
  theme: RadiusTheme = DEFAULT_THEME,
): LayoutPoint[] {
  return visibleNodes(dataset, state, births).map((id) => {
    const totals = dataset.per_node[id] ?? { in_total: 0, out_total: 0 };
    return {
      authorId: id,
      x: births.get(id)!,
      y: totals.out_total,
      radius: radiusFor(totals.in_total, theme),
    };
  });
}

/** Deep-linkable state <-> URL query parameters. */
export function stateToQuery(state: ViewState): string {
  const params = new URLSearchParams();
  params.set("dataset", state.datasetId);
  params.set("threshold", String(state.threshold));
  params.set("range", `${state.timeRange[0]}:${state.timeRange[1]}`);
  if (state.focal) {
    params.set("focal", state.focal);
  }
  params.set("k", String(state.highlightK));
  return params.toString();
}

export function stateFromQuery(query: string, bundle: Bundle): ViewState {
  const params = new URLSearchParams(query);
  const state = initialViewState(bundle);
  const dataset = params.get("dataset");
  if (dataset && bundle.datasets.some((d) => d.dataset_id === dataset)) {
    state.datasetId = dataset;
  }
  const threshold = Number(params.get("threshold"));
  if (Number.isFinite(threshold) && params.get("threshold") !== null && threshold >= 0) {
    state.threshold = threshold;
  }
  const range = params.get("range");
  if (range && /^-?\d+:-?\d+$/.test(range)) {
    const [lo, hi] = range.split(":").map(Number) as [number, number];
    if (lo <= hi) {
      state.timeRange = [lo, hi];
    }
  }
  const focal = params.get("focal");
  if (focal && bundle.authors.some((a) => a.author_id === focal)) {
    state.focal = focal;
  }
  const k = Number(params.get("k"));
  if (Number.isInteger(k) && k >= 1) {
    state.highlightK = k;
  }
  return state;
}
