export interface BundleMeta {
  generated_at: string;
  tool_version: string;
  config_hash: string;
}

export interface BundleAuthor {
  author_id: string;
  display_name: string;
  birth_year: number;
  death_year: number;
}

export interface BundleEdge {
  citing: string;
  cited: string;
  weight: number;
}

export interface NodeTotals {
  in_total: number;
  out_total: number;
}

export interface BundleDataset {
  dataset_id: string;
  label: string;
  nodes: string[];
  edges: BundleEdge[];
  per_node: Record<string, NodeTotals>;
}

export interface Bundle {
  meta: BundleMeta;
  authors: BundleAuthor[];
  datasets: BundleDataset[];
}

/** Everything the UI needs to draw one view; pure data, atomically replaced. */
export interface ViewState {
  datasetId: string;
  threshold: number;
  timeRange: [number, number];
  focal: string | null;
  highlightK: number;
  selection: Set<string>;
}

export interface LayoutPoint {
  authorId: string;
  x: number; // birth year
  y: number; // outgoing reference total under the active dataset
  radius: number;
}

export interface RadiusTheme {
  rMin: number;
  scale: number;
}

export const DEFAULT_THEME: RadiusTheme = { rMin: 3, scale: 4 };

export const DEFAULT_EDGE_RENDER_CAP = 5000;
