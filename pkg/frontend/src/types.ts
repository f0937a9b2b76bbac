// Document shapes served by the failmap HTTP API. The UI never derives
// statistics itself; everything displayed comes from these payloads.

export interface NodeAddress {
  cell: number[];
  cluster: number;
}

export interface NodeStats {
  size: number;
  mean: Record<string, number>;
}

export interface GraphNodeDoc {
  id: number;
  address: NodeAddress;
  members: number[];
  stats: NodeStats;
}

export interface GraphEdgeDoc {
  source: number;
  target: number;
  shared_count: number;
}

export interface GraphDoc {
  schema: string;
  row_count: number;
  filter_names: string[];
  nodes: GraphNodeDoc[];
  edges: GraphEdgeDoc[];
  config?: unknown;
  config_hash?: string;
}

export interface ModeStats {
  size: number;
  accuracy: number;
  ground_truth_mode: number;
  prediction_distribution: Record<string, number> | null;
}

export interface ModeDoc {
  id: number;
  node_ids: number[];
  members: number[];
  stats: ModeStats;
  provenance: "automatic" | "manual";
}

export interface ModesDoc {
  schema: string;
  config_hash?: string;
  modes: ModeDoc[];
}

export interface TopFeature {
  column: number;
  name: string;
  ks: number;
}

export interface DiagnosticsEntry {
  reference: string;
  top_features: TopFeature[];
}

export interface ReportDoc {
  schema: string;
  config_hash: string;
  graph_summary: { nodes: number; edges: number; coverage: number; row_count: number };
  mode_table: {
    id: number;
    size: number;
    accuracy: number;
    ground_truth_mode: number;
    provenance: string;
  }[];
  ensemble_metrics: Record<string, unknown>;
  diagnostics: Record<string, DiagnosticsEntry>;
  warnings: string[];
}

export interface SelectionResponse {
  mode: ModeDoc;
  warnings: string[];
}
