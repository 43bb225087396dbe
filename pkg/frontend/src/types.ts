/** Payload shapes of the pathway service REST API.
 *
 * These mirror the JSON the service emits and accepts, field for field.
 * The UI never re-derives any of the numbers carried here; it only lays
 * them out.
 */

export interface DatasetInfo {
  id: string;
  name: string;
  cases: number;
  events: number;
  schema: string[];
  malformed: number;
}

export interface DatasetListEntry {
  name: string;
  id: string;
}

export interface DatasetList {
  datasets: DatasetListEntry[];
}

export interface LengthStats {
  count: number;
  median: number;
  q1: number;
  q3: number;
  iqr: number;
  outlier_threshold: number;
  outlier_count: number;
}

export interface DatasetStats {
  id: string;
  cases: number;
  events: number;
  lengths: LengthStats;
}

/** Column mapping sent alongside an uploaded event log. */
export interface ParseSpec {
  case_column: string;
  time_column: string;
  perspective_columns: Record<string, string>;
}

export interface UploadBody {
  name: string;
  format: "csv" | "jsonl";
  content: string;
  parse?: ParseSpec;
}

/** Server-side threshold names for the typicality filter. */
export interface ThresholdBody {
  theta_p: number;
  min_p: number;
  max_p: number | null;
  theta_o: number;
  min_o: number;
  max_o: number | null;
}

export interface PreviewBody {
  control: string;
  thresholds: ThresholdBody;
  sample_size?: number;
}

export interface ApplyBody extends PreviewBody {
  /** Name of the filtered dataset the apply step creates. */
  name: string;
}

export interface PreviewReport {
  typical_procedures: string[];
  typical_occupations: string[];
  passing_events: number | null;
  sample: Record<string, unknown>[];
}

export interface ApplyResult {
  id: string;
  name: string;
  cases: number;
  events: number;
  emptied_cases: string[];
}

export interface MagInfo {
  id: string;
  dataset: string;
  aspects: string[];
  patients: number;
  nodes: number;
  edges: number;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobInfo {
  id: string;
  kind: string;
  state: JobState;
  progress: number;
  result: string | null;
  error: string | null;
}

/** A graph node identity: one value per aspect, ordinal last. */
export type NodeId = (string | number)[];

export interface RelevanceParamsBody {
  w1: number;
  w2: number;
  alpha: number;
  clusters?: string;
  cluster_index?: number;
}

export interface NodeScore {
  node: NodeId;
  score: number;
}

export interface RelevanceScores {
  mag: string;
  params: { w1: number; w2: number; alpha: number };
  patients: number;
  scores: NodeScore[];
}

export interface SweepBody {
  w1_values: number[];
  w2_values: number[];
  alpha_values: number[];
  nodes?: NodeId[];
  clusters?: string;
  cluster_index?: number;
}

export interface SweepEntry {
  w1: number;
  w2: number;
  alpha: number;
  /** One score per entry of `SweepTable.nodes`, positionally. */
  scores: number[];
}

export interface SweepTable {
  nodes: NodeId[];
  entries: SweepEntry[];
}

export interface RenderOptionsBody {
  lane_aspect?: string;
  key_aspect?: string;
  min_edge_patients?: number;
  interval_bins?: number;
  show_endpoints?: boolean;
}

export interface ModelBody {
  relevance: RelevanceParamsBody;
  min_relevance?: number;
  max_relevance?: number;
  options?: RenderOptionsBody;
}

export interface ModelNode {
  /** JSON-encoded aspect tuple; unique within the document. */
  id: string;
  lane: string;
  column: number;
  key: string;
  label: string;
  relevance: number | null;
  virtual: boolean;
}

export interface ModelEdge {
  src: string;
  dst: string;
  frequency: number;
  patients: number;
  interval: { min: number; mean: number; max: number };
  color_bin: number;
}

export interface ModelLegend {
  lane_aspect: string;
  key_aspect: string;
  keys: string[];
  interval_bins: [number, number][];
}

export interface ModelDoc {
  lanes: string[];
  columns: number[];
  nodes: ModelNode[];
  edges: ModelEdge[];
  legend: ModelLegend;
}

export interface PairFrequency {
  pair: [string, string];
  frequency: number;
}

export interface ClusterProfile {
  label: string;
  patients: number;
  mean_length: number;
  std_length: number;
  top_pairs: PairFrequency[];
}

export interface ProfileDoc {
  n_singletons: number;
  clusters: ClusterProfile[];
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
