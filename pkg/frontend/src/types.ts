/** reviewer/v1 message shapes (fields flat beside the envelope). */

export interface Envelope {
  v: string;
  seq: number;
  t: number;
  type: string;
}

export interface ClustersMsg extends Envelope {
  type: "clusters";
  movements: string[];
  centroids: Record<string, [number, number, number]>;
  points: Record<string, [number, number, number][]>;
  provenance: string;
}

export interface Cursor3dMsg extends Envelope {
  type: "cursor3d";
  p: [number, number, number];
  label: string;
}

export interface DecisionMsg extends Envelope {
  type: "decision";
  label: string;
  winning_axis: string | null;
  t_star: number;
  distance: number;
  margin: number | null;
}

export interface FltStateMsg extends Envelope {
  type: "flt_state";
  trial: number;
  prompt: string;
  cursor: [number, number];
  target: [number, number];
  half_width: number;
  elapsed_s: number;
  dwell_s: number;
  started: boolean;
  outcome: "success" | "timeout" | null;
  location: number | null;
  time_limit_s: number;
}

export interface SessionStateMsg extends Envelope {
  type: "session_state";
  phase: "calibration" | "exploration" | "assessment" | "done";
  session: number;
  stage: string;
  movements: string[];
  collected: string[];
  nr: number;
  t_d_s: number;
  t_max_s: number;
  ntt: number;
  trials_done: number;
  trials_total: number;
  provenance: string | null;
}

export interface ErrorMsg extends Envelope {
  type: "error";
  message: string;
  command?: string;
}

export type ServerMessage =
  | ClustersMsg
  | Cursor3dMsg
  | DecisionMsg
  | FltStateMsg
  | SessionStateMsg
  | ErrorMsg;

export type CommandType =
  | "subscribe"
  | "start_calibration"
  | "collect"
  | "recalibrate"
  | "end_exploration"
  | "start_trial";
