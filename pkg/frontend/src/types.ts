/** Shapes exchanged with the rating service. */

export interface MetricsSchema {
  modality: 'text' | 'tts_audio';
  /** metric name -> [min, max] for 1-7 / 1-5 scales */
  scales: Record<string, [number, number]>;
  /** yes/no metrics */
  binaries: string[];
}

export interface TaskPayload {
  target_text: string;
  english_text?: string;
  audio_url?: string;
}

export interface Progress {
  rated: number;
  total: number;
}

export interface Task {
  done: false;
  item_id: string;
  payload: TaskPayload;
  metrics_schema: string;
  metrics: MetricsSchema;
  progress: Progress;
}

export interface DoneNotice {
  done: true;
  progress: Progress;
}

export type NextResponse = Task | DoneNotice;

/** Metric values chosen in the form; binaries are 0/1. */
export type FormValues = Record<string, number>;

export interface SubmitAck {
  ok: boolean;
  audit: number;
}
