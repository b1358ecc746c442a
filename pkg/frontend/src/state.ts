import { ReviewApi, ValidationError } from './api';
import type { FormValues, Progress, Task } from './types';

export type Status = 'loading' | 'task' | 'submitting' | 'done' | 'error';

export interface SessionState {
  status: Status;
  task: Task | null;
  form: FormValues;
  progress: Progress | null;
  /** validation fields to highlight on the current form */
  invalidFields: string[];
  /** message shown in the error banner (network failures are retryable) */
  errorMessage: string | null;
}

type Listener = (state: SessionState) => void;

/**
 * Session state machine: loading -> task -> submitting -> task | done,
 * with error as a retryable detour. No transition discards form values
 * unless a submission was acknowledged, so a rating in progress survives
 * network failures and server rejections.
 */
export class SessionController {
  private state: SessionState = {
    status: 'loading',
    task: null,
    form: {},
    progress: null,
    invalidFields: [],
    errorMessage: null,
  };
  private listeners: Listener[] = [];

  constructor(private readonly api: ReviewApi) {}

  snapshot(): SessionState {
    return { ...this.state, form: { ...this.state.form } };
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.snapshot());
    }
  }

  /** Metrics the current task requires, in display order. */
  requiredMetrics(): string[] {
    if (!this.state.task) return [];
    const metrics = this.state.task.metrics;
    return [...Object.keys(metrics.scales), ...metrics.binaries];
  }

  isComplete(): boolean {
    return this.requiredMetrics().every((name) => this.state.form[name] !== undefined);
  }

  setMetric(name: string, value: number): void {
    if (this.state.status !== 'task') return;
    this.update({
      form: { ...this.state.form, [name]: value },
      invalidFields: this.state.invalidFields.filter((f) => f !== name),
    });
  }

  async start(): Promise<void> {
    this.update({ status: 'loading', errorMessage: null });
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    try {
      const next = await this.api.next();
      if (next.done) {
        this.update({ status: 'done', task: null, form: {}, progress: next.progress });
      } else {
        this.update({
          status: 'task',
          task: next,
          form: {},
          progress: next.progress,
          invalidFields: [],
          errorMessage: null,
        });
      }
    } catch (error) {
      this.update({ status: 'error', errorMessage: String(error) });
    }
  }

  async submit(): Promise<void> {
    const task = this.state.task;
    if (this.state.status !== 'task' || !task || !this.isComplete()) return;
    this.update({ status: 'submitting' });
    try {
      await this.api.submit(task.item_id, this.state.form);
    } catch (error) {
      if (error instanceof ValidationError) {
        // highlight fields, keep the form for correction
        this.update({
          status: 'task',
          invalidFields: error.fields,
          errorMessage: error.message,
        });
      } else {
        // network failure: keep everything, offer retry
        this.update({ status: 'error', errorMessage: String(error) });
      }
      return;
    }
    await this.fetchNext();
  }

  /** Retry after a network failure without losing the form. */
  async retry(): Promise<void> {
    if (this.state.task) {
      this.update({ status: 'task', errorMessage: null });
    } else {
      await this.start();
    }
  }
}
