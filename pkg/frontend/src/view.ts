import type { SessionController } from './state';
import type { ReviewApi } from './api';
import type { SessionState } from './state';

const METRIC_LABELS: Record<string, string> = {
  readability: 'Readability & naturalness',
  adequacy: 'Adequacy & accuracy of the translation',
  grammatical: 'Grammatically correct?',
  real_words: 'All words real words?',
  notable_error: 'Notable translation error?',
  intelligibility: 'Intelligibility',
  naturalness_5: 'Naturalness',
};

/**
 * Renders the session into a root element and wires events back into the
 * controller. Keyboard shortcuts: digits set the focused scale's value and
 * move focus to the next metric; Enter submits when the form is complete.
 */
export class SessionView {
  private focusedMetric: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly controller: SessionController,
    private readonly api: ReviewApi,
  ) {
    controller.onChange((state) => this.render(state));
    this.root.addEventListener('keydown', (event) => this.onKeydown(event as KeyboardEvent));
  }

  private onKeydown(event: KeyboardEvent): void {
    const state = this.controller.snapshot();
    if (state.status !== 'task' || !state.task) return;
    if (event.key === 'Enter' && this.controller.isComplete()) {
      void this.controller.submit();
      return;
    }
    const digit = Number(event.key);
    if (!Number.isInteger(digit) || digit < 0 || digit > 9) return;
    const metric = this.focusedMetric ?? this.controller.requiredMetrics()[0];
    if (!metric) return;
    const scales = state.task.metrics.scales;
    const binary = state.task.metrics.binaries.includes(metric);
    if (binary) {
      if (digit === 0 || digit === 1) this.setAndAdvance(metric, digit);
    } else {
      const [lo, hi] = scales[metric];
      if (digit >= lo && digit <= hi) this.setAndAdvance(metric, digit);
    }
  }

  private setAndAdvance(metric: string, value: number): void {
    this.controller.setMetric(metric, value);
    const metrics = this.controller.requiredMetrics();
    const index = metrics.indexOf(metric);
    this.focusedMetric = metrics[Math.min(index + 1, metrics.length - 1)];
    this.render(this.controller.snapshot());
  }

  render(state: SessionState): void {
    this.root.textContent = '';
    switch (state.status) {
      case 'loading':
        this.root.appendChild(el('p', 'status', 'Loading next task...'));
        return;
      case 'done': {
        const total = state.progress?.total ?? 0;
        const box = el('div', 'done-screen');
        box.appendChild(el('h2', '', 'All done'));
        box.appendChild(el('p', '', `You rated ${total} items. Thank you!`));
        this.root.appendChild(box);
        return;
      }
      case 'error': {
        const banner = el('div', 'error-banner');
        banner.appendChild(el('p', '', state.errorMessage ?? 'Something went wrong.'));
        const retry = el('button', 'retry', 'Retry') as HTMLButtonElement;
        retry.addEventListener('click', () => void this.controller.retry());
        banner.appendChild(retry);
        this.root.appendChild(banner);
        return;
      }
      case 'task':
      case 'submitting':
        this.renderTask(state);
    }
  }

  private renderTask(state: SessionState): void {
    const task = state.task;
    if (!task) {
      this.root.appendChild(el('div', 'error-banner', 'Malformed task.'));
      return;
    }
    const form = el('div', 'task');

    const progress = state.progress;
    if (progress) {
      form.appendChild(
        el('p', 'progress', `Item ${progress.rated + 1} of ${progress.total}`),
      );
    }

    const item = el('div', 'item');
    item.appendChild(el('p', 'target-text', task.payload.target_text));
    if (task.payload.english_text) {
      item.appendChild(el('p', 'english-text', task.payload.english_text));
    }
    if (task.payload.audio_url) {
      const audio = document.createElement('audio');
      audio.className = 'clip';
      audio.controls = true;
      audio.src = this.api.audioUrl(task.payload.audio_url);
      item.appendChild(audio);
    }
    form.appendChild(item);

    if (state.errorMessage) {
      form.appendChild(el('p', 'validation-message', state.errorMessage));
    }

    for (const [name, [lo, hi]] of Object.entries(task.metrics.scales)) {
      form.appendChild(this.scaleControl(state, name, lo, hi));
    }
    for (const name of task.metrics.binaries) {
      form.appendChild(this.binaryControl(state, name));
    }

    const submit = el('button', 'submit', 'Submit') as HTMLButtonElement;
    submit.disabled = state.status === 'submitting' || !this.controller.isComplete();
    submit.addEventListener('click', () => void this.controller.submit());
    form.appendChild(submit);
    this.root.appendChild(form);
  }

  private scaleControl(state: SessionState, name: string, lo: number, hi: number) {
    const group = el('fieldset', `metric metric-${name}`);
    if (state.invalidFields.includes(name)) group.classList.add('invalid');
    group.appendChild(el('legend', '', `${METRIC_LABELS[name] ?? name} [${lo}-${hi}]`));
    for (let value = lo; value <= hi; value += 1) {
      const label = el('label', 'scale-option');
      const input = document.createElement('input');
      input.type = 'radio';
      input.name = name;
      input.value = String(value);
      input.checked = state.form[name] === value;
      input.addEventListener('change', () => {
        this.focusedMetric = name;
        this.controller.setMetric(name, value);
      });
      label.appendChild(input);
      label.appendChild(document.createTextNode(String(value)));
      group.appendChild(label);
    }
    group.addEventListener('click', () => {
      this.focusedMetric = name;
    });
    return group;
  }

  private binaryControl(state: SessionState, name: string) {
    const group = el('fieldset', `metric metric-${name}`);
    if (state.invalidFields.includes(name)) group.classList.add('invalid');
    group.appendChild(el('legend', '', METRIC_LABELS[name] ?? name));
    for (const [value, text] of [
      [1, 'Yes'],
      [0, 'No'],
    ] as const) {
      const label = el('label', 'binary-option');
      const input = document.createElement('input');
      input.type = 'radio';
      input.name = name;
      input.value = String(value);
      input.checked = state.form[name] === value;
      input.addEventListener('change', () => {
        this.focusedMetric = name;
        this.controller.setMetric(name, value);
      });
      label.appendChild(input);
      label.appendChild(document.createTextNode(text));
      group.appendChild(label);
    }
    return group;
  }
}

function el(tag: string, className = '', text = ''): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}
