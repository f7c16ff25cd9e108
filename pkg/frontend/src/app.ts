/** Review loop UI: fetch next item, render, submit decisions/ratings, advance.
 *
 * All state lives on the server; the client only mirrors the current item and
 * progress counters, so a reload always reconstructs the same view from /api.
 */

import {
  AlteredDescription,
  ApiError,
  Progress,
  ReviewApi,
  ReviewItemPayload,
} from './api';
import { rubricFor, rubricRows } from './rubric';

export interface AppOptions {
  apiBase?: string;
  annotator?: string;
  frameCount?: number;
}

export interface ViewState {
  current: ReviewItemPayload | null;
  progress: Progress | null;
  busy: boolean;
  error: string | null;
  done: boolean;
  mode: 'decide' | 'rate';
  selectedScore: number | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderDescription(altered: AlteredDescription['altered']): string {
  if (altered.type === 'triplet') {
    return `${altered.source_object.label} ${altered.relation.label} ${altered.target_object.label}`;
  }
  return altered.text;
}

function isEditable(target: EventTarget | null): boolean {
  if (!(target instanceof HTMLElement)) return false;
  const tag = target.tagName.toLowerCase();
  return target.isContentEditable || tag === 'input' || tag === 'textarea' || tag === 'select';
}

export class ReviewApp {
  readonly api: ReviewApi;
  readonly state: ViewState = {
    current: null,
    progress: null,
    busy: false,
    error: null,
    done: false,
    mode: 'decide',
    selectedScore: null,
  };
  annotator: string;
  private readonly frameCount: number;
  private readonly root: HTMLElement;
  private readonly keyHandler = (e: KeyboardEvent) => this.onKey(e);

  constructor(root: HTMLElement, opts: AppOptions = {}) {
    this.root = root;
    this.api = new ReviewApi(opts.apiBase ?? '');
    this.annotator = opts.annotator ?? 'annotator';
    this.frameCount = opts.frameCount ?? 8;
    document.addEventListener('keydown', this.keyHandler);
    this.render();
  }

  destroy(): void {
    document.removeEventListener('keydown', this.keyHandler);
    this.root.replaceChildren();
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    this.state.error = null;
    try {
      const next = await this.api.nextItem(this.annotator);
      this.state.current = next.item;
      this.state.progress = next.progress;
      this.state.done = next.item === null;
      this.state.selectedScore = null;
    } catch (err) {
      this.state.error = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }

  /** One ack per click: the buttons are disabled until the server answers. */
  async submitDecision(verdict: 'pass' | 'filtered'): Promise<void> {
    const item = this.state.current;
    if (!item || this.state.busy) return;
    this.state.busy = true;
    this.render();
    try {
      const ack = await this.api.submitDecision(item.item.id, verdict, this.annotator);
      this.state.progress = ack.progress;
      this.state.busy = false;
      await this.loadNext();
    } catch (err) {
      this.state.busy = false;
      this.state.error = err instanceof Error ? err.message : String(err);
      this.render();
    }
  }

  async submitRating(): Promise<void> {
    const item = this.state.current;
    const score = this.state.selectedScore;
    if (!item || this.state.busy || score === null) return;
    this.state.busy = true;
    this.render();
    try {
      const ack = await this.api.submitRating(
        item.item.id,
        rubricFor(item.item.k),
        score,
        this.annotator,
      );
      this.state.progress = ack.progress;
      this.state.busy = false;
      await this.loadNext();
    } catch (err) {
      this.state.busy = false;
      this.state.error = err instanceof ApiError ? err.message : String(err);
      this.render();
    }
  }

  setMode(mode: 'decide' | 'rate'): void {
    this.state.mode = mode;
    this.state.selectedScore = null;
    this.render();
  }

  private onKey(e: KeyboardEvent): void {
    if (isEditable(e.target) || this.state.mode !== 'decide') return;
    if (e.key === 'p') void this.submitDecision('pass');
    if (e.key === 'f') void this.submitDecision('filtered');
  }

  render(): void {
    const { current, progress, busy, error, done, mode } = this.state;
    this.root.replaceChildren();

    const header = el('header', { class: 'topbar' });
    header.append(el('h1', {}, 'Answerability review'));
    const annotatorInput = el('input', {
      id: 'annotator-input',
      value: this.annotator,
      'aria-label': 'annotator name',
    });
    annotatorInput.addEventListener('change', () => {
      this.annotator = annotatorInput.value || 'annotator';
      void this.loadNext();
    });
    header.append(annotatorInput);

    const modeToggle = el('button', { id: 'mode-toggle' },
      mode === 'decide' ? 'Switch to rating' : 'Switch to filtering');
    modeToggle.addEventListener('click', () => this.setMode(mode === 'decide' ? 'rate' : 'decide'));
    header.append(modeToggle);
    this.root.append(header);

    if (error) {
      const banner = el('div', { id: 'error-banner', role: 'alert' }, `Service error: ${error}`);
      const retry = el('button', { id: 'btn-retry' }, 'Retry');
      retry.addEventListener('click', () => void this.loadNext());
      banner.append(retry);
      this.root.append(banner);
    }

    if (progress) {
      const bar = el('div', { id: 'progress' });
      bar.append(
        el('span', { id: 'progress-pending' }, `pending: ${progress.pending}`),
        el('span', { id: 'progress-pass' }, `pass: ${progress.pass}`),
        el('span', { id: 'progress-filtered' }, `filtered: ${progress.filtered}`),
      );
      this.root.append(bar);
    }

    if (done) {
      this.root.append(el('p', { id: 'all-done' }, 'No items left for this annotator.'));
      return;
    }
    if (!current) {
      this.root.append(el('p', { id: 'loading' }, 'Loading…'));
      return;
    }

    const strip = el('div', { id: 'frame-strip' });
    const n = Math.min(this.frameCount, current.frames.length || current.item.video.frames.length);
    for (let i = 0; i < n; i++) {
      strip.append(
        el('img', {
          class: 'frame',
          src: this.api.frameUrl(current.item.video.id, i),
          alt: `frame ${i}`,
        }),
      );
    }
    this.root.append(strip);

    const details = el('section', { id: 'item-card' });
    details.append(
      el('p', { id: 'original-desc' }, `Original: ${current.original_description}`),
    );
    if (current.altered) {
      const alteredText = renderDescription(current.altered.altered);
      const a = current.altered.alteration;
      details.append(
        el('p', { id: 'altered-desc' }, `Altered: ${alteredText}`),
        el('p', { id: 'alteration' }, `Change: ${a.original} => ${a.replacement} (${a.kind})`),
      );
    }
    details.append(
      el('p', { id: 'question' }, `Q: ${current.item.question}`),
      el('p', { id: 'gt-answer' }, `A: ${current.item.gt_answer}`),
    );
    this.root.append(details);

    if (mode === 'decide') {
      const controls = el('div', { id: 'decision-controls' });
      const passBtn = el('button', { id: 'btn-pass' }, 'Pass (p)');
      const filterBtn = el('button', { id: 'btn-filtered' }, 'Filtered (f)');
      passBtn.disabled = busy;
      filterBtn.disabled = busy;
      passBtn.addEventListener('click', () => void this.submitDecision('pass'));
      filterBtn.addEventListener('click', () => void this.submitDecision('filtered'));
      controls.append(passBtn, filterBtn);
      this.root.append(controls);
    } else {
      const rubric = rubricFor(current.item.k);
      const table = el('div', { id: 'rubric' });
      for (const row of rubricRows(rubric)) {
        const rowEl = el('label', { class: 'rubric-row' });
        const radio = el('input', {
          type: 'radio',
          name: 'score',
          value: String(row.score),
        });
        radio.checked = this.state.selectedScore === row.score;
        radio.addEventListener('change', () => {
          this.state.selectedScore = row.score;
        });
        rowEl.append(radio, el('span', {}, `${row.score} - ${row.text}`));
        table.append(rowEl);
      }
      const submit = el('button', { id: 'btn-rate' }, 'Submit rating');
      submit.disabled = busy;
      submit.addEventListener('click', () => void this.submitRating());
      table.append(submit);
      this.root.append(table);
    }
  }
}

export function mountApp(root: HTMLElement, opts: AppOptions = {}): ReviewApp {
  return new ReviewApp(root, opts);
}
