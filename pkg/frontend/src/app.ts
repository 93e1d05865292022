/**
 * Single-page diagnosis flow: pick a photo, upload it, read the result
 * card. All displayed diagnosis/remedy text comes from the API payload;
 * the language toggle only switches which field of the payload is shown.
 */

import { ApiError, PredictionResponse, predictImage } from './api.js';
import { LABELS, Language } from './i18n.js';

export type Phase = 'idle' | 'uploading' | 'result' | 'error';

export interface UiState {
  phase: Phase;
  file: File | null;
  prediction: PredictionResponse | null;
  language: Language;
  error: string | null;
}

function el<T extends HTMLElement>(doc: Document, id: string): T {
  const node = doc.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

export class CarrotCureApp {
  state: UiState = {
    phase: 'idle',
    file: null,
    prediction: null,
    language: 'en',
    error: null,
  };

  constructor(
    private readonly doc: Document,
    private readonly predict: typeof predictImage = predictImage,
  ) {}

  mount(): void {
    const input = el<HTMLInputElement>(this.doc, 'file-input');
    input.addEventListener('change', () => {
      this.selectFile(input.files && input.files[0] ? input.files[0] : null);
    });
    el<HTMLFormElement>(this.doc, 'upload-form').addEventListener('submit', (ev) => {
      ev.preventDefault();
      void this.submit();
    });
    el<HTMLButtonElement>(this.doc, 'lang-toggle').addEventListener('click', () => {
      this.toggleLanguage();
    });
    el<HTMLButtonElement>(this.doc, 'error-dismiss').addEventListener('click', () => {
      this.dismissError();
    });
    el<HTMLButtonElement>(this.doc, 'error-retry').addEventListener('click', () => {
      void this.submit();
    });
    this.render();
  }

  /** Client-side gate: only image files ever reach the network. */
  selectFile(file: File | null): void {
    if (file && !file.type.startsWith('image/')) {
      this.state = {
        ...this.state,
        file: null,
        phase: 'error',
        error: LABELS[this.state.language].notAnImage,
      };
      this.render();
      return;
    }
    this.state = { ...this.state, file };
    if (this.state.phase === 'error') {
      this.state.phase = this.state.prediction ? 'result' : 'idle';
      this.state.error = null;
    }
    this.render();
  }

  async submit(): Promise<void> {
    const { file } = this.state;
    if (!file || this.state.phase === 'uploading') {
      return;
    }
    this.state = { ...this.state, phase: 'uploading', error: null };
    this.render();
    try {
      const prediction = await this.predict(file);
      this.state = { ...this.state, phase: 'result', prediction, error: null };
    } catch (err) {
      const message =
        err instanceof ApiError ? err.message : 'Unexpected error during upload.';
      this.state = { ...this.state, phase: 'error', error: message };
    }
    this.render();
  }

  /** Swaps every displayed string between languages; keeps the result. */
  toggleLanguage(): void {
    this.state = {
      ...this.state,
      language: this.state.language === 'en' ? 'bn' : 'en',
    };
    this.render();
  }

  dismissError(): void {
    this.state = {
      ...this.state,
      phase: this.state.prediction ? 'result' : 'idle',
      error: null,
    };
    this.render();
  }

  render(): void {
    const doc = this.doc;
    const labels = LABELS[this.state.language];

    el(doc, 'title').textContent = labels.title;
    el(doc, 'tagline').textContent = labels.tagline;
    el(doc, 'lang-toggle').textContent = labels.toggleLabel;
    el(doc, 'upload-label').textContent = labels.uploadPrompt;

    const submit = el<HTMLButtonElement>(doc, 'submit-btn');
    submit.textContent =
      this.state.phase === 'uploading' ? labels.uploading : labels.analyze;
    submit.disabled = this.state.phase === 'uploading' || !this.state.file;

    const banner = el(doc, 'error-banner');
    banner.hidden = this.state.phase !== 'error';
    el(doc, 'error-message').textContent = this.state.error ?? '';
    el(doc, 'error-retry').textContent = labels.retry;
    el(doc, 'error-dismiss').textContent = labels.dismiss;

    const card = el(doc, 'result-card');
    const prediction = this.state.prediction;
    card.hidden = !(this.state.phase === 'result' && prediction);
    if (!prediction) {
      return;
    }

    const remedy = prediction.remedy;
    const diseaseName =
      this.state.language === 'en' ? remedy.disease_name_en : remedy.disease_name_bn;
    const cure = this.state.language === 'en' ? remedy.cure_en : remedy.cure_bn;

    el(doc, 'diagnosis-heading').textContent = labels.diagnosis;
    el(doc, 'disease-name').textContent = diseaseName;
    el(doc, 'confidence').textContent =
      `${labels.confidence}: ${(prediction.confidence * 100).toFixed(1)}%`;
    el(doc, 'prob-heading').textContent = labels.probabilities;
    el(doc, 'cure-heading').textContent = labels.cureHeading;
    el(doc, 'cure-text').textContent = cure;
    el(doc, 'medicine-heading').textContent = labels.medicineHeading;
    el(doc, 'medicine-text').textContent = remedy.medicine;

    const bars = el(doc, 'prob-bars');
    bars.textContent = '';
    for (const [key, value] of Object.entries(prediction.probabilities)) {
      const row = doc.createElement('li');
      row.className = 'prob-row';

      const name = doc.createElement('span');
      name.className = 'prob-key';
      name.textContent = key;

      const track = doc.createElement('span');
      track.className = 'prob-track';
      const fill = doc.createElement('span');
      fill.className = 'prob-fill';
      fill.style.width = `${(value * 100).toFixed(1)}%`;
      track.appendChild(fill);

      const pct = doc.createElement('span');
      pct.className = 'prob-pct';
      pct.textContent = `${(value * 100).toFixed(1)}%`;

      row.append(name, track, pct);
      bars.appendChild(row);
    }
  }
}

export function initApp(doc: Document): CarrotCureApp {
  const app = new CarrotCureApp(doc);
  app.mount();
  return app;
}
