/** Controller tying the API client, form state and DOM views together.
 *
 * All rating state is authoritative on the server: the app only holds the
 * in-flight form, so reloading the page resumes at whatever the server says
 * is the next unrated sample.
 */

import {
  ApiRequestError,
  MalformedPayloadError,
  type RatingBackend,
} from "./api.js";
import { RatingFormState } from "./state.js";
import { DIMENSIONS, type Dimension } from "./types.js";
import * as ui from "./ui.js";

export interface SessionHandle {
  sessionId: string;
  rater: string;
}

export class RatingApp {
  readonly form = new RatingFormState();
  private activeIndex = 0;
  private inflight: Promise<void> = Promise.resolve();
  private readonly bannerHost: HTMLElement;
  private readonly progressHost: HTMLElement;
  private readonly mainHost: HTMLElement;
  private readonly keyHandler = (event: KeyboardEvent) => this.onKey(event);

  constructor(
    private readonly root: HTMLElement,
    private readonly api: RatingBackend,
    private readonly session: SessionHandle,
  ) {
    root.replaceChildren();
    this.bannerHost = document.createElement("div");
    this.bannerHost.className = "banner-host";
    this.progressHost = document.createElement("div");
    this.progressHost.className = "progress-host";
    this.mainHost = document.createElement("main");
    this.mainHost.className = "main-host";
    root.append(this.bannerHost, this.progressHost, this.mainHost);
    document.addEventListener("keydown", this.keyHandler);
  }

  destroy(): void {
    document.removeEventListener("keydown", this.keyHandler);
  }

  get activeDimension(): Dimension {
    return DIMENSIONS[this.activeIndex];
  }

  /** Resolves once every operation started so far has settled. */
  idle(): Promise<void> {
    return this.inflight;
  }

  start(): Promise<void> {
    return this.queue(() => this.refresh());
  }

  /** Serialize async operations so renders never interleave. */
  private queue(op: () => Promise<void>): Promise<void> {
    const next = this.inflight.then(op);
    this.inflight = next;
    return next;
  }

  private async refresh(): Promise<void> {
    const { sessionId, rater } = this.session;
    try {
      const next = await this.api.nextSample(sessionId, rater);
      const progress = await this.api.progress(sessionId, rater);
      ui.clearBanner(this.bannerHost);
      ui.renderProgress(this.progressHost, progress.rated, progress.total);
      if (next.complete) {
        this.form.setSample(null);
        ui.renderCompletion(this.mainHost, progress.total);
      } else {
        this.form.setSample(next.sample);
        this.activeIndex = 0;
        this.renderForm();
      }
    } catch (error) {
      this.showFailure(error);
    }
  }

  private async doSubmit(): Promise<void> {
    const sample = this.form.sample;
    if (sample === null || !this.form.complete || this.form.submitting) return;
    const scores = this.form.scores();
    this.form.submitting = true;
    this.renderForm();
    try {
      await this.api.submitRating(
        this.session.sessionId,
        this.session.rater,
        sample.sample_id,
        scores,
      );
    } catch (error) {
      this.form.submitting = false;
      if (error instanceof ApiRequestError) {
        // Duplicate or out-of-range: show the server's message inline and
        // keep the form exactly as the rater left it.
        this.renderForm(error.message);
      } else {
        this.renderForm();
        this.showFailure(error);
      }
      return;
    }
    await this.refresh();
  }

  private renderForm(errorMessage = ""): void {
    ui.renderSample(this.mainHost, this.form, this.activeIndex, errorMessage, {
      onScore: (dimension, value) => {
        this.form.set(dimension, value);
        this.advanceFrom(dimension);
        this.renderForm();
      },
      onSubmit: () => void this.queue(() => this.doSubmit()),
    });
  }

  private advanceFrom(dimension: Dimension): void {
    const index = DIMENSIONS.indexOf(dimension);
    this.activeIndex = Math.min(index + 1, DIMENSIONS.length - 1);
  }

  private showFailure(error: unknown): void {
    let message: string;
    if (error instanceof MalformedPayloadError) {
      message = `The server sent a sample this page cannot display (${error.message}).`;
    } else if (error instanceof ApiRequestError) {
      message = `The rating service reported an error (${error.code}): ${error.message}`;
    } else {
      message = "Could not reach the rating service. Check your connection and retry.";
    }
    ui.renderBanner(this.bannerHost, message, () =>
      void this.queue(() => this.refresh()),
    );
  }

  private onKey(event: KeyboardEvent): void {
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) {
      return;
    }
    if (this.form.sample === null || this.form.submitting) return;
    const { key } = event;
    if (key >= "1" && key <= "5" && key.length === 1) {
      const dimension = DIMENSIONS[this.activeIndex];
      this.form.set(dimension, Number(key));
      this.advanceFrom(dimension);
      this.renderForm();
      event.preventDefault();
    } else if (key === "ArrowDown" || key === "ArrowUp") {
      const delta = key === "ArrowDown" ? 1 : -1;
      this.activeIndex = Math.min(
        DIMENSIONS.length - 1,
        Math.max(0, this.activeIndex + delta),
      );
      this.renderForm();
      event.preventDefault();
    } else if (key === "Enter" && this.form.complete) {
      event.preventDefault();
      void this.queue(() => this.doSubmit());
    }
  }
}
