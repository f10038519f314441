/** In-flight rating form state — the only rating data ever held client-side.
 *
 * Invariant: submission is possible exactly when all four dimensions carry a
 * value; the DOM's submit button mirrors `complete`.
 */

import { DIMENSIONS, type Dimension, type RaterSample, type Scores } from "./types.js";

export class RatingFormState {
  sample: RaterSample | null = null;
  submitting = false;
  private readonly values = new Map<Dimension, number>();

  /** Install the next sample (or none) and drop any pending scores. */
  setSample(sample: RaterSample | null): void {
    this.sample = sample;
    this.values.clear();
    this.submitting = false;
  }

  set(dimension: Dimension, value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      throw new RangeError(
        `${dimension} must be an integer in 1..5, got ${value}`,
      );
    }
    this.values.set(dimension, value);
  }

  get(dimension: Dimension): number | null {
    return this.values.get(dimension) ?? null;
  }

  /** True exactly when every dimension is set; gates the submit button. */
  get complete(): boolean {
    return DIMENSIONS.every((d) => this.values.has(d));
  }

  scores(): Scores {
    if (!this.complete) {
      const missing = DIMENSIONS.filter((d) => !this.values.has(d));
      throw new Error(`form is incomplete: ${missing.join(", ")} unset`);
    }
    return Object.fromEntries(
      DIMENSIONS.map((d) => [d, this.values.get(d)]),
    ) as Scores;
  }
}
