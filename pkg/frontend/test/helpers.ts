import type { RatingBackend } from "../src/api.js";
import type {
  NextResponse,
  Progress,
  RaterSample,
  RatingAck,
  Scores,
} from "../src/types.js";

/** Scripted stand-in for the HTTP client: queues of replies per endpoint,
 * Error entries are thrown. */
export class ScriptedBackend implements RatingBackend {
  nextQueue: Array<NextResponse | Error> = [];
  submitQueue: Array<RatingAck | Error> = [];
  progressValue: Progress = {
    session_id: "s1",
    total: 5,
    rated: 0,
    remaining: 5,
    complete: false,
  };
  readonly log: string[] = [];
  readonly submitted: Array<{ sampleId: string; scores: Scores }> = [];
  private nextRecordId = 1;

  async nextSample(): Promise<NextResponse> {
    this.log.push("next");
    const item = this.nextQueue.shift();
    if (item === undefined) {
      const { rated, total } = this.progressValue;
      return { complete: true, rated, total };
    }
    if (item instanceof Error) throw item;
    return item;
  }

  async submitRating(
    _sessionId: string,
    _rater: string,
    sampleId: string,
    scores: Scores,
  ): Promise<RatingAck> {
    this.log.push("submit");
    this.submitted.push({ sampleId, scores });
    const item = this.submitQueue.shift();
    if (item === undefined) {
      return { record_id: this.nextRecordId++, sample_id: sampleId };
    }
    if (item instanceof Error) throw item;
    return item;
  }

  async progress(): Promise<Progress> {
    this.log.push("progress");
    return this.progressValue;
  }
}

export function pendingNext(
  sample: RaterSample,
  rated = 0,
  total = 5,
): NextResponse {
  return { complete: false, sample, rated, total };
}

export const SAMPLE_ONE: RaterSample = {
  sample_id: "p00aa11bb22cc",
  source_sentences: [
    "Participants received subcutaneous injections for twelve weeks.",
    "Serum markers were assayed before and after the regimen.",
    "",
  ],
  adapted_sentences: [
    "People in the study got shots under the skin for twelve weeks.",
    "Doctors tested their blood before and after the treatment.",
    "",
  ],
};

export const SAMPLE_TWO: RaterSample = {
  sample_id: "p33dd44ee55ff",
  source_sentences: ["Hepatic enzymes normalized within one month."],
  adapted_sentences: ["Liver tests went back to normal within a month."],
};

/** Strings that must never appear in rater-facing DOM. */
export const SYSTEM_MARKERS = [
  "baseline",
  "two_agents",
  "two-agents",
  "finetuned",
  "fine-tuned",
  "ground_truth",
  "ground truth",
  "gpt-4o",
  "system_id",
];

export function assertBlinded(element: HTMLElement): string[] {
  const html = element.innerHTML.toLowerCase();
  return SYSTEM_MARKERS.filter((marker) => html.includes(marker));
}
