/** Typed client for the review service /api surface. */

export interface VideoRef {
  id: string;
  source: string;
  frames: string[];
  duration_s?: number;
}

export interface Alteration {
  kind: string;
  original: string;
  replacement: string;
  category: string;
  span?: [number, number];
}

export interface AlteredDescription {
  base_id: string;
  altered: TripletBody | CaptionBody;
  alteration: Alteration;
}

export interface TripletBody {
  type: 'triplet';
  source_object: { label: string; category: string };
  relation: { label: string; category: string };
  target_object: { label: string; category: string };
}

export interface CaptionBody {
  type: 'caption';
  text: string;
}

export interface QAItem {
  id: string;
  video: VideoRef;
  question: string;
  gt_answer: string;
  k: 1 | -1;
  kind?: string;
  provenance?: AlteredDescription;
}

export interface ReviewItemPayload {
  item: QAItem;
  altered: AlteredDescription | null;
  original_description: string;
  frames: string[];
  status: 'pending' | 'pass' | 'filtered';
}

export interface Progress {
  total: number;
  pending: number;
  pass: number;
  filtered: number;
  decisions: number;
  ratings: number;
  rating_means: Record<string, number>;
}

export interface NextResponse {
  item: ReviewItemPayload | null;
  progress: Progress;
}

export interface Ack {
  ok: boolean;
  item_id: string;
  progress: Progress;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body; keep the status text */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ReviewApi {
  constructor(readonly base: string = '') {}

  nextItem(annotator: string): Promise<NextResponse> {
    const url = `${this.base}/api/queue/next?annotator=${encodeURIComponent(annotator)}`;
    return fetch(url).then((r) => asJson<NextResponse>(r));
  }

  submitDecision(itemId: string, verdict: 'pass' | 'filtered', annotator: string): Promise<Ack> {
    return fetch(`${this.base}/api/decisions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ item_id: itemId, verdict, annotator }),
    }).then((r) => asJson<Ack>(r));
  }

  submitRating(
    itemId: string,
    rubric: 'answerable' | 'unanswerable',
    score: number,
    annotator: string,
  ): Promise<Ack> {
    return fetch(`${this.base}/api/ratings`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ item_id: itemId, rubric, score, annotator }),
    }).then((r) => asJson<Ack>(r));
  }

  progress(): Promise<Progress> {
    return fetch(`${this.base}/api/progress`).then((r) => asJson<Progress>(r));
  }

  frameUrl(videoId: string, n: number): string {
    return `${this.base}/api/frames/${encodeURIComponent(videoId)}/${n}`;
  }
}
