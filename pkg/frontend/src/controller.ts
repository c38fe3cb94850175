// Session controller: the single action layer between the views and the
// service. The scripted end-to-end test drives sessions through this exact
// code path, so UI behavior and test behavior cannot drift apart.

import {
  ApiError, CleanedCell, CleaningResponse, History, NewSessionRequest,
  Recommendation, SessionApi,
} from "./api.js";
import { fromHistory, SessionView } from "./state.js";

export interface ControllerEvents {
  onView?: (view: SessionView) => void;
  onRecommendation?: (rec: Recommendation | null) => void;
  onNotice?: (message: string, retriable: boolean) => void;
}

export class SessionController {
  sessionId: string | null = null;
  view: SessionView | null = null;
  recommendation: Recommendation | null = null;

  constructor(private api: SessionApi, private events: ControllerEvents = {}) {}

  async create(request: NewSessionRequest): Promise<string> {
    const created = await this.api.createSession(request);
    this.sessionId = created.session_id;
    await this.reload();
    return created.session_id;
  }

  async attach(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.reload();
  }

  /** Rebuild the whole view from /history (also used on page reload). */
  async reload(): Promise<SessionView> {
    const history = await this.api.history(this.required());
    this.view = fromHistory(history);
    this.events.onView?.(this.view);
    await this.refreshRecommendation();
    return this.view;
  }

  async refreshRecommendation(): Promise<Recommendation | null> {
    try {
      this.recommendation = await this.api.recommendation(this.required());
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.recommendation = null;  // terminal or nothing affordable
      } else {
        throw err;
      }
    }
    this.events.onRecommendation?.(this.recommendation);
    return this.recommendation;
  }

  /** Simulated mode: run one full engine iteration. */
  async runStep(): Promise<CleaningResponse> {
    const response = await this.api.cleaning(this.required(), {
      version: this.view?.version,
    });
    await this.reload();
    return response;
  }

  /** Interactive mode: submit cleaned values for the shown candidate. */
  async submitCleaning(feature: string, errorType: string,
                       cells: CleanedCell[]): Promise<CleaningResponse> {
    const response = await this.api.cleaning(this.required(), {
      feature,
      error_type: errorType,
      cleaned_cells: cells,
      version: this.view?.version,
    });
    if (response.notice) this.events.onNotice?.(response.notice, false);
    await this.reload();
    return response;
  }

  async markFullyClean(feature: string): Promise<void> {
    await this.api.cleaning(this.required(), {
      feature,
      mark_fully_clean: true,
      version: this.view?.version,
    });
    await this.reload();
  }

  /** Drive a simulated session to its terminal state; returns the history. */
  async runToCompletion(maxSteps = 1000): Promise<History> {
    for (let i = 0; i < maxSteps; i++) {
      if (this.view?.terminal) break;
      try {
        await this.runStep();
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) break;
        throw err;
      }
    }
    return this.api.history(this.required());
  }

  private required(): string {
    if (!this.sessionId) throw new Error("no session attached");
    return this.sessionId;
  }
}
