// Cockpit bootstrap: wire the form, the controller, and the polling loop.

import { CleanedCell, SessionApi } from "./api.js";
import { SessionController } from "./controller.js";
import {
  renderAudit, renderLedger, renderRecommendation, renderStatus,
  renderTrajectory,
} from "./render.js";

const baseUrl = new URLSearchParams(location.search).get("api")
  ?? "http://127.0.0.1:8000";
const api = new SessionApi(baseUrl);
let mode = "simulated";

const controller = new SessionController(api, {
  onView: (view) => {
    renderStatus(view, controller.sessionId ?? "-");
    renderTrajectory(view, null);
    renderLedger(view);
    renderAudit(view);
    localStorage.setItem("cleanguide-session", controller.sessionId ?? "");
  },
  onRecommendation: (rec) => {
    renderRecommendation(rec, mode);
    wireRecommendationButtons();
  },
  onNotice: (message) => notify(message),
});

function notify(message: string, retriable = false): void {
  const host = document.getElementById("notice")!;
  host.innerHTML = `<p class="notice">${message}${
    retriable ? ' <button id="retry">retry</button>' : ""}</p>`;
  const retry = document.getElementById("retry");
  if (retry) retry.addEventListener("click", () => void safeReload());
  if (!retriable) setTimeout(() => (host.innerHTML = ""), 6000);
}

async function safeReload(): Promise<void> {
  try {
    await controller.reload();
    document.getElementById("notice")!.innerHTML = "";
  } catch (err) {
    notify(`reload failed: ${(err as Error).message}`, true);
  }
}

function wireRecommendationButtons(): void {
  const run = document.getElementById("run-step");
  if (run) {
    run.addEventListener("click", async () => {
      run.setAttribute("disabled", "1");
      try {
        const outcome = await controller.runStep();
        notify(outcome.accepted
          ? `step accepted, F1 now ${outcome.new_f1.toFixed(4)}`
          : "step reverted; cleaned values buffered");
      } catch (err) {
        notify(`step failed: ${(err as Error).message}`, true);
      }
    });
  }
  const submit = document.getElementById("submit-cleaning");
  if (submit) {
    submit.addEventListener("click", async () => {
      const rec = controller.recommendation;
      if (!rec) return;
      const cells: CleanedCell[] = [];
      document.querySelectorAll<HTMLInputElement>("#cell-editor input")
        .forEach((input) => {
          if (input.value.trim() === "") return;
          const raw = input.value.trim();
          const numeric = Number(raw);
          cells.push({
            row: Number(input.dataset.row),
            value: Number.isFinite(numeric) ? numeric : raw,
          });
        });
      if (cells.length === 0) {
        notify("enter at least one cleaned value");
        return;
      }
      try {
        const outcome = await controller.submitCleaning(
          rec.feature, rec.error_type, cells);
        notify(outcome.accepted
          ? `cleaning kept, F1 now ${outcome.new_f1.toFixed(4)}`
          : "cleaning lowered F1: reverted and buffered");
      } catch (err) {
        notify(`cleaning failed: ${(err as Error).message}`, true);
      }
    });
  }
  const mark = document.getElementById("mark-clean");
  if (mark) {
    mark.addEventListener("click", async () => {
      const rec = controller.recommendation;
      if (!rec) return;
      await controller.markFullyClean(rec.feature);
      notify(`${rec.feature} marked fully clean`);
    });
  }
}

function wireNewSessionForm(): void {
  const form = document.getElementById("new-session") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    mode = String(data.get("mode") ?? "simulated");
    const csv = String(data.get("csv") ?? "").trim();
    const schemaText = String(data.get("schema") ?? "").trim();
    try {
      await controller.create({
        mode: mode as "simulated" | "interactive",
        algorithm: String(data.get("algorithm") ?? "logreg"),
        budget: Number(data.get("budget") ?? 20),
        seed: Number(data.get("seed") ?? 0),
        ...(csv
          ? { csv_text: csv, schema: JSON.parse(schemaText || "{}") }
          : {
              synthetic: { rows: 1000, informative: 3, noise: 2, classes: 2,
                           seed: Number(data.get("seed") ?? 0) },
              pre_pollution: { mean: 0.1, cap: 0.5,
                               seed: Number(data.get("seed") ?? 0) },
            }),
      });
      notify("session created");
    } catch (err) {
      notify(`create failed: ${(err as Error).message}`, true);
    }
  });
}

async function poll(): Promise<void> {
  if (!controller.sessionId || controller.view?.terminal) return;
  try {
    const history = await api.history(controller.sessionId);
    if (history.version !== controller.view?.version) await safeReload();
  } catch {
    /* transient poll errors surface on the next user action */
  }
}

wireNewSessionForm();
const existing = localStorage.getItem("cleanguide-session");
if (existing) {
  controller.attach(existing).catch(() => {
    localStorage.removeItem("cleanguide-session");
  });
}
setInterval(() => void poll(), 3000);
