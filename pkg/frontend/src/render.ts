// DOM rendering for the five views. Every number shown comes straight from
// a service payload; the only client-side arithmetic is chart scaling.

import type { Candidate, Recommendation } from "./api.js";
import { auditChart, trajectoryChart } from "./charts.js";
import { meanAbsoluteError, SessionView } from "./state.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function fmt(x: number | null | undefined, digits = 4): string {
  return x === null || x === undefined ? "-" : x.toFixed(digits);
}

export function renderStatus(view: SessionView, sessionId: string): void {
  el("status").innerHTML = `
    <span class="pill">session ${sessionId}</span>
    <span class="pill">model ${view.model}</span>
    <span class="pill">F1 ${fmt(view.currentF1)}</span>
    <span class="pill">budget ${fmt(view.spent, 1)} / ${fmt(view.budget, 1)}</span>
    <span class="pill">${view.acceptedSteps} accepted / ${view.rejectedSteps} reverted</span>
    ${view.terminal ? `<span class="pill terminal">${view.terminal}</span>` : ""}
  `;
}

function candidateCard(c: Candidate, fallback: boolean): string {
  return `
    <div class="candidate">
      <h3>${c.feature} <small>${c.error_type}${fallback ? " (fallback)" : ""}</small></h3>
      <dl>
        <dt>predicted F1</dt><dd>${fmt(c.predicted_f1)} &plusmn; ${fmt(c.uncertainty)}</dd>
        <dt>score</dt><dd>${c.score === null ? "free step" : fmt(c.score)}</dd>
        <dt>next-step cost</dt><dd>${fmt(c.cost, 1)}</dd>
      </dl>
    </div>`;
}

export function renderRecommendation(rec: Recommendation | null,
                                     mode: string): void {
  const host = el("recommendation");
  if (!rec) {
    host.innerHTML = `<p class="empty">no recommendation: the session is
      terminal or nothing is affordable</p>`;
    return;
  }
  const cells = (rec.priority_cells.train ?? [])
    .concat(rec.priority_cells.test ?? []);
  const editor = mode === "interactive" ? `
    <p>priority cells (probe-touched rows to clean first):</p>
    <div id="cell-editor">
      ${cells.slice(0, 12).map((row) => `
        <label>row ${row}
          <input data-row="${row}" placeholder="clean value or blank" />
        </label>`).join("")}
    </div>
    <button id="submit-cleaning">submit cleaned values</button>` : `
    <p>${cells.length} priority cells in this probe set</p>
    <button id="run-step">run one cleaning step</button>`;
  const alternatives = rec.alternatives.length === 0 ? "" : `
    <details><summary>${rec.alternatives.length} ranked alternatives</summary>
      ${rec.alternatives.map((a) => candidateCard(a, false)).join("")}
    </details>`;
  host.innerHTML = `
    ${candidateCard(rec, rec.fallback)}
    <p>remaining budget ${fmt(rec.remaining_budget, 1)}</p>
    ${editor}
    <button id="mark-clean">mark ${rec.feature} fully clean</button>
    ${alternatives}`;
}

export function renderTrajectory(view: SessionView,
                                 cleanedF1: number | null): void {
  el("trajectory").innerHTML =
    trajectoryChart(view.trajectory, cleanedF1, view.budget);
}

export function renderLedger(view: SessionView): void {
  const rows = view.ledger.map((entry) => `
    <tr class="${entry.accepted ? "accepted" : "reverted"}">
      <td>${entry.iteration}</td><td>${entry.feature}</td>
      <td>${entry.errorType}</td><td>${entry.cost}</td>
      <td>${entry.accepted ? "kept" : "reverted"}</td>
    </tr>`).join("");
  el("ledger").innerHTML = `
    <table>
      <thead><tr><th>iteration</th><th>feature</th><th>error type</th>
        <th>cost</th><th>outcome</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderAudit(view: SessionView): void {
  const mae = meanAbsoluteError(view.audit);
  el("audit").innerHTML = `
    <p>predicted (hollow) vs actual (solid) F1 per executed step;
       MAE ${mae === null ? "-" : mae.toFixed(4)}</p>
    ${auditChart(view.audit)}`;
}
