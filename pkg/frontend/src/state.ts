// Client-side session view. It only reorganizes server-provided numbers for
// rendering; reloading the page rebuilds the identical view from /history.

import type { History, IterationRecord } from "./api.js";

export interface AuditPoint {
  step: number;
  feature: number;
  errorType: string;
  predicted: number;
  actual: number;
  accepted: boolean;
}

export interface LedgerRow {
  iteration: number;
  feature: string;
  errorType: string;
  cost: number;
  accepted: boolean;
}

export interface SessionView {
  trajectory: [number, number][];
  currentF1: number;
  budget: number;
  spent: number;
  remaining: number;
  terminal: string | null;
  version: number;
  features: { name: string; kind: string; fullyClean: boolean }[];
  ledger: LedgerRow[];
  audit: AuditPoint[];
  acceptedSteps: number;
  rejectedSteps: number;
  model: string;
}

export function fromHistory(history: History): SessionView {
  const names = history.features.map((f) => f.name);
  const ledger: LedgerRow[] = history.ledger.entries.map(
    ([iteration, feature, errorType, cost, accepted]) => ({
      iteration,
      feature: feature >= 0 && feature < names.length
        ? names[feature] : `#${feature}`,
      errorType,
      cost,
      accepted,
    }));
  const audit = auditPoints(history.iterations);
  return {
    trajectory: history.trajectory,
    currentF1: history.current_f1,
    budget: history.budget,
    spent: history.ledger.spent,
    remaining: history.budget - history.ledger.spent,
    terminal: history.terminal,
    version: history.version,
    features: history.features.map((f) => ({
      name: f.name, kind: f.kind, fullyClean: f.fully_clean,
    })),
    ledger,
    audit,
    acceptedSteps: audit.filter((p) => p.accepted).length,
    rejectedSteps: audit.filter((p) => !p.accepted).length,
    model: history.model.algorithm,
  };
}

export function auditPoints(iterations: IterationRecord[]): AuditPoint[] {
  const points: AuditPoint[] = [];
  for (const record of iterations) {
    for (const attempt of record.attempts) {
      points.push({
        step: points.length,
        feature: attempt.feature,
        errorType: attempt.error_type,
        predicted: attempt.predicted_f1,
        actual: attempt.actual_f1,
        accepted: attempt.accepted,
      });
    }
  }
  return points;
}

export function meanAbsoluteError(points: AuditPoint[]): number | null {
  if (points.length === 0) return null;
  const total = points.reduce(
    (acc, p) => acc + Math.abs(p.predicted - p.actual), 0);
  return total / points.length;
}
