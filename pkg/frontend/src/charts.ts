// Hand-rolled SVG line charts: pure string builders, testable without a DOM.

export interface ChartFrame {
  width: number;
  height: number;
  padding: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function frameFor(points: [number, number][], width = 520,
                         height = 220, padding = 34): ChartFrame {
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const yMin = Math.min(...ys, 1.0);
  const yMax = Math.max(...ys, 0.0);
  const span = Math.max(yMax - yMin, 0.02);
  return {
    width, height, padding,
    xMax: Math.max(...xs, 1),
    yMin: Math.max(0, yMin - span * 0.15),
    yMax: Math.min(1, yMax + span * 0.15),
  };
}

export function toX(frame: ChartFrame, x: number): number {
  const inner = frame.width - 2 * frame.padding;
  return frame.padding + (x / frame.xMax) * inner;
}

export function toY(frame: ChartFrame, y: number): number {
  const inner = frame.height - 2 * frame.padding;
  const t = (y - frame.yMin) / (frame.yMax - frame.yMin);
  return frame.height - frame.padding - t * inner;
}

/** Step-function path for a budget curve (hold each value until the next). */
export function stepPath(frame: ChartFrame,
                         points: [number, number][]): string {
  if (points.length === 0) return "";
  const parts: string[] = [];
  let lastY = toY(frame, points[0][1]);
  parts.push(`M ${toX(frame, points[0][0]).toFixed(2)} ${lastY.toFixed(2)}`);
  for (let i = 1; i < points.length; i++) {
    const x = toX(frame, points[i][0]);
    const y = toY(frame, points[i][1]);
    parts.push(`L ${x.toFixed(2)} ${lastY.toFixed(2)}`);
    parts.push(`L ${x.toFixed(2)} ${y.toFixed(2)}`);
    lastY = y;
  }
  const xEnd = toX(frame, frame.xMax);
  parts.push(`L ${xEnd.toFixed(2)} ${lastY.toFixed(2)}`);
  return parts.join(" ");
}

export function horizontalLine(frame: ChartFrame, y: number): string {
  const yy = toY(frame, y).toFixed(2);
  return `M ${toX(frame, 0).toFixed(2)} ${yy} ` +
    `L ${toX(frame, frame.xMax).toFixed(2)} ${yy}`;
}

export function scatter(frame: ChartFrame, points: [number, number][],
                        cls: string): string {
  return points.map(([x, y]) =>
    `<circle class="${cls}" cx="${toX(frame, x).toFixed(2)}" ` +
    `cy="${toY(frame, y).toFixed(2)}" r="3"></circle>`).join("");
}

export function trajectoryChart(trajectory: [number, number][],
                                cleanedF1: number | null,
                                budget: number): string {
  const all = cleanedF1 === null ? trajectory
    : [...trajectory, [budget, cleanedF1] as [number, number]];
  const frame = frameFor(all.length ? all : [[0, 0.5]]);
  frame.xMax = Math.max(budget, frame.xMax);
  const axis = axisLabels(frame);
  const reference = cleanedF1 === null ? "" :
    `<path class="reference" d="${horizontalLine(frame, cleanedF1)}"></path>`;
  return `<svg viewBox="0 0 ${frame.width} ${frame.height}">
    ${axis}
    ${reference}
    <path class="series" d="${stepPath(frame, trajectory)}"></path>
    ${scatter(frame, trajectory, "dot")}
  </svg>`;
}

export function auditChart(points: { step: number; predicted: number;
                                     actual: number }[]): string {
  if (points.length === 0) {
    return `<p class="empty">no executed steps yet</p>`;
  }
  const flat: [number, number][] = points.flatMap(
    (p) => [[p.step, p.predicted], [p.step, p.actual]] as [number, number][]);
  const frame = frameFor(flat);
  frame.xMax = Math.max(points.length - 1, 1);
  const predicted = scatter(
    frame, points.map((p) => [p.step, p.predicted]), "dot predicted");
  const actual = scatter(
    frame, points.map((p) => [p.step, p.actual]), "dot actual");
  return `<svg viewBox="0 0 ${frame.width} ${frame.height}">
    ${axisLabels(frame)}
    ${predicted}
    ${actual}
  </svg>`;
}

function axisLabels(frame: ChartFrame): string {
  const x0 = toX(frame, 0).toFixed(2);
  const y0 = toY(frame, frame.yMin).toFixed(2);
  const yTop = toY(frame, frame.yMax).toFixed(2);
  const xEnd = toX(frame, frame.xMax).toFixed(2);
  return `
    <line class="axis" x1="${x0}" y1="${y0}" x2="${xEnd}" y2="${y0}"></line>
    <line class="axis" x1="${x0}" y1="${y0}" x2="${x0}" y2="${yTop}"></line>
    <text class="tick" x="${x0}" y="${Number(y0) + 14}">0</text>
    <text class="tick" x="${xEnd}" y="${Number(y0) + 14}">${frame.xMax}</text>
    <text class="tick" x="4" y="${y0}">${frame.yMin.toFixed(2)}</text>
    <text class="tick" x="4" y="${yTop}">${frame.yMax.toFixed(2)}</text>`;
}
