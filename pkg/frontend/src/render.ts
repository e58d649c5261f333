/**
 * Pure renderers: API documents in, HTML/SVG strings out.
 *
 * Numbers are echoed verbatim from the response documents (no arithmetic
 * beyond pixel placement), so a recorded response fully determines every
 * rendered figure - the property the snapshot tests pin.
 */

import type { ApiError, FrontierPoint, NeighborhoodPoint, PlanResponse } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const CHART = { width: 680, height: 380, margin: 44 };

/** Scatter + line of frontier points (cost ascending), tooltips per point. */
export function frontierChartSvg(points: FrontierPoint[], unit: string): string {
  if (points.length === 0) {
    return `<svg class="frontier-chart" viewBox="0 0 ${CHART.width} ${CHART.height}" role="img"><text x="20" y="40">no feasible configurations</text></svg>`;
  }
  const { width, height, margin } = CHART;
  const costs = points.map((p) => p.cost);
  const accs = points.map((p) => p.accuracy);
  const minCost = Math.min(...costs);
  const maxCost = Math.max(...costs);
  const minAcc = Math.min(...accs);
  const maxAcc = Math.max(...accs);
  const sx = (cost: number): number =>
    maxCost === minCost
      ? width / 2
      : margin + ((cost - minCost) / (maxCost - minCost)) * (width - 2 * margin);
  const sy = (acc: number): number =>
    maxAcc === minAcc
      ? height / 2
      : height - margin - ((acc - minAcc) / (maxAcc - minAcc)) * (height - 2 * margin);
  const path = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${sx(p.cost).toFixed(1)},${sy(p.accuracy).toFixed(1)}`)
    .join(" ");
  const circles = points
    .map((p) => {
      const tooltip = escapeHtml(
        `${p.config_key}\n${unit}: ${p.cost}\naccuracy: ${p.accuracy}` +
          (p.co_optimal ? "\nco-optimal" : ""),
      );
      return (
        `<circle cx="${sx(p.cost).toFixed(1)}" cy="${sy(p.accuracy).toFixed(1)}" r="4" ` +
        `data-config="${escapeHtml(p.config_key)}" data-cost="${p.cost}" data-accuracy="${p.accuracy}">` +
        `<title>${tooltip}</title></circle>`
      );
    })
    .join("");
  return (
    `<svg class="frontier-chart" viewBox="0 0 ${width} ${height}" role="img">` +
    `<text class="axis-label" x="${width / 2}" y="${height - 8}">cost (${escapeHtml(unit)})</text>` +
    `<text class="axis-label" transform="rotate(-90)" x="${-height / 2}" y="14">accuracy</text>` +
    `<path class="frontier-line" d="${path}" fill="none"/>` +
    circles +
    `</svg>`
  );
}

const TABLE_COLUMNS: ReadonlyArray<readonly [string, (p: FrontierPoint) => string | number]> = [
  ["cost", (p) => p.cost],
  ["unit", (p) => p.unit],
  ["accuracy", (p) => p.accuracy],
  ["model", (p) => p.model],
  ["wbits", (p) => p.weight_precision_bits],
  ["kv strategy", (p) => p.kv_strategy],
  ["token budget", (p) => p.token_budget],
  ["G", (p) => p.group_size],
  ["effective size (B)", (p) => p.effective_size_bytes],
  ["co-optimal", (p) => (p.co_optimal ? "yes" : "no")],
];

/** Composition table mirroring the frontier CSV columns. */
export function frontierTableHtml(points: FrontierPoint[]): string {
  const head = TABLE_COLUMNS.map(([name]) => `<th>${escapeHtml(name)}</th>`).join("");
  const rows = points
    .map((p) => {
      const cells = TABLE_COLUMNS.map(([, get]) => `<td>${escapeHtml(String(get(p)))}</td>`).join("");
      return `<tr data-config="${escapeHtml(p.config_key)}">${cells}</tr>`;
    })
    .join("");
  return `<table class="frontier-table"><thead><tr>${head}</tr></thead><tbody>${rows}</tbody></table>`;
}

function neighborhoodHtml(points: NeighborhoodPoint[]): string {
  const items = points
    .map(
      (p) =>
        `<li data-config="${escapeHtml(p.config_key)}">` +
        `<code>${escapeHtml(p.config_key)}</code> cost ${p.cost} accuracy ${p.accuracy}</li>`,
    )
    .join("");
  return `<ol class="neighborhood">${items}</ol>`;
}

/** Recommendation card: chosen config, accuracy, annotations verbatim. */
export function recommendationCardHtml(plan: PlanResponse): string {
  const c = plan.chosen;
  const annotations = plan.annotations
    .map(
      (a) =>
        `<li class="${a.triggered ? "triggered" : "quiet"}" data-rule="${a.rule_id}">` +
        `<span class="marker">${a.triggered ? "●" : "○"}</span> ` +
        `${escapeHtml(a.explanation)}</li>`,
    )
    .join("");
  return (
    `<div class="card recommendation">` +
    `<h3>Recommended configuration</h3>` +
    `<p class="config-key"><code data-field="config_key">${escapeHtml(c.config_key)}</code></p>` +
    `<dl>` +
    `<dt>accuracy</dt><dd data-field="accuracy">${plan.achieved_accuracy}</dd>` +
    `<dt>cost</dt><dd data-field="cost">${plan.cost} ${escapeHtml(plan.cost_unit)}</dd>` +
    `<dt>memory</dt><dd data-field="memory">${plan.memory_bytes} B (${escapeHtml(plan.memory_gib)} GiB)</dd>` +
    `<dt>interpolated</dt><dd data-field="interpolated">${plan.interpolated ? "yes" : "no"}</dd>` +
    `</dl>` +
    `<h4>Deployment rules</h4><ul class="annotations">${annotations}</ul>` +
    `<h4>Frontier neighborhood</h4>${neighborhoodHtml(plan.frontier_neighborhood)}` +
    `</div>`
  );
}

/** Infeasible-budget card surfacing the cheapest-configuration hint. */
export function infeasibleCardHtml(error: ApiError): string {
  const cheapestCost = error.details?.cheapest_cost;
  const cheapestKey = error.details?.cheapest_config_key;
  const hint =
    cheapestCost !== undefined && cheapestKey !== undefined
      ? `<p class="hint">Cheapest known configuration: <code data-field="cheapest_config_key">${escapeHtml(
          String(cheapestKey),
        )}</code> at <span data-field="cheapest_cost">${cheapestCost}</span> bytes - raise the budget at least that far.</p>`
      : "";
  return (
    `<div class="card infeasible">` +
    `<h3>No configuration fits this budget</h3>` +
    `<p>${escapeHtml(error.message)}</p>` +
    hint +
    `</div>`
  );
}

/** Inline, retryable error state for transport or server failures. */
export function errorCardHtml(error: unknown): string {
  const message = error instanceof Error ? error.message : String(error);
  return (
    `<div class="card error" role="alert">` +
    `<h3>Request failed</h3><p>${escapeHtml(message)}</p>` +
    `<button type="button" class="retry" data-action="retry">Retry</button>` +
    `</div>`
  );
}

export function loadingHtml(label: string): string {
  return `<p class="loading">loading ${escapeHtml(label)}…</p>`;
}
