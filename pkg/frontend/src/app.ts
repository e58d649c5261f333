/**
 * DOM glue: bind controls to the controller, mirror state in the URL.
 *
 * Base URL comes from the `api` query parameter (default
 * http://127.0.0.1:8080). Everything else in the query string is explorer
 * state, kept shareable via history.replaceState.
 */

import { ApiClient } from "./api.js";
import { ExplorerController, type ExplorerView } from "./controller.js";
import { parseState, type ExplorerState } from "./state.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
}

function gibLabel(bytes: number): string {
  return `${(bytes / 2 ** 30).toFixed(1)} GiB`;
}

function checkedValues(container: HTMLElement): string[] {
  return [...container.querySelectorAll<HTMLInputElement>("input:checked")].map((el) => el.value);
}

export function start(): void {
  const url = new URL(window.location.href);
  const apiBase = url.searchParams.get("api") ?? "http://127.0.0.1:8080";
  url.searchParams.delete("api");

  const chart = byId<HTMLDivElement>("chart");
  const table = byId<HTMLDivElement>("table");
  const card = byId<HTMLDivElement>("recommendation");
  const budget = byId<HTMLInputElement>("budget");
  const budgetLabel = byId<HTMLSpanElement>("budget-label");
  const batch = byId<HTMLSelectElement>("batch");
  const axis = byId<HTMLSelectElement>("axis");
  const task = byId<HTMLSelectElement>("task");
  const modelBoxes = byId<HTMLFieldSetElement>("model-toggles");
  const precisionBoxes = byId<HTMLFieldSetElement>("precision-toggles");
  const strategyBoxes = byId<HTMLFieldSetElement>("strategy-toggles");

  const view: ExplorerView = {
    setChart: (html) => (chart.innerHTML = html),
    setTable: (html) => (table.innerHTML = html),
    setRecommendation: (html) => (card.innerHTML = html),
    setQuery: (query) => {
      const keep = apiBase !== "http://127.0.0.1:8080" ? `api=${encodeURIComponent(apiBase)}&` : "";
      const suffix = query ? `?${keep}${query}` : keep ? `?${keep.slice(0, -1)}` : window.location.pathname;
      window.history.replaceState(null, "", query || keep ? suffix : window.location.pathname);
    },
  };

  const client = new ApiClient(apiBase);
  const initial: ExplorerState = parseState(url.search);
  const controller = new ExplorerController(client, view, initial);

  const syncControls = (state: ExplorerState): void => {
    budget.value = String(state.budgetBytes);
    budgetLabel.textContent = gibLabel(state.budgetBytes);
    batch.value = String(state.batch);
    axis.value = state.axis;
    task.value = state.taskType ?? "";
    for (const [container, values] of [
      [modelBoxes, state.models],
      [precisionBoxes, state.precisions.map(String)],
      [strategyBoxes, state.strategies],
    ] as const) {
      for (const box of container.querySelectorAll<HTMLInputElement>("input")) {
        box.checked = values.includes(box.value);
      }
    }
  };

  budget.addEventListener("input", () => {
    const bytes = Number.parseInt(budget.value, 10);
    budgetLabel.textContent = gibLabel(bytes);
    controller.update({ budgetBytes: bytes });
  });
  batch.addEventListener("change", () => controller.update({ batch: Number.parseInt(batch.value, 10) }));
  axis.addEventListener("change", () =>
    controller.update({ axis: axis.value === "latency" ? "latency" : "memory" }),
  );
  task.addEventListener("change", () =>
    controller.update({
      taskType: task.value === "math" || task.value === "knowledge" ? task.value : null,
    }),
  );
  modelBoxes.addEventListener("change", () => controller.update({ models: checkedValues(modelBoxes) }));
  precisionBoxes.addEventListener("change", () =>
    controller.update({ precisions: checkedValues(precisionBoxes).map((v) => Number.parseInt(v, 10)) }),
  );
  strategyBoxes.addEventListener("change", () =>
    controller.update({ strategies: checkedValues(strategyBoxes) }),
  );
  document.body.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.action === "retry") void controller.refresh();
  });

  // populate model toggles from the live spec list, then first render
  void client
    .models()
    .then((doc) => {
      modelBoxes.innerHTML = doc.models
        .map(
          (m) =>
            `<label><input type="checkbox" value="${m.name}"> ${m.name}</label>`,
        )
        .join("");
      syncControls(controller.getState());
    })
    .catch(() => {
      /* the frontier/plan panels will surface the error with a retry */
    })
    .finally(() => void controller.refresh());

  syncControls(initial);
}

start();
