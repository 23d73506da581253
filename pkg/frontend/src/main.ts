/** Entry point: load the bundle once, then drive everything from ViewState.
 * After the initial load there are no further network round-trips; every
 * interaction is a pure state update plus a re-render, and the state
 * deep-links through the URL query string. */

import { loadBundle, stateFromQuery, stateToQuery } from "./model.js";
import { render } from "./render.js";
import { Bundle, ViewState } from "./types.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

function maxEdgeWeight(bundle: Bundle, datasetId: string): number {
  const dataset = bundle.datasets.find((d) => d.dataset_id === datasetId);
  return Math.max(1, ...(dataset?.edges.map((e) => e.weight) ?? [1]));
}

function syncControls(bundle: Bundle, state: ViewState): void {
  const datasetSelect = byId<HTMLSelectElement>("dataset");
  datasetSelect.replaceChildren(
    ...bundle.datasets.map((d) => {
      const option = document.createElement("option");
      option.value = d.dataset_id;
      option.textContent = d.label;
      option.selected = d.dataset_id === state.datasetId;
      return option;
    }),
  );
  const threshold = byId<HTMLInputElement>("threshold");
  threshold.max = String(maxEdgeWeight(bundle, state.datasetId));
  threshold.value = String(state.threshold);
  byId<HTMLOutputElement>("threshold-value").textContent = String(state.threshold);
  byId<HTMLInputElement>("year-min").value = String(state.timeRange[0]);
  byId<HTMLInputElement>("year-max").value = String(state.timeRange[1]);
  byId<HTMLInputElement>("highlight-k").value = String(state.highlightK);

  const focalSelect = byId<HTMLSelectElement>("focal");
  const blank = document.createElement("option");
  blank.value = "";
  blank.textContent = "(none)";
  const dataset = bundle.datasets.find((d) => d.dataset_id === state.datasetId);
  const names = new Map(bundle.authors.map((a) => [a.author_id, a.display_name]));
  focalSelect.replaceChildren(
    blank,
    ...(dataset?.nodes ?? []).map((id) => {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = names.get(id) ?? id;
      option.selected = id === state.focal;
      return option;
    }),
  );
}

async function start(): Promise<void> {
  const viewport = byId<HTMLDivElement>("viewport");
  let bundle: Bundle;
  let state: ViewState;
  try {
    ({ bundle, state } = await loadBundle("bundle.json"));
  } catch (err) {
    const box = document.createElement("div");
    box.className = "load-error";
    box.textContent = String(err);
    viewport.replaceChildren(box);
    return;
  }
  state = stateFromQuery(window.location.search, bundle);

  const update = (next: Partial<ViewState>): void => {
    state = { ...state, ...next };
    window.history.replaceState(null, "", `?${stateToQuery(state)}`);
    syncControls(bundle, state);
    render(bundle, state, viewport);
  };

  byId<HTMLSelectElement>("dataset").addEventListener("change", (ev) => {
    update({ datasetId: (ev.target as HTMLSelectElement).value, focal: null, threshold: 1 });
  });
  byId<HTMLInputElement>("threshold").addEventListener("input", (ev) => {
    update({ threshold: Number((ev.target as HTMLInputElement).value) });
  });
  byId<HTMLInputElement>("year-min").addEventListener("change", (ev) => {
    const lo = Number((ev.target as HTMLInputElement).value);
    update({ timeRange: [Math.min(lo, state.timeRange[1]), state.timeRange[1]] });
  });
  byId<HTMLInputElement>("year-max").addEventListener("change", (ev) => {
    const hi = Number((ev.target as HTMLInputElement).value);
    update({ timeRange: [state.timeRange[0], Math.max(hi, state.timeRange[0])] });
  });
  byId<HTMLSelectElement>("focal").addEventListener("change", (ev) => {
    update({ focal: (ev.target as HTMLSelectElement).value || null });
  });
  byId<HTMLInputElement>("highlight-k").addEventListener("change", (ev) => {
    update({ highlightK: Math.max(1, Number((ev.target as HTMLInputElement).value) || 1) });
  });
  viewport.addEventListener("click", (ev) => {
    const authorId = (ev.target as Element).closest?.("circle")?.getAttribute("data-author-id");
    if (authorId) {
      update({ focal: authorId });
    }
  });

  update({});
}

start();
