/** SVG rendering of one view: a birth-year vs outgoing-references scatter
 * with translucent bubbles, visible edges underneath, and a focal panel.
 * render() is a plain function of (bundle, state) that replaces the
 * container's contents, so re-rendering is an atomic swap. */

import {
  birthYears,
  capEdges,
  datasetById,
  focalHighlight,
  layoutPoints,
  visibleEdges,
} from "./model.js";
import { Bundle, DEFAULT_EDGE_RENDER_CAP, LayoutPoint, ViewState } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const WIDTH = 960;
const HEIGHT = 560;
const MARGIN = { top: 20, right: 30, bottom: 40, left: 60 };

function svgElement(tag: string, attrs: Record<string, string | number>): SVGElement {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

function linearScale(d0: number, d1: number, r0: number, r1: number): (v: number) => number {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export interface RenderOptions {
  edgeCap?: number;
}

export function render(bundle: Bundle, state: ViewState, container: HTMLElement, options: RenderOptions = {}): void {
  const dataset = datasetById(bundle, state.datasetId);
  const births = birthYears(bundle);
  const points = layoutPoints(dataset, state, births);
  const edges = capEdges(visibleEdges(dataset, state, births), options.edgeCap ?? DEFAULT_EDGE_RENDER_CAP);
  const names = new Map(bundle.authors.map((a) => [a.author_id, a.display_name]));

  const [lo, hi] = state.timeRange;
  const maxOut = Math.max(1, ...points.map((p) => p.y));
  const sx = linearScale(lo, hi, MARGIN.left, WIDTH - MARGIN.right);
  const sy = linearScale(0, maxOut, HEIGHT - MARGIN.bottom, MARGIN.top);

  const svg = svgElement("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    width: WIDTH,
    height: HEIGHT,
    class: "scatter",
  }) as SVGSVGElement;

  const byId = new Map(points.map((p) => [p.authorId, p]));
  const edgeGroup = svgElement("g", { class: "edges" });
  for (const edge of edges) {
    const a = byId.get(edge.citing);
    const b = byId.get(edge.cited);
    if (!a || !b) {
      continue;
    }
    edgeGroup.appendChild(
      svgElement("line", {
        class: "edge",
        x1: sx(a.x),
        y1: sy(a.y),
        x2: sx(b.x),
        y2: sy(b.y),
        "stroke-width": Math.min(4, 0.5 + Math.log(edge.weight)),
        "data-citing": edge.citing,
        "data-cited": edge.cited,
        "data-weight": edge.weight,
      }),
    );
  }
  svg.appendChild(edgeGroup);

  const nodeGroup = svgElement("g", { class: "nodes" });
  for (const point of points) {
    const classes = ["node"];
    if (point.authorId === state.focal) {
      classes.push("focal");
    }
    if (state.selection.has(point.authorId)) {
      classes.push("selected");
    }
    const circle = svgElement("circle", {
      class: classes.join(" "),
      cx: sx(point.x),
      cy: sy(point.y),
      r: point.radius,
      "data-author-id": point.authorId,
      "data-in-total": dataset.per_node[point.authorId]?.in_total ?? 0,
      "data-out-total": point.y,
      "data-birth-year": point.x,
    });
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${names.get(point.authorId) ?? point.authorId} (${point.x})`;
    circle.appendChild(title);
    nodeGroup.appendChild(circle);
  }
  svg.appendChild(nodeGroup);
  svg.appendChild(axes(sx, sy, lo, hi, maxOut));

  container.replaceChildren(svg, focalPanel(bundle, state, names));
}

function axes(
  sx: (v: number) => number,
  sy: (v: number) => number,
  lo: number,
  hi: number,
  maxOut: number,
): SVGElement {
  const group = svgElement("g", { class: "axes" });
  group.appendChild(
    svgElement("line", {
      x1: MARGIN.left,
      y1: HEIGHT - MARGIN.bottom,
      x2: WIDTH - MARGIN.right,
      y2: HEIGHT - MARGIN.bottom,
      class: "axis",
    }),
  );
  group.appendChild(
    svgElement("line", {
      x1: MARGIN.left,
      y1: MARGIN.top,
      x2: MARGIN.left,
      y2: HEIGHT - MARGIN.bottom,
      class: "axis",
    }),
  );
  const ticks = 6;
  for (let i = 0; i <= ticks; i++) {
    const year = Math.round(lo + ((hi - lo) * i) / ticks);
    const label = svgElement("text", {
      x: sx(year),
      y: HEIGHT - MARGIN.bottom + 24,
      class: "tick",
      "text-anchor": "middle",
    });
    label.textContent = year < 0 ? `${-year} BCE` : String(year);
    group.appendChild(label);
  }
  const yLabel = svgElement("text", {
    x: MARGIN.left - 40,
    y: MARGIN.top + 10,
    class: "tick",
  });
  yLabel.textContent = `out (max ${maxOut})`;
  group.appendChild(yLabel);
  return group;
}

function focalPanel(bundle: Bundle, state: ViewState, names: Map<string, string>): HTMLElement {
  const panel = document.createElement("div");
  panel.className = "focal-panel";
  if (!state.focal) {
    panel.textContent = "Select a focal author to see their strongest connections.";
    return panel;
  }
  const dataset = datasetById(bundle, state.datasetId);
  const heading = document.createElement("h2");
  heading.textContent = names.get(state.focal) ?? state.focal;
  panel.appendChild(heading);

  const totals = dataset.per_node[state.focal];
  const readout = document.createElement("p");
  readout.className = "readout";
  readout.textContent = totals
    ? `received ${totals.in_total}, made ${totals.out_total}`
    : "not present in this dataset";
  panel.appendChild(readout);
  if (!totals) {
    return panel;
  }

  const neighbours = focalHighlight(dataset, state.focal, state.highlightK);
  for (const [title, list] of [
    ["Most cited by", neighbours.topIncoming],
    ["Most cites", neighbours.topOutgoing],
  ] as const) {
    const caption = document.createElement("h3");
    caption.textContent = title;
    panel.appendChild(caption);
    const ul = document.createElement("ul");
    ul.className = title === "Most cited by" ? "top-incoming" : "top-outgoing";
    for (const item of list) {
      const li = document.createElement("li");
      li.dataset.authorId = item.authorId;
      li.textContent = `${names.get(item.authorId) ?? item.authorId} (${item.weight})`;
      ul.appendChild(li);
    }
    panel.appendChild(ul);
  }
  return panel;
}
