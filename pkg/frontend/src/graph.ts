/**
 * Deterministic circular layout for the interaction diagram.  Node 0 sits
 * at the top and indices proceed clockwise, so a given network always
 * renders identically; labels default to the node index.
 */

import type { NetworkDoc } from "./protocol.js";

export interface NodePoint {
  node: number;
  x: number;
  y: number;
  label: string;
}

export interface EdgeLine {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export const VIEWBOX = 220;
const RADIUS = 82;
const CENTER = VIEWBOX / 2;

export function layoutNodes(network: NetworkDoc): NodePoint[] {
  const n = network.node_count;
  const points: NodePoint[] = [];
  for (let node = 0; node < n; node += 1) {
    const angle = -Math.PI / 2 + (2 * Math.PI * node) / n;
    points.push({
      node,
      x: CENTER + RADIUS * Math.cos(angle),
      y: CENTER + RADIUS * Math.sin(angle),
      label: network.labels?.[node] ?? String(node),
    });
  }
  return points;
}

export function layoutEdges(network: NetworkDoc): EdgeLine[] {
  const nodes = layoutNodes(network);
  return network.edges.map(([u, v]) => ({
    x1: nodes[u].x,
    y1: nodes[u].y,
    x2: nodes[v].x,
    y2: nodes[v].y,
  }));
}

/** SVG markup for the diagram with the player's own node highlighted. */
export function networkSvg(network: NetworkDoc, ownNode: number | null): string {
  const nodes = layoutNodes(network);
  const edges = layoutEdges(network);
  const edgeMarkup = edges
    .map(
      (e) =>
        `<line x1="${e.x1.toFixed(1)}" y1="${e.y1.toFixed(1)}"` +
        ` x2="${e.x2.toFixed(1)}" y2="${e.y2.toFixed(1)}" class="edge"/>`
    )
    .join("");
  const nodeMarkup = nodes
    .map((p) => {
      const own = p.node === ownNode ? " own" : "";
      return (
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="16"` +
        ` class="node${own}"/>` +
        `<text x="${p.x.toFixed(1)}" y="${(p.y + 5).toFixed(1)}"` +
        ` class="node-label${own}">${p.label}</text>`
      );
    })
    .join("");
  return (
    `<svg viewBox="0 0 ${VIEWBOX} ${VIEWBOX}" role="img"` +
    ` aria-label="interaction diagram">${edgeMarkup}${nodeMarkup}</svg>`
  );
}
