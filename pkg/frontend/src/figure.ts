/**
 * Rate-distortion figure: log-scale mean relative error vs oversampling.
 *
 * One curve per (scheme, r_or_beta, j) group.  Curves at the deepest
 * refinement level are solid, all other levels dashed; colors cycle by
 * (scheme, r_or_beta).  Output is a standalone SVG string built
 * deterministically (fixed styling, fixed number formatting, nothing
 * time- or locale-dependent) so identical inputs give identical bytes.
 */

import { CsvError, ResultRow } from "./csv.js";

export interface Curve {
  label: string;
  j: number;
  points: { x: number; y: number }[];
  color: string;
  dashed: boolean;
}

export interface FigureOptions {
  logx?: boolean;
}

const PALETTE = ["#1f5fbf", "#c23b22", "#2e8b57", "#8a2be2", "#d4880c", "#008b8b"];

const WIDTH = 760;
const HEIGHT = 520;
const MARGIN = { left: 72, right: 24, top: 28, bottom: 56 };

function schemeLabel(row: ResultRow): string {
  if (row.scheme === "sigma_delta") return `sigma-delta r=${row.rOrBeta}`;
  if (row.scheme === "beta") return `beta ${row.rOrBeta}`;
  return row.scheme;
}

export function groupCurves(rows: ResultRow[]): Curve[] {
  for (const row of rows) {
    if (row.meanRelErr <= 0) {
      throw new CsvError(
        `log scale requires positive mean_rel_err; got ${row.meanRelErr} ` +
        `(scheme ${row.scheme}, j ${row.j}, lambda ${row.lambda})`,
      );
    }
  }
  const byKey = new Map<string, ResultRow[]>();
  for (const row of rows) {
    const key = `${row.scheme}|${row.rOrBeta}|${row.j}`;
    if (!byKey.has(key)) byKey.set(key, []);
    byKey.get(key)!.push(row);
  }
  const jMax = Math.max(...rows.map((r) => r.j));
  const schemeKeys = [...new Set(rows.map((r) => `${r.scheme}|${r.rOrBeta}`))].sort();
  const curves: Curve[] = [];
  for (const key of [...byKey.keys()].sort()) {
    const members = byKey.get(key)!.slice().sort((a, b) => a.lambda - b.lambda);
    const first = members[0];
    curves.push({
      label: `${schemeLabel(first)}, j=${first.j}`,
      j: first.j,
      points: members.map((r) => ({ x: r.lambda, y: r.meanRelErr })),
      color: PALETTE[schemeKeys.indexOf(`${first.scheme}|${first.rOrBeta}`) % PALETTE.length],
      dashed: first.j !== jMax,
    });
  }
  return curves;
}

function fmt(x: number): string {
  return x.toFixed(2);
}

function decadeLabel(exp: number): string {
  return `1e${exp}`;
}

export function renderFigure(rows: ResultRow[], options: FigureOptions = {}): string {
  const curves = groupCurves(rows);
  const xs = curves.flatMap((c) => c.points.map((p) => p.x));
  const ys = curves.flatMap((c) => c.points.map((p) => p.y));
  const xlo = Math.min(...xs);
  const xhi = Math.max(...xs);
  const tx = (x: number) => (options.logx ? Math.log10(x) : x);
  const xSpan = Math.max(tx(xhi) - tx(xlo), 1e-9);
  const eLo = Math.floor(Math.log10(Math.min(...ys)));
  const eHi = Math.ceil(Math.log10(Math.max(...ys)));
  const ySpan = Math.max(eHi - eLo, 1);

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const X = (x: number) => MARGIN.left + ((tx(x) - tx(xlo)) / xSpan) * plotW;
  const Y = (y: number) => MARGIN.top + ((eHi - Math.log10(y)) / ySpan) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `font-family="sans-serif" font-size="13">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);

  // y decades with grid lines
  for (let e = eLo; e <= eHi; e++) {
    const y = MARGIN.top + ((eHi - e) / ySpan) * plotH;
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y)}" x2="${WIDTH - MARGIN.right}" ` +
      `y2="${fmt(y)}" stroke="#dddddd"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(y + 4)}" text-anchor="end">` +
      `${decadeLabel(e)}</text>`,
    );
  }
  // x ticks at the observed oversampling values
  for (const x of [...new Set(xs)].sort((a, b) => a - b)) {
    parts.push(
      `<text x="${fmt(X(x))}" y="${HEIGHT - MARGIN.bottom + 20}" ` +
      `text-anchor="middle">${x}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
    `fill="none" stroke="#333333"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 12}" text-anchor="middle">` +
    `oversampling ratio m/p${options.logx ? " (log scale)" : ""}</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">` +
    `mean relative reconstruction error</text>`,
  );

  for (const curve of curves) {
    const d = curve.points
      .map((p, i) => `${i === 0 ? "M" : "L"}${fmt(X(p.x))} ${fmt(Y(p.y))}`)
      .join(" ");
    const dash = curve.dashed ? ' stroke-dasharray="7 5"' : "";
    parts.push(
      `<path class="curve" d="${d}" fill="none" stroke="${curve.color}" ` +
      `stroke-width="2"${dash}/>`,
    );
    for (const p of curve.points) {
      parts.push(
        `<circle cx="${fmt(X(p.x))}" cy="${fmt(Y(p.y))}" r="3" fill="${curve.color}"/>`,
      );
    }
  }

  curves.forEach((curve, i) => {
    const y = MARGIN.top + 16 + 20 * i;
    const x = WIDTH - MARGIN.right - 208;
    const dash = curve.dashed ? ' stroke-dasharray="7 5"' : "";
    parts.push(
      `<line x1="${x}" y1="${y - 4}" x2="${x + 34}" y2="${y - 4}" ` +
      `stroke="${curve.color}" stroke-width="2"${dash}/>`,
    );
    parts.push(`<text x="${x + 42}" y="${y}">${curve.label}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
