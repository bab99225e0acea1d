/**
 * Parser for the experiment result CSV.
 *
 * Schema (fixed column order, written by the Python harness):
 *   scheme,r_or_beta,j,p,lambda,m,ensemble,seed,
 *   mean_rel_err,median_rel_err,max_rel_err,wall_ms
 *
 * Lines starting with `#` before the header carry schema version notes
 * and are skipped.  A file with no data rows is rejected ("empty input").
 */

export const CSV_COLUMNS = [
  "scheme", "r_or_beta", "j", "p", "lambda", "m", "ensemble", "seed",
  "mean_rel_err", "median_rel_err", "max_rel_err", "wall_ms",
] as const;

export class CsvError extends Error {}

export interface ResultRow {
  scheme: string;
  rOrBeta: string;
  j: number;
  p: number;
  lambda: number;
  m: number;
  ensemble: string;
  seed: string;
  meanRelErr: number;
  medianRelErr: number;
  maxRelErr: number;
  wallMs: number;
}

function num(field: string, value: string, line: number): number {
  const x = Number(value);
  if (!Number.isFinite(x)) {
    throw new CsvError(`line ${line}: column ${field} is not a number: ${value}`);
  }
  return x;
}

export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  let at = 0;
  while (at < lines.length && lines[at].startsWith("#")) at += 1;
  if (at >= lines.length) throw new CsvError("empty input");
  const header = lines[at].split(",");
  for (const col of CSV_COLUMNS) {
    if (!header.includes(col)) throw new CsvError(`missing column: ${col}`);
  }
  const idx = new Map(header.map((h, i) => [h, i]));
  const rows: ResultRow[] = [];
  for (let i = at + 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new CsvError(`line ${i + 1}: expected ${header.length} fields, got ${parts.length}`);
    }
    const get = (c: string) => parts[idx.get(c)!];
    rows.push({
      scheme: get("scheme"),
      rOrBeta: get("r_or_beta"),
      j: num("j", get("j"), i + 1),
      p: num("p", get("p"), i + 1),
      lambda: num("lambda", get("lambda"), i + 1),
      m: num("m", get("m"), i + 1),
      ensemble: get("ensemble"),
      seed: get("seed"),
      meanRelErr: num("mean_rel_err", get("mean_rel_err"), i + 1),
      medianRelErr: num("median_rel_err", get("median_rel_err"), i + 1),
      maxRelErr: num("max_rel_err", get("max_rel_err"), i + 1),
      wallMs: num("wall_ms", get("wall_ms"), i + 1),
    });
  }
  if (rows.length === 0) throw new CsvError("empty input");
  return rows;
}
