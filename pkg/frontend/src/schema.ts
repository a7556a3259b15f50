import { readFileSync } from "fs";

export const CSV_HEADER =
  "schema_version,run_id,seed,method,lambda,gain_mode,cp,start_idx,d_m,coverage_cells,frontier_cells";
export const SCHEMA_VERSION = 1;

export class SchemaMismatchError extends Error {}
export class EmptyInputError extends Error {}

export interface SampleRow {
  runId: string;
  method: string;
  lambda: string;
  gainMode: string;
  cp: string;
  startIdx: number;
  d: number;
  coverage: number;
  frontier: number;
}

export interface SummaryRow {
  method: string;
  sweep: string;
  mean_dT_m: number;
  std_dT_m: number;
  delta_nf_mean_m: number | null;
  delta_nf_std_m: number | null;
  n: number;
}

export interface Summary {
  rows: SummaryRow[];
}

export function parseRawCsv(path: string): SampleRow[] {
  const text = readFileSync(path, "utf-8");
  const lines = text.split("\n");
  if (lines[0] !== CSV_HEADER) {
    throw new SchemaMismatchError(`unexpected CSV header in ${path}: ${lines[0]}`);
  }
  const rows: SampleRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (!line) continue;
    const parts = line.split(",");
    if (parts.length !== 11) {
      throw new SchemaMismatchError(`line ${i + 1}: expected 11 columns, got ${parts.length}`);
    }
    if (Number(parts[0]) !== SCHEMA_VERSION) {
      throw new SchemaMismatchError(`line ${i + 1}: schema_version ${parts[0]}`);
    }
    rows.push({
      runId: parts[1],
      method: parts[3],
      lambda: parts[4],
      gainMode: parts[5],
      cp: parts[6],
      startIdx: Number(parts[7]),
      d: Number(parts[8]),
      coverage: Number(parts[9]),
      frontier: Number(parts[10]),
    });
  }
  if (rows.length === 0) {
    throw new EmptyInputError(`${path} has no data rows`);
  }
  return rows;
}

export function parseSummary(path: string): Summary {
  let data: unknown;
  try {
    data = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new SchemaMismatchError(`${path}: ${err}`);
  }
  const obj = data as { schema_version?: number; rows?: SummaryRow[] };
  if (obj.schema_version !== SCHEMA_VERSION || !Array.isArray(obj.rows)) {
    throw new SchemaMismatchError(`${path} is not a schema_version ${SCHEMA_VERSION} summary`);
  }
  if (obj.rows.length === 0) {
    throw new EmptyInputError(`${path} has no summary rows`);
  }
  return { rows: obj.rows };
}
