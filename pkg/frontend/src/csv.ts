/**
 * Trace CSV schema shared with the simulation runner:
 *
 *   replicate,generation,time_rescaled,front_rescaled
 *
 * UTF-8, LF, '.' decimal separator. Parsing is strict: a header mismatch
 * or a malformed row is a hard error naming the file and the expected
 * columns, because silently mis-read science plots are worse than none.
 */

export const TRACE_COLUMNS = [
  "replicate",
  "generation",
  "time_rescaled",
  "front_rescaled",
] as const;

export interface TracePoint {
  time: number;
  position: number;
}

export class SchemaError extends Error {}

export function parseTraceCsv(text: string, source: string): TracePoint[] {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file; expected columns ${TRACE_COLUMNS.join(",")}`);
  }
  const header = lines[0].trim();
  if (header !== TRACE_COLUMNS.join(",")) {
    throw new SchemaError(
      `${source}: unexpected header "${header}"; expected columns ${TRACE_COLUMNS.join(",")}`,
    );
  }
  const points: TracePoint[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== TRACE_COLUMNS.length) {
      throw new SchemaError(
        `${source}: row ${i + 1} has ${cells.length} cells; expected ${TRACE_COLUMNS.length} ` +
          `(${TRACE_COLUMNS.join(",")})`,
      );
    }
    const time = Number(cells[2]);
    const position = Number(cells[3]);
    if (!Number.isFinite(time)) {
      throw new SchemaError(`${source}: row ${i + 1}: non-numeric time_rescaled "${cells[2]}"`);
    }
    // NaN positions mark extinction tails; keep them out of the polyline
    if (Number.isFinite(position)) {
      points.push({ time, position });
    }
  }
  if (points.length < 2) {
    throw new SchemaError(`${source}: fewer than two finite points; nothing to draw`);
  }
  return points;
}

/** Thin a series to at most `cap` points, keeping endpoints. */
export function thin(points: TracePoint[], cap = 4000): TracePoint[] {
  if (points.length <= cap) return points;
  const stride = Math.ceil(points.length / cap);
  const out: TracePoint[] = [];
  for (let i = 0; i < points.length; i += stride) out.push(points[i]);
  if (out[out.length - 1] !== points[points.length - 1]) out.push(points[points.length - 1]);
  return out;
}
