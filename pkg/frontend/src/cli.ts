#!/usr/bin/env node
/**
 * Usage: demefront-plotviz <panel-dir> [--out <dir>]
 *
 * Reads runner CSV outputs (and panels.json when present) from the panel
 * directory and writes per-panel SVGs plus the composite grid. Exits
 * nonzero naming the offending file on any missing or schema-mismatched
 * input.
 */

import * as path from "node:path";
import * as process from "node:process";

import { SchemaError } from "./csv.js";
import { renderFigure } from "./render.js";

function main(argv: string[]): number {
  const args = argv.slice(2);
  let panelDir: string | null = null;
  let outDir: string | null = null;
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--out") {
      outDir = args[++i] ?? null;
    } else if (panelDir === null) {
      panelDir = args[i];
    } else {
      console.error(`unexpected argument: ${args[i]}`);
      return 2;
    }
  }
  if (!panelDir) {
    console.error("usage: demefront-plotviz <panel-dir> [--out <dir>]");
    return 2;
  }
  if (!outDir) {
    outDir = path.join(panelDir, "figures");
  }
  try {
    const result = renderFigure(panelDir, outDir);
    console.log(
      `wrote ${result.panelFiles.length} panel SVGs and ${result.compositeFile} to ${outDir}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`input error: ${err.message}`);
      return 1;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`input error: ${(err as Error).message}`);
      return 1;
    }
    throw err;
  }
}

process.exit(main(process.argv));
