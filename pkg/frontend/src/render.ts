/**
 * Render a panel directory (runner CSV outputs + panels.json) into SVGs:
 * one file per panel plus a composite grid. Read-only over the inputs and
 * byte-stable: rerunning on identical inputs writes identical files.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { parseTraceCsv, thin, SchemaError } from "./csv.js";
import { loadPanelIndex, PanelIndex } from "./panels.js";
import { composeGrid, renderPanelSvg, Series } from "./svg.js";

export interface RenderResult {
  panelFiles: string[];
  compositeFile: string;
}

export function renderFigure(panelDir: string, outDir: string): RenderResult {
  const index: PanelIndex = loadPanelIndex(panelDir);
  fs.mkdirSync(outDir, { recursive: true });
  const panelSvgs: string[] = [];
  const nestedSvgs: string[] = [];
  const panelFiles: string[] = [];
  index.panels.forEach((panel, i) => {
    const series: Series[] = panel.layers.map((layer) => {
      const file = path.join(panelDir, layer.path);
      if (!fs.existsSync(file)) {
        throw new SchemaError(`missing trace file: ${file} (panel "${panel.title}")`);
      }
      const points = thin(parseTraceCsv(fs.readFileSync(file, "utf-8"), layer.path));
      return { role: layer.role, points };
    });
    const standalone = renderPanelSvg(panel.title, series, index.xLabel, index.yLabel);
    const nested = renderPanelSvg(panel.title, series, index.xLabel, index.yLabel, undefined, false);
    const name = `panel_${String(i + 1).padStart(2, "0")}.svg`;
    fs.writeFileSync(path.join(outDir, name), standalone, "utf-8");
    panelFiles.push(name);
    panelSvgs.push(standalone);
    nestedSvgs.push(nested);
  });
  const composite = composeGrid(nestedSvgs, index.rows, index.cols);
  const compositeFile = "figure_grid.svg";
  fs.writeFileSync(path.join(outDir, compositeFile), composite, "utf-8");
  return { panelFiles, compositeFile };
}
