/**
 * Panel index: which trace files make up which panel, and in what role.
 *
 * The runner emits a `panels.json` next to its CSVs; when it is absent, a
 * directory of `particle_*.csv` files (plus optional `ode.csv` /
 * `pde_*.csv` companions) is assembled into panels by filename.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { SchemaError } from "./csv.js";

export type LayerRole = "particle" | "ode" | "pde";

export interface PanelLayer {
  path: string;
  role: LayerRole;
}

export interface PanelSpec {
  title: string;
  layers: PanelLayer[];
}

export interface PanelIndex {
  rows: number;
  cols: number;
  xLabel: string;
  yLabel: string;
  panels: PanelSpec[];
}

const ROLES: LayerRole[] = ["particle", "ode", "pde"];

export function loadPanelIndex(dir: string): PanelIndex {
  const indexPath = path.join(dir, "panels.json");
  if (fs.existsSync(indexPath)) {
    return parseIndex(fs.readFileSync(indexPath, "utf-8"), indexPath);
  }
  return indexFromFilenames(dir);
}

export function parseIndex(text: string, source: string): PanelIndex {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`${source}: not valid JSON (${(err as Error).message})`);
  }
  const obj = raw as Record<string, unknown>;
  const panelsRaw = obj["panels"];
  if (!Array.isArray(panelsRaw) || panelsRaw.length === 0) {
    throw new SchemaError(`${source}: missing or empty "panels" array`);
  }
  const panels: PanelSpec[] = panelsRaw.map((p, i) => {
    const pr = p as Record<string, unknown>;
    const layers = pr["layers"];
    if (!Array.isArray(layers) || layers.length === 0) {
      throw new SchemaError(`${source}: panel ${i} has no layers`);
    }
    return {
      title: String(pr["title"] ?? `panel ${i + 1}`),
      layers: layers.map((l, j) => {
        const lr = l as Record<string, unknown>;
        const role = String(lr["role"]);
        if (!ROLES.includes(role as LayerRole)) {
          throw new SchemaError(
            `${source}: panel ${i} layer ${j}: unknown role "${role}" (expected ${ROLES.join("/")})`,
          );
        }
        if (typeof lr["path"] !== "string") {
          throw new SchemaError(`${source}: panel ${i} layer ${j}: missing "path"`);
        }
        return { path: lr["path"], role: role as LayerRole };
      }),
    };
  });
  const layout = (obj["layout"] ?? {}) as Record<string, unknown>;
  const labels = (obj["axis_labels"] ?? {}) as Record<string, unknown>;
  const cols = Number(layout["cols"] ?? 2) || 2;
  const rows = Number(layout["rows"] ?? Math.ceil(panels.length / cols));
  return {
    rows,
    cols,
    xLabel: String(labels["x"] ?? "rescaled time"),
    yLabel: String(labels["y"] ?? "rescaled front position"),
    panels,
  };
}

function indexFromFilenames(dir: string): PanelIndex {
  const files = fs.readdirSync(dir).sort();
  const particles = files.filter((f) => f.startsWith("particle_") && f.endsWith(".csv"));
  if (particles.length === 0) {
    throw new SchemaError(`${dir}: neither panels.json nor particle_*.csv found`);
  }
  const panels: PanelSpec[] = particles.map((f) => {
    const tag = f.slice("particle_".length, -".csv".length);
    const layers: PanelLayer[] = [{ path: f, role: "particle" }];
    if (files.includes("ode.csv")) layers.push({ path: "ode.csv", role: "ode" });
    const pde = `pde_${tag}.csv`;
    if (files.includes(pde)) layers.push({ path: pde, role: "pde" });
    return { title: tag.replace(/_/g, ", "), layers };
  });
  return {
    rows: Math.ceil(panels.length / 2),
    cols: 2,
    xLabel: "rescaled time",
    yLabel: "rescaled front position",
    panels,
  };
}
