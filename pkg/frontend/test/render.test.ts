import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { renderFigure } from "../src/render.js";
import { SchemaError } from "../src/csv.js";

const FIXTURE = path.join(__dirname, "fixtures", "panel_small");

let tmp: string;

beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "plotviz-"));
});

afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

function readAll(dir: string): Map<string, Buffer> {
  const out = new Map<string, Buffer>();
  for (const f of fs.readdirSync(dir).sort()) {
    out.set(f, fs.readFileSync(path.join(dir, f)));
  }
  return out;
}

describe("figure rendering", () => {
  it("renders the six-panel grid plus singles from runner outputs", () => {
    const outDir = path.join(tmp, "figs");
    const result = renderFigure(FIXTURE, outDir);
    expect(result.panelFiles).toHaveLength(6);
    expect(fs.existsSync(path.join(outDir, result.compositeFile))).toBe(true);
    const grid = fs.readFileSync(path.join(outDir, "figure_grid.svg"), "utf-8");
    // 3 x 2 layout
    expect(grid).toContain('width="920"');
    expect(grid).toContain('height="990"');
    for (const role of ["particle", "ode", "pde"]) {
      expect(grid).toContain(`>${role}</text>`);
    }
    const panel = fs.readFileSync(path.join(outDir, "panel_01.svg"), "utf-8");
    expect(panel).toContain("<polyline");
    expect(panel.startsWith("<svg")).toBe(true);
  });

  it("is byte-stable across reruns on identical inputs", () => {
    const a = path.join(tmp, "a");
    const b = path.join(tmp, "b");
    renderFigure(FIXTURE, a);
    renderFigure(FIXTURE, b);
    const fa = readAll(a);
    const fb = readAll(b);
    expect([...fa.keys()]).toEqual([...fb.keys()]);
    for (const [name, bytes] of fa) {
      expect(fb.get(name)!.equals(bytes), `${name} differs`).toBe(true);
    }
  });

  it("renders a panel with absent layers and notes them in the legend", () => {
    const dir = path.join(tmp, "ode_only");
    fs.mkdirSync(dir);
    fs.copyFileSync(path.join(FIXTURE, "ode.csv"), path.join(dir, "ode.csv"));
    fs.writeFileSync(
      path.join(dir, "panels.json"),
      JSON.stringify({
        layout: { rows: 1, cols: 1 },
        panels: [{ title: "trajectory only", layers: [{ path: "ode.csv", role: "ode" }] }],
      }),
    );
    const out = path.join(tmp, "ode_figs");
    const result = renderFigure(dir, out);
    expect(result.panelFiles).toHaveLength(1);
    const svg = fs.readFileSync(path.join(out, "panel_01.svg"), "utf-8");
    expect(svg).toContain("absent: particle, pde");
  });

  it("fails naming the missing file", () => {
    const dir = path.join(tmp, "broken");
    fs.cpSync(FIXTURE, dir, { recursive: true });
    fs.rmSync(path.join(dir, "ode.csv"));
    expect(() => renderFigure(dir, path.join(tmp, "x"))).toThrowError(/ode\.csv/);
  });

  it("fails on a schema-mismatched csv, listing expected columns", () => {
    const dir = path.join(tmp, "badschema");
    fs.cpSync(FIXTURE, dir, { recursive: true });
    fs.writeFileSync(path.join(dir, "ode.csv"), "time,position\n0,0\n1,1\n");
    try {
      renderFigure(dir, path.join(tmp, "y"));
      expect.unreachable("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(SchemaError);
      expect((err as Error).message).toContain("replicate,generation,time_rescaled,front_rescaled");
    }
  });

  it("assembles panels from filenames when panels.json is absent", () => {
    const dir = path.join(tmp, "no_index");
    fs.cpSync(FIXTURE, dir, { recursive: true });
    fs.rmSync(path.join(dir, "panels.json"));
    const result = renderFigure(dir, path.join(tmp, "z"));
    expect(result.panelFiles).toHaveLength(6);
  });
});
