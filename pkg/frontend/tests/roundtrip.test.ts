// @vitest-environment jsdom
// End-to-end selection round trip against the real failmap service:
// build fixture artifacts with the CLI, serve them, lasso-select in the
// UI logic, submit, and confirm the service lists the manual mode.
// Skipped when the Python package is not importable.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { computeLayout } from "../src/layout";
import { lassoSelect, SelectionState, type Point } from "../src/selection";
import { renderWarnings } from "../src/warnings";

const PYTHON = process.env.FAILMAP_PYTHON ?? "python3";

function pythonHasFailmap(): boolean {
  try {
    execFileSync(PYTHON, ["-c", "import failmap"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const { port } = server.address() as { port: number };
      server.close(() => resolve(port));
    });
    server.on("error", reject);
  });
}

const available = pythonHasFailmap();

describe.skipIf(!available)("selection round trip against the live service", () => {
  let workDir: string;
  let service: ChildProcess;
  let api: ApiClient;

  beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "failmap-ui-"));
    execFileSync(PYTHON, [
      "-m", "failmap.cli", "generate", "--out", workDir, "--seed", "7",
    ]);
    // fixed C keeps the fixture build fast; the UI behavior is identical
    const configPath = join(workDir, "config.json");
    const config = JSON.parse(readFileSync(configPath, "utf-8"));
    config.classifier = { kind: "linear_svm", C: 100.0 };
    writeFileSync(configPath, JSON.stringify(config));
    execFileSync(PYTHON, ["-m", "failmap.cli", "run", "--config", configPath], {
      stdio: "ignore",
    });

    const port = await freePort();
    service = spawn(
      PYTHON,
      [
        "-m", "failmap.cli", "serve",
        "--artifacts", join(workDir, "artifacts"),
        "--bind", `127.0.0.1:${port}`,
      ],
      { stdio: "ignore" },
    );
    api = new ApiClient(`http://127.0.0.1:${port}`);
    const deadline = Date.now() + 30_000;
    for (;;) {
      try {
        await api.fetchGraph();
        break;
      } catch {
        if (Date.now() > deadline) throw new Error("service did not come up");
        await new Promise((r) => setTimeout(r, 300));
      }
    }
  }, 120_000);

  afterAll(() => {
    service?.kill();
    if (workDir) rmSync(workDir, { recursive: true, force: true });
  });

  it("lists a manual mode with exactly the lassoed nodes", async () => {
    const graph = await api.fetchGraph();
    const { positions } = computeLayout(graph, 900, 620, 42);

    // lasso a rectangle around the first two nodes' laid-out positions
    const targets = [graph.nodes[0].id, graph.nodes[1].id];
    const pts = targets.map((id) => positions.get(id)!);
    const pad = 1.5;
    const polygon: Point[] = [
      { x: Math.min(pts[0].x, pts[1].x) - pad, y: Math.min(pts[0].y, pts[1].y) - pad },
      { x: Math.max(pts[0].x, pts[1].x) + pad, y: Math.min(pts[0].y, pts[1].y) - pad },
      { x: Math.max(pts[0].x, pts[1].x) + pad, y: Math.max(pts[0].y, pts[1].y) + pad },
      { x: Math.min(pts[0].x, pts[1].x) - pad, y: Math.max(pts[0].y, pts[1].y) + pad },
    ];
    const lassoed = lassoSelect(positions, polygon);
    expect(lassoed).toEqual(expect.arrayContaining(targets));

    const selection = new SelectionState();
    selection.addAll(lassoed);
    const response = await api.submitSelection(selection.ids());
    expect(response.mode.provenance).toBe("manual");
    expect(response.mode.node_ids).toEqual(selection.ids());

    const modes = await api.fetchModes();
    const listed = modes.modes.find((m) => m.id === response.mode.id)!;
    expect(listed).toBeDefined();
    expect(listed.node_ids).toEqual(selection.ids());
  }, 60_000);

  it("returns threshold warnings for a non-failing selection and renders them", async () => {
    const graph = await api.fetchGraph();
    // the node with the highest mean error measure is a perfectly predicted
    // inlier cluster, so its accuracy sits above the extraction baseline
    const inlier = graph.nodes.reduce((a, b) =>
      a.stats.mean.error_measure >= b.stats.mean.error_measure ? a : b,
    );
    const response = await api.submitSelection([inlier.id]);
    expect(response.warnings.length).toBeGreaterThan(0);

    const box = document.createElement("div");
    renderWarnings(box, response.warnings);
    const badges = [...box.querySelectorAll(".warning-badge")];
    expect(badges.map((b) => b.textContent)).toEqual(response.warnings);
  }, 60_000);

  it("serves live per-mode diagnostics for the inspector", async () => {
    const modes = await api.fetchModes();
    const diag = await api.fetchModeDiagnostics(modes.modes[0].id, "dataset", 5);
    expect(diag.top_features).toHaveLength(5);
    for (const feature of diag.top_features) {
      expect(feature.ks).toBeGreaterThanOrEqual(0);
      expect(feature.ks).toBeLessThanOrEqual(1);
    }
  }, 60_000);
});

describe.skipIf(available)("service round trip placeholder", () => {
  it("skips without a python failmap installation", () => {
    expect(available).toBe(false);
  });
});
