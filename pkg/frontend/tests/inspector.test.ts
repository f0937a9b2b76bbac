// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { predictionBars, renderInspector } from "../src/inspector";
import type { ModeDoc } from "../src/types";

const SERVED_MODE: ModeDoc = {
  id: 3,
  node_ids: [4, 5],
  members: [10, 11, 12, 13, 14, 15],
  stats: {
    size: 6,
    accuracy: 0.0,
    ground_truth_mode: 5,
    // service-computed counts; the UI must show these numbers untouched
    prediction_distribution: { "8.0": 4, "2.0": 1, "3.0": 1 },
  },
  provenance: "automatic",
};

describe("predictionBars", () => {
  it("reproduces the service counts exactly", () => {
    const bars = predictionBars(SERVED_MODE.stats.prediction_distribution);
    expect(bars.map((b) => [b.label, b.count])).toEqual([
      ["2.0", 1],
      ["3.0", 1],
      ["8.0", 4],
    ]);
  });

  it("scales fractions by the largest count", () => {
    const bars = predictionBars({ "1": 2, "2": 8 });
    expect(bars.find((b) => b.label === "2")!.fraction).toBe(1);
    expect(bars.find((b) => b.label === "1")!.fraction).toBe(0.25);
  });

  it("is empty for a regression mode", () => {
    expect(predictionBars(null)).toEqual([]);
  });
});

describe("renderInspector", () => {
  it("renders one bar per served label carrying the exact count", () => {
    const host = document.createElement("div");
    renderInspector(host, SERVED_MODE, null, ["dataset"], () => {});
    const rects = [...host.querySelectorAll<HTMLElement>(".bar-rect")];
    const counts = Object.fromEntries(rects.map((r) => [r.dataset.label, Number(r.dataset.count)]));
    expect(counts).toEqual({ "2.0": 1, "3.0": 1, "8.0": 4 });
  });

  it("prompts to run diagnostics when none exist", () => {
    const host = document.createElement("div");
    renderInspector(host, SERVED_MODE, null, ["dataset"], () => {});
    expect(host.querySelector(".warning")!.textContent).toContain("diagnose");
  });

  it("renders the KS table and wires the reference switch", () => {
    const host = document.createElement("div");
    const calls: string[] = [];
    renderInspector(
      host,
      SERVED_MODE,
      {
        reference: "dataset",
        top_features: [
          { column: 2, name: "f2", ks: 0.91 },
          { column: 0, name: "f0", ks: 0.4 },
        ],
      },
      ["dataset", "0"],
      (ref) => calls.push(ref),
    );
    const rows = [...host.querySelectorAll(".ks-table tr")];
    expect(rows).toHaveLength(3); // header + 2 features
    expect(rows[1].textContent).toContain("f2");
    expect(rows[1].textContent).toContain("0.9100");

    const select = host.querySelector<HTMLSelectElement>(".reference-select")!;
    select.value = "0";
    select.dispatchEvent(new Event("change"));
    expect(calls).toEqual(["0"]);
  });
});
