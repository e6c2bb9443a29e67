/** Scripted round trip against recorded service traffic: create a session
 * on a fixture task, answer three decisions through the panel, verify the
 * rendering tracks the service's state view at every step, undo restores
 * the prior rendering, and a lasso around k glyphs posts exactly k ids. */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { beforeEach, describe, expect, it, vi } from "vitest";

import { SessionApi, StateView } from "../src/api";
import { lassoSelect } from "../src/geometry";
import { mountApp } from "../src/main";

interface RecordedStep {
  method: string;
  path: string;
  request: Record<string, unknown>;
  response: StateView;
}

interface Recording {
  task_id: string;
  steps: RecordedStep[];
}

const recording: Recording = JSON.parse(
  readFileSync(join(process.cwd(), "test", "fixtures", "session.json"), "utf-8"),
);

interface SeenRequest {
  method: string;
  path: string;
  body: Record<string, unknown> | null;
}

class ServiceStub {
  cursor = 0;
  requests: SeenRequest[] = [];

  install(): void {
    vi.stubGlobal("fetch", async (input: RequestInfo, init?: RequestInit) => {
      const path = String(input);
      const method = init?.method ?? "GET";
      const body = init?.body ? JSON.parse(String(init.body)) : null;
      this.requests.push({ method, path, body });
      if (path === "/tasks") {
        return json({
          tasks: [
            {
              id: recording.task_id,
              utterance: recording.steps[0].response.utterance,
              ambiguity_type: "vague",
              n_golds: 2,
              has_cache: true,
            },
          ],
        });
      }
      if (path.endsWith("/select")) {
        // any state view is a valid reply; the assertion is on the request
        return json(recording.steps[recording.steps.length - 1].response);
      }
      const step = recording.steps[this.cursor];
      expect(step, `unexpected request ${method} ${path}`).toBeDefined();
      expect(path).toBe(step.path);
      expect(method).toBe(step.method);
      expect(body).toEqual(step.request);
      this.cursor += 1;
      return json(step.response);
    });
  }
}

function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function renderedCandidateIds(root: HTMLElement): number[] {
  return [...root.querySelectorAll(".glyph")]
    .map((node) => Number(node.getAttribute("data-candidate-id")))
    .sort((a, b) => a - b);
}

function renderedPredictions(root: HTMLElement): Map<string, number> {
  const out = new Map<string, number>();
  for (const chip of root.querySelectorAll("[data-feature-id]")) {
    out.set(
      chip.getAttribute("data-feature-id") as string,
      Number(chip.getAttribute("data-probability")),
    );
  }
  return out;
}

function expectRenderingMatches(root: HTMLElement, view: StateView): void {
  expect(renderedCandidateIds(root)).toEqual(
    view.candidates.map((c) => c.id).sort((a, b) => a - b),
  );
  const predictions = renderedPredictions(root);
  expect(predictions.size).toBe(view.predicted_features.length);
  for (const entry of view.predicted_features) {
    expect(predictions.get(entry.id)).toBeCloseTo(entry.probability, 12);
  }
}

async function settled(): Promise<void> {
  for (let i = 0; i < 4; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

describe("ui round trip against recorded service traffic", () => {
  let stub: ServiceStub;
  let root: HTMLElement;

  beforeEach(() => {
    vi.unstubAllGlobals();
    document.body.innerHTML = "";
    root = document.createElement("div");
    document.body.appendChild(root);
    stub = new ServiceStub();
    stub.install();
  });

  it("answers three decisions, undoes, and lassos", async () => {
    const app = mountApp(root, new SessionApi(""));
    await settled();

    // session created from the fixture task at version 0
    expectRenderingMatches(root, recording.steps[0].response);
    expect(app.vm.view?.version).toBe(0);

    // three decisions through the decision panel
    for (const step of recording.steps.slice(1, 4)) {
      const group = root.querySelector('[data-testid="variable-group"]');
      expect(group?.getAttribute("data-variable-id")).toBe(step.request.variable_id);
      const label = step.request.choice === "yes" ? "Yes" : "No";
      const button = [...root.querySelectorAll("button")].find(
        (b) => b.textContent === label,
      ) as HTMLButtonElement;
      button.click();
      await settled();
      expect(app.vm.view?.version).toBe(step.response.version);
      expectRenderingMatches(root, step.response);
    }
    expect(root.querySelector(".terminal-banner")).toBeTruthy();

    // undo restores the turn-2 rendering exactly
    const undoStep = recording.steps[4];
    const back = [...root.querySelectorAll("button")].find(
      (b) => b.textContent === "Back",
    ) as HTMLButtonElement;
    back.click();
    await settled();
    expectRenderingMatches(root, undoStep.response);
    expectRenderingMatches(root, recording.steps[2].response); // same content

    // lasso around k glyphs posts exactly those k candidate ids
    const glyphs = [...root.querySelectorAll(".glyph")].map((node) => ({
      id: Number(node.getAttribute("data-candidate-id")),
      x: Number(node.getAttribute("data-x")),
      y: Number(node.getAttribute("data-y")),
    }));
    expect(glyphs.length).toBeGreaterThan(1);
    const anchor = glyphs[0];
    const next = glyphs
      .slice(1)
      .sort(
        (a, b) =>
          Math.hypot(a.x - anchor.x, a.y - anchor.y) -
          Math.hypot(b.x - anchor.x, b.y - anchor.y),
      )[0];
    const pad = 8;
    const minX = Math.min(anchor.x, next.x) - pad;
    const maxX = Math.max(anchor.x, next.x) + pad;
    const minY = Math.min(anchor.y, next.y) - pad;
    const maxY = Math.max(anchor.y, next.y) + pad;
    const polygon = [
      { x: minX, y: minY },
      { x: maxX, y: minY },
      { x: maxX, y: maxY },
      { x: minX, y: maxY },
    ];
    const expectedIds = lassoSelect(glyphs, polygon).map((g) => g.id);
    expect(expectedIds.length).toBeGreaterThanOrEqual(2);

    app.actionSpace.completeLasso(polygon);
    await settled();
    const selectRequest = stub.requests.find((r) => r.path.endsWith("/select"));
    expect(selectRequest).toBeDefined();
    const sentIds = (selectRequest!.body as { candidate_ids: number[] }).candidate_ids;
    expect([...sentIds].sort((a, b) => a - b)).toEqual(
      [...expectedIds].sort((a, b) => a - b),
    );
    expect(sentIds).toHaveLength(expectedIds.length);
  });
});
