/**
 * Typed wrappers around the hdmapkit numeric kernels.
 *
 * The heavy lifting happens in the Python package; this module speaks its
 * CLI wire format (JSON kernels plus map documents) and exposes the three
 * training-loop kernels over contiguous Float64Array views. Values round-trip
 * through shortest-representation JSON floats, which preserves IEEE doubles
 * bit-exactly, so results are identical to the core implementation.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

export const BINDINGS_VERSION = "0.1.0";

/** Row-major, fully contiguous 64-bit float tensor view. */
export interface ArrayView {
  data: Float64Array;
  shape: readonly number[];
}

export interface Pose {
  x: number;
  y: number;
  yaw: number;
}

export interface GridGeometry {
  resolution: number;
  xMin: number;
  yMin: number;
}

export interface ContrastiveResult {
  loss: number;
  gradAnchors: ArrayView;
  gradPositives: ArrayView;
  gradNegatives: ArrayView;
}

export interface MoLossResult {
  loss: number;
  grad: ArrayView;
}

export class ShapeError extends Error {
  constructor(name: string, expected: string, got: readonly number[]) {
    super(`${name}: expected shape ${expected}, got [${got.join(", ")}]`);
    this.name = "ShapeError";
  }
}

function elementCount(shape: readonly number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function checkView(name: string, view: ArrayView, rank: number): void {
  if (view.shape.length !== rank) {
    throw new ShapeError(name, `rank-${rank}`, view.shape);
  }
  if (view.shape.some((d) => d < 0 || !Number.isInteger(d))) {
    throw new ShapeError(name, "nonnegative integer dims", view.shape);
  }
  if (view.data.length !== elementCount(view.shape)) {
    throw new ShapeError(
      name,
      `${elementCount(view.shape)} elements for [${view.shape.join(", ")}]`,
      [view.data.length],
    );
  }
}

export function view(data: Float64Array | number[], shape: readonly number[]): ArrayView {
  const buf = data instanceof Float64Array ? data : Float64Array.from(data);
  const v = { data: buf, shape: [...shape] };
  if (buf.length !== elementCount(shape)) {
    throw new ShapeError("view", `${elementCount(shape)} elements`, [buf.length]);
  }
  return v;
}

function rows(v: ArrayView): number[][] {
  const [n, d] = v.shape as [number, number];
  const out: number[][] = [];
  for (let i = 0; i < n; i++) {
    out.push(Array.from(v.data.subarray(i * d, (i + 1) * d)));
  }
  return out;
}

function blocks(v: ArrayView): number[][][] {
  const [n, k, d] = v.shape as [number, number, number];
  const out: number[][][] = [];
  for (let i = 0; i < n; i++) {
    const block: number[][] = [];
    for (let j = 0; j < k; j++) {
      const base = (i * k + j) * d;
      block.push(Array.from(v.data.subarray(base, base + d)));
    }
    out.push(block);
  }
  return out;
}

function flatten(nested: unknown, sink: number[]): void {
  if (Array.isArray(nested)) {
    for (const item of nested) flatten(item, sink);
  } else {
    sink.push(nested as number);
  }
}

function toView(nested: unknown, shape: readonly number[]): ArrayView {
  const sink: number[] = [];
  flatten(nested, sink);
  return view(Float64Array.from(sink), shape);
}

// ---------------------------------------------------------------------------
// process plumbing

function repoRoot(): string {
  return path.resolve(__dirname, "..", "..");
}

function pythonArgs(): { command: string; prefix: string[] } {
  const override = process.env.HDMAPKIT_PYTHON;
  if (override) {
    const parts = override.split(" ").filter((s) => s.length > 0);
    return { command: parts[0], prefix: [...parts.slice(1), "-m", "hdmapkit"] };
  }
  return { command: "python3", prefix: ["-m", "hdmapkit"] };
}

function runCli(args: string[], input?: string): string {
  const { command, prefix } = pythonArgs();
  const env = { ...process.env };
  const srcDir = path.join(repoRoot(), "src");
  env.PYTHONPATH = env.PYTHONPATH ? `${srcDir}${path.delimiter}${env.PYTHONPATH}` : srcDir;
  const proc = spawnSync(command, [...prefix, ...args], {
    input,
    env,
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw proc.error;
  }
  if (proc.status !== 0) {
    throw new Error(`hdmapkit ${args[0]} failed (exit ${proc.status}): ${proc.stderr.trim()}`);
  }
  return proc.stdout;
}

function runKernel(op: string, request: unknown): any {
  return JSON.parse(runCli(["kernel", op, "--in", "-"], JSON.stringify(request)));
}

// ---------------------------------------------------------------------------
// bound kernels

/**
 * Joint contrastive loss and exact gradients.
 *
 * anchors/positives are (n, d); negatives is (n, k, d) — each anchor brings
 * exactly one positive and k negatives. Inputs are never mutated.
 */
export function contrastiveLoss(
  anchors: ArrayView,
  positives: ArrayView,
  negatives: ArrayView,
): ContrastiveResult {
  checkView("anchors", anchors, 2);
  checkView("positives", positives, 2);
  checkView("negatives", negatives, 3);
  const [n, d] = anchors.shape as [number, number];
  if (positives.shape[0] !== n || positives.shape[1] !== d) {
    throw new ShapeError("positives", `[${n}, ${d}]`, positives.shape);
  }
  if (negatives.shape[0] !== n || negatives.shape[2] !== d) {
    throw new ShapeError("negatives", `[${n}, k, ${d}]`, negatives.shape);
  }
  if (n === 0) {
    return {
      loss: 0,
      gradAnchors: view(new Float64Array(0), anchors.shape),
      gradPositives: view(new Float64Array(0), positives.shape),
      gradNegatives: view(new Float64Array(0), negatives.shape),
    };
  }
  const response = runKernel("contrastive-loss", {
    anchors: rows(anchors),
    positives: rows(positives),
    negatives: blocks(negatives),
  });
  return {
    loss: response.loss,
    gradAnchors: toView(response.grad_anchors, anchors.shape),
    gradPositives: toView(response.grad_positives, positives.shape),
    gradNegatives: toView(response.grad_negatives, negatives.shape),
  };
}

/**
 * Map-occupancy consistency loss of a current grid against past grids.
 *
 * current is (h, w); history is (m, h, w) of past grids in their own ego
 * frames, aligned into the current frame using the supplied world poses.
 * Returns the loss and its gradient w.r.t. the current grid values.
 */
export function moLoss(
  current: ArrayView,
  history: ArrayView,
  currentPose: Pose,
  historyPoses: readonly Pose[],
  geometry: GridGeometry = { resolution: 0.15, xMin: -30.0, yMin: -15.0 },
): MoLossResult {
  checkView("current", current, 2);
  checkView("history", history, 3);
  const [h, w] = current.shape as [number, number];
  const m = history.shape[0];
  if (history.shape[1] !== h || history.shape[2] !== w) {
    throw new ShapeError("history", `[m, ${h}, ${w}]`, history.shape);
  }
  if (historyPoses.length !== m) {
    throw new Error(`historyPoses: expected ${m} poses, got ${historyPoses.length}`);
  }
  const grids = blocks(history);
  const response = runKernel("mo-loss", {
    resolution: geometry.resolution,
    x_min: geometry.xMin,
    y_min: geometry.yMin,
    current: { pose: currentPose, values: rows(current) },
    history: grids.map((values, i) => ({ pose: historyPoses[i], values })),
  });
  return { loss: response.loss, grad: toView(response.grad, current.shape) };
}

/** Map document following the CLI JSON schema (version, frames, ...). */
export type MapDocument = Record<string, unknown>;

/**
 * Chamfer-distance mAP of predictions against ground truth.
 *
 * Both documents must follow the map-file JSON schema; numbers are identical
 * to the `evaluate` subcommand because it does the computing.
 */
export function evaluateMaps(pred: MapDocument, gt: MapDocument): any {
  const dir = mkdtempSync(path.join(tmpdir(), "hdmapkit-"));
  try {
    const predPath = path.join(dir, "pred.json");
    const gtPath = path.join(dir, "gt.json");
    const outPath = path.join(dir, "report.json");
    writeFileSync(predPath, JSON.stringify(pred));
    writeFileSync(gtPath, JSON.stringify(gt));
    runCli(["evaluate", predPath, gtPath, "--out", outPath]);
    return JSON.parse(readFileSync(outPath, "utf8"));
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** Version banner of the underlying core package plus this wrapper. */
export function version(): string {
  const core = runCli(["--version"]).trim();
  return `${core} / bindings ${BINDINGS_VERSION}`;
}
