// Synthetic full-cardinality archives in the official on-disk shapes.
//
// Accuracies follow a cheap deterministic formula so tests can recompute
// expected values (including the optimum) without storing them.

import fs from "node:fs";
import os from "node:os";
import path from "node:path";

import { CELL_OPS } from "../src/keys";

export const CHANNEL_MENU = [
  [32, 40, 48, 64],
  [32, 40, 48, 64],
  [48, 56, 64, 96],
  [48, 56, 64, 96],
  [96, 112, 128, 160],
  [96, 112, 128, 160],
  [112, 128, 144, 192],
];

export function acc(i: number): number {
  return 50 + ((i * 7919) % 4300) / 100;
}

export function macroArchive(): Record<string, unknown> {
  const archive: Record<string, unknown> = {};
  for (let i = 0; i < 6561; i++) {
    const official = i.toString(3).padStart(8, "0");
    archive[official] = {
      mean_acc: acc(i),
      std: 0.25,
      flops: 1_000_000 + i * 1000,
      params: 100_000 + i,
    };
  }
  return archive;
}

export function channelArchive(): Record<string, unknown> {
  const archive: Record<string, unknown> = {};
  for (let i = 0; i < 16384; i++) {
    const digits = i.toString(4).padStart(7, "0").split("").map(Number);
    const widths = digits.map((d, layer) => CHANNEL_MENU[layer][d]);
    const official = `[${widths.join(", ")}]`;
    archive[official] = {
      mean_acc: acc(i),
      flops: 2_000_000 + i * 500,
      params: 200_000 + i,
    };
  }
  return archive;
}

/** Official arch_str from six op indices in by-target-node edge order. */
export function archStr(d: number[]): string {
  const op = (k: number) => CELL_OPS[k];
  return (
    `|${op(d[0])}~0|` +
    `+|${op(d[1])}~0|${op(d[2])}~1|` +
    `+|${op(d[3])}~0|${op(d[4])}~1|${op(d[5])}~2|`
  );
}

export function cellArchive(): Record<string, unknown> {
  const archive: Record<string, unknown> = {};
  for (let i = 0; i < 15625; i++) {
    const digits = i.toString(5).padStart(6, "0").split("").map(Number);
    archive[archStr(digits)] = {
      cifar10: {
        flops_m: 15 + (i % 70),
        params_m: 0.5 + (i % 9) / 10,
        val_acc: { "12": acc(i) - 10, "200": acc(i) },
        test_acc: { "12": acc(i) - 11, "200": acc(i) - 0.5 },
      },
      cifar100: {
        flops_m: 15 + (i % 70),
        params_m: 0.5 + (i % 9) / 10,
        val_acc: { "12": acc(i) / 2, "200": acc(i) / 2 + 1 },
        test_acc: { "12": acc(i) / 2 - 1, "200": acc(i) / 2 + 0.5 },
      },
    };
  }
  return archive;
}

/** Write an archive object to dir/name and return the file path. */
export function writeArchive(dir: string, name: string, archive: Record<string, unknown>): string {
  const p = path.join(dir, name);
  fs.writeFileSync(p, JSON.stringify(archive));
  return p;
}

export function tmpdir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}
