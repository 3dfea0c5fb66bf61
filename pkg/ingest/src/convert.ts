// Core conversion: official archive JSON -> bench JSONL + mapping CSV.
//
// The converter validates everything before touching the output paths
// and writes through a temp-file rename, so a failed run never leaves
// a partial file behind. Re-running on the same archive produces
// byte-identical output: entries are sorted by canonical key and the
// provenance header is a pure function of the manifest.
//
// Accepted archive shapes (all plain JSON, one object keyed by the
// official architecture string):
//
//   macro    "01201201" -> {"mean_acc": 92.62, "flops": 84933632, "params": 452138}
//   channel  "[32, 40, ...]" -> {"mean_acc": 93.18, "flops": ..., "params": ...}
//   cell     "|none~0|+|...|" -> {"<dataset>": {"flops_m": ..., "params_m": ...,
//                "val_acc": {"12": ..., "200": ...}, "test_acc": {...}}}
//
// flops/params are raw counts for macro and channel (scaled to M on
// output) and already in M for cell records.

import crypto from "node:crypto";
import fs from "node:fs";
import path from "node:path";

import { cellKey, channelKey, keyPattern, macroKey } from "./keys";
import {
  ArchiveFormatError,
  BenchEntry,
  CardinalityMismatch,
  ChecksumMismatch,
  ConversionManifest,
  SPACE_CARDINALITY,
  manifestProvenance,
  validateManifest,
} from "./types";

interface MappedEntry {
  official: string;
  entry: BenchEntry;
}

function asRecord(value: unknown, context: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new ArchiveFormatError(`${context}: expected a JSON object`);
  }
  return value as Record<string, unknown>;
}

function requireNumber(obj: Record<string, unknown>, field: string, context: string): number {
  const v = obj[field];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ArchiveFormatError(`${context}: field ${JSON.stringify(field)} missing or not a finite number`);
  }
  return v;
}

function optionalNumber(
  obj: Record<string, unknown>,
  field: string,
  context: string,
): number | null {
  if (!(field in obj) || obj[field] === null) return null;
  return requireNumber(obj, field, context);
}

function extractMacroOrChannel(
  official: string,
  record: unknown,
  key: string,
): BenchEntry {
  const obj = asRecord(record, `entry ${JSON.stringify(official)}`);
  const ctx = `entry ${JSON.stringify(official)}`;
  return {
    key,
    val_acc: requireNumber(obj, "mean_acc", ctx),
    test_acc: null,
    flops_m: scaleToM(optionalNumber(obj, "flops", ctx)),
    params_m: scaleToM(optionalNumber(obj, "params", ctx)),
  };
}

function scaleToM(raw: number | null): number | null {
  return raw === null ? null : raw / 1e6;
}

function extractCell(
  official: string,
  record: unknown,
  key: string,
  dataset: string,
  epochs: string,
): BenchEntry {
  const ctx = `entry ${JSON.stringify(official)}`;
  const byDataset = asRecord(record, ctx);
  if (!(dataset in byDataset)) {
    throw new ArchiveFormatError(`${ctx}: no results for dataset ${JSON.stringify(dataset)}`);
  }
  const res = asRecord(byDataset[dataset], `${ctx} dataset ${dataset}`);
  const val = asRecord(res["val_acc"], `${ctx} val_acc`);
  if (!(epochs in val)) {
    throw new ArchiveFormatError(`${ctx}: val_acc has no ${epochs}-epoch result`);
  }
  const valAcc = requireNumber(val, epochs, `${ctx} val_acc`);
  let testAcc: number | null = null;
  if ("test_acc" in res && res["test_acc"] !== null) {
    const test = asRecord(res["test_acc"], `${ctx} test_acc`);
    if (epochs in test) testAcc = requireNumber(test, epochs, `${ctx} test_acc`);
  }
  return {
    key,
    val_acc: valAcc,
    test_acc: testAcc,
    flops_m: optionalNumber(res, "flops_m", ctx),
    params_m: optionalNumber(res, "params_m", ctx),
  };
}

/**
 * Channel tables must offer exactly four widths per layer; anything
 * else means the archive is not the 4^7 table this expects.
 */
function checkChannelMenu(entries: MappedEntry[]): void {
  const perLayer: Array<Set<number>> = Array.from({ length: 7 }, () => new Set());
  for (const { entry } of entries) {
    entry.key.split(",").forEach((w, i) => perLayer[i].add(Number(w)));
  }
  perLayer.forEach((menu, i) => {
    if (menu.size !== 4) {
      throw new ArchiveFormatError(
        `layer ${i} offers ${menu.size} distinct widths, want 4`,
      );
    }
  });
}

function mapEntries(
  archive: Record<string, unknown>,
  manifest: ConversionManifest,
): MappedEntry[] {
  const seen = new Map<string, string>(); // canonical key -> first official
  const entries: MappedEntry[] = [];
  for (const [official, record] of Object.entries(archive)) {
    let key: string;
    let entry: BenchEntry;
    switch (manifest.space) {
      case "macro":
        key = macroKey(official);
        entry = extractMacroOrChannel(official, record, key);
        break;
      case "channel":
        key = channelKey(official);
        entry = extractMacroOrChannel(official, record, key);
        break;
      case "cell":
        key = cellKey(official);
        entry = extractCell(official, record, key, manifest.dataset!, manifest.epochs!);
        break;
    }
    const prior = seen.get(key);
    if (prior !== undefined) {
      throw new ArchiveFormatError(
        `officials ${JSON.stringify(prior)} and ${JSON.stringify(official)} both map to key ${JSON.stringify(key)}`,
      );
    }
    seen.set(key, official);
    entries.push({ official, entry });
  }
  return entries;
}

function csvField(value: string): string {
  if (/[",\n\r]/.test(value)) {
    return `"${value.replace(/"/g, '""')}"`;
  }
  return value;
}

function writeAtomic(outPath: string, content: string): void {
  fs.mkdirSync(path.dirname(outPath), { recursive: true });
  const tmp = `${outPath}.tmp`;
  fs.writeFileSync(tmp, content);
  fs.renameSync(tmp, outPath);
}

/** Default mapping-CSV path: the JSONL path with a .mapping.csv suffix. */
export function defaultMappingPath(outPath: string): string {
  return outPath.replace(/\.jsonl$/, "") + ".mapping.csv";
}

/**
 * Convert one archive to bench JSONL, emitting the official-string to
 * canonical-key mapping CSV alongside. Returns the entry count.
 *
 * Aborts without writing anything on checksum mismatch, cardinality
 * mismatch, or any structural problem in the archive.
 */
export function convert(
  sourcePath: string,
  outPath: string,
  manifest: ConversionManifest,
  mappingPath?: string,
): number {
  validateManifest(manifest);

  const bytes = fs.readFileSync(sourcePath);
  const actual = crypto.createHash("sha256").update(bytes).digest("hex");
  if (actual !== manifest.sha256) {
    throw new ChecksumMismatch(manifest.sha256, actual);
  }

  let parsed: unknown;
  try {
    parsed = JSON.parse(bytes.toString("utf-8"));
  } catch (err) {
    throw new ArchiveFormatError(`archive is not valid JSON: ${(err as Error).message}`);
  }
  const archive = asRecord(parsed, "archive root");

  const entries = mapEntries(archive, manifest);
  const expected = SPACE_CARDINALITY[manifest.space];
  if (entries.length !== expected) {
    throw new CardinalityMismatch(expected, entries.length);
  }
  if (manifest.space === "channel") {
    checkChannelMenu(entries);
  }

  const pattern = keyPattern(manifest.space);
  entries.forEach(({ entry }) => {
    if (!pattern.test(entry.key)) {
      throw new ArchiveFormatError(`mapped key ${JSON.stringify(entry.key)} violates the grammar`);
    }
  });

  entries.sort((a, b) => (a.entry.key < b.entry.key ? -1 : a.entry.key > b.entry.key ? 1 : 0));

  const header: Record<string, unknown> = {
    space: manifest.space,
    provenance: manifestProvenance(manifest),
    count: entries.length,
  };
  if (manifest.space === "channel") {
    header["base_model"] = manifest.baseModel;
  }
  const lines = [JSON.stringify(header)];
  for (const { entry } of entries) {
    lines.push(
      JSON.stringify({
        key: entry.key,
        val_acc: entry.val_acc,
        test_acc: entry.test_acc,
        flops_m: entry.flops_m,
        params_m: entry.params_m,
      }),
    );
  }

  const csvLines = ["official,key"];
  for (const { official, entry } of entries) {
    csvLines.push(`${csvField(official)},${csvField(entry.key)}`);
  }

  writeAtomic(outPath, lines.join("\n") + "\n");
  writeAtomic(mappingPath ?? defaultMappingPath(outPath), csvLines.join("\n") + "\n");
  return entries.length;
}

/** SHA-256 of a file, lowercase hex. */
export function fileSha256(p: string): string {
  return crypto.createHash("sha256").update(fs.readFileSync(p)).digest("hex");
}
