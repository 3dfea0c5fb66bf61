// Shared types for the archive-to-JSONL converter.
//
// The output format is the neutral bench JSONL consumed by the Python
// harness: a header line {"space", "provenance", "count"} (channel
// tables add "base_model") followed by one entry per line with the
// fields key / val_acc / test_acc / flops_m / params_m. Nothing here
// imports from the Python package; the JSONL schema and the key
// grammars are the only shared surface.

export const CONVERTER_VERSION = "0.1.0";

export type SpaceKind = "macro" | "channel" | "cell";

export const SPACE_CARDINALITY: Record<SpaceKind, number> = {
  macro: 6561, // 3^8
  channel: 16384, // 4^7
  cell: 15625, // 5^6
};

export interface ConversionManifest {
  /** Basename of the source archive, e.g. "nas-bench-macro_cifar10.json". */
  archive: string;
  /** Expected SHA-256 of the archive bytes (lowercase hex). */
  sha256: string;
  space: SpaceKind;
  /** Required for space "channel": which base network the table scores. */
  baseModel?: "resnet" | "mobilenet";
  /** Required for space "cell": which dataset's results to extract. */
  dataset?: string;
  /** Required for space "cell": training-schedule selector ("12" or "200"). */
  epochs?: string;
  converterVersion: string;
}

/** One converted benchmark entry in canonical-key form. */
export interface BenchEntry {
  key: string;
  val_acc: number | null;
  test_acc: number | null;
  flops_m: number | null;
  params_m: number | null;
}

export class IngestError extends Error {}

/** The archive on disk does not hash to the manifest's sha256. */
export class ChecksumMismatch extends IngestError {
  constructor(
    public readonly expected: string,
    public readonly actual: string,
  ) {
    super(`checksum mismatch: expected sha256 ${expected}, archive hashes to ${actual}`);
  }
}

/** The archive does not contain exactly one entry per architecture. */
export class CardinalityMismatch extends IngestError {
  constructor(
    public readonly expected: number,
    public readonly actual: number,
  ) {
    super(`cardinality mismatch: space holds ${expected} architectures, archive yields ${actual}`);
  }
}

/** Structural problem in the archive: bad key, bad op name, bad record. */
export class ArchiveFormatError extends IngestError {}

/** Render the manifest as a single provenance string for the JSONL header. */
export function manifestProvenance(m: ConversionManifest): string {
  const parts = [
    `bench-ingest ${m.converterVersion}`,
    `archive=${m.archive}`,
    `sha256=${m.sha256}`,
    `space=${m.space}`,
  ];
  if (m.baseModel !== undefined) parts.push(`base_model=${m.baseModel}`);
  if (m.dataset !== undefined) parts.push(`dataset=${m.dataset}`);
  if (m.epochs !== undefined) parts.push(`epochs=${m.epochs}`);
  return parts.join(" ");
}

/** Reject manifests whose selectors do not fit the space kind. */
export function validateManifest(m: ConversionManifest): void {
  if (!(m.space in SPACE_CARDINALITY)) {
    throw new ArchiveFormatError(`unknown space kind ${JSON.stringify(m.space)}`);
  }
  if (!/^[0-9a-f]{64}$/.test(m.sha256)) {
    throw new ArchiveFormatError("manifest sha256 must be 64 lowercase hex digits");
  }
  if (m.space === "channel") {
    if (m.baseModel !== "resnet" && m.baseModel !== "mobilenet") {
      throw new ArchiveFormatError('channel conversion needs baseModel "resnet" or "mobilenet"');
    }
  } else if (m.baseModel !== undefined) {
    throw new ArchiveFormatError(`baseModel does not apply to space ${m.space}`);
  }
  if (m.space === "cell") {
    if (!m.dataset) throw new ArchiveFormatError("cell conversion needs a dataset selector");
    if (m.epochs !== "12" && m.epochs !== "200") {
      throw new ArchiveFormatError('cell conversion needs epochs "12" or "200"');
    }
  } else if (m.dataset !== undefined || m.epochs !== undefined) {
    throw new ArchiveFormatError(`dataset/epochs only apply to space "cell", not ${m.space}`);
  }
}
