// Command-line front end for the archive converter.
//
// Usage:
//   ts-node src/cli.ts --space macro   --in nas-bench-macro_cifar10.json --out data/nas-bench-macro.jsonl
//   ts-node src/cli.ts --space channel --base-model resnet --in Results_ResNet.json --out data/channel-bench-resnet.jsonl
//   ts-node src/cli.ts --space cell    --dataset cifar10 --epochs 200 --in nas-bench-201.json --out data/nas-bench-201.jsonl
//
// --sha256 pins the expected archive checksum; when omitted the
// archive's actual hash is recorded in the provenance instead.
// Exit codes: 0 success, 1 conversion error, 2 usage error.

import fs from "node:fs";
import { parseArgs } from "node:util";
import path from "node:path";

import { convert, defaultMappingPath, fileSha256 } from "./convert";
import { CONVERTER_VERSION, ConversionManifest, IngestError, SpaceKind } from "./types";

const USAGE = `usage: bench-ingest --space {macro,channel,cell} --in ARCHIVE --out OUT.jsonl
                    [--sha256 HEX] [--mapping OUT.csv]
                    [--base-model {resnet,mobilenet}]   (channel)
                    [--dataset NAME --epochs {12,200}]  (cell)`;

function usageError(message: string): never {
  console.error(message);
  console.error(USAGE);
  process.exit(2);
}

function main(argv: string[]): void {
  let values: Record<string, string | undefined>;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        space: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
        sha256: { type: "string" },
        mapping: { type: "string" },
        "base-model": { type: "string" },
        dataset: { type: "string" },
        epochs: { type: "string" },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    usageError((err as Error).message);
  }

  const space = values.space;
  if (space !== "macro" && space !== "channel" && space !== "cell") {
    usageError(`--space must be macro, channel or cell, got ${JSON.stringify(space ?? null)}`);
  }
  if (!values.in || !values.out) {
    usageError("--in and --out are required");
  }
  if (space === "channel" && !values["base-model"]) {
    usageError("--space channel requires --base-model");
  }
  if (space === "cell" && (!values.dataset || !values.epochs)) {
    usageError("--space cell requires --dataset and --epochs");
  }

  const sourcePath = values.in;
  if (!fs.existsSync(sourcePath)) {
    console.error(`archive not found: ${sourcePath}`);
    process.exit(1);
  }

  const manifest: ConversionManifest = {
    archive: path.basename(sourcePath),
    sha256: values.sha256 ?? fileSha256(sourcePath),
    space: space as SpaceKind,
    converterVersion: CONVERTER_VERSION,
  };
  if (space === "channel") {
    manifest.baseModel = values["base-model"] as "resnet" | "mobilenet";
  }
  if (space === "cell") {
    manifest.dataset = values.dataset;
    manifest.epochs = values.epochs;
  }

  try {
    const count = convert(sourcePath, values.out, manifest, values.mapping);
    console.log(`Wrote ${count} entries to ${values.out}`);
    console.log(`Mapping CSV: ${values.mapping ?? defaultMappingPath(values.out)}`);
  } catch (err) {
    if (err instanceof IngestError) {
      console.error(err.message);
      process.exit(1);
    }
    throw err;
  }
}

main(process.argv.slice(2));
