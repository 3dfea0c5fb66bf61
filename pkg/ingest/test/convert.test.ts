import fs from "node:fs";
import path from "node:path";
import { spawnSync } from "node:child_process";

import { beforeAll, describe, expect, it } from "vitest";

import { convert, defaultMappingPath, fileSha256 } from "../src/convert";
import {
  ArchiveFormatError,
  CardinalityMismatch,
  ChecksumMismatch,
  CONVERTER_VERSION,
  ConversionManifest,
} from "../src/types";
import {
  acc,
  cellArchive,
  channelArchive,
  macroArchive,
  tmpdir,
  writeArchive,
} from "./fixtures";

let dir: string;
let macroPath: string;
let channelPath: string;
let cellPath: string;

function manifestFor(space: "macro" | "channel" | "cell", sourcePath: string): ConversionManifest {
  const m: ConversionManifest = {
    archive: path.basename(sourcePath),
    sha256: fileSha256(sourcePath),
    space,
    converterVersion: CONVERTER_VERSION,
  };
  if (space === "channel") m.baseModel = "resnet";
  if (space === "cell") {
    m.dataset = "cifar10";
    m.epochs = "200";
  }
  return m;
}

function readLines(p: string): string[] {
  const text = fs.readFileSync(p, "utf-8");
  expect(text.endsWith("\n")).toBe(true);
  return text.slice(0, -1).split("\n");
}

beforeAll(() => {
  dir = tmpdir("ingest-fixtures-");
  macroPath = writeArchive(dir, "nas-bench-macro_cifar10.json", macroArchive());
  channelPath = writeArchive(dir, "Results_ResNet.json", channelArchive());
  cellPath = writeArchive(dir, "nas-bench-201.json", cellArchive());
});

describe("convert macro", () => {
  let out: string;
  let count: number;

  beforeAll(() => {
    out = path.join(tmpdir("ingest-macro-"), "nas-bench-macro.jsonl");
    count = convert(macroPath, out, manifestFor("macro", macroPath));
  });

  it("returns the full cardinality", () => {
    expect(count).toBe(6561);
  });

  it("writes a header that embeds the manifest", () => {
    const header = JSON.parse(readLines(out)[0]);
    expect(header.space).toBe("macro");
    expect(header.count).toBe(6561);
    expect(header.provenance).toContain(`bench-ingest ${CONVERTER_VERSION}`);
    expect(header.provenance).toContain("archive=nas-bench-macro_cifar10.json");
    expect(header.provenance).toContain(`sha256=${fileSha256(macroPath)}`);
    expect(header.provenance).toContain("space=macro");
  });

  it("emits one sorted entry line per architecture", () => {
    const lines = readLines(out);
    expect(lines.length).toBe(6562);
    const keys = lines.slice(1).map((l) => JSON.parse(l).key as string);
    expect(keys.length).toBe(new Set(keys).size);
    expect([...keys].sort()).toEqual(keys);
    expect(keys[0]).toBe("00000000");
    expect(keys[keys.length - 1]).toBe("22222222");
  });

  it("pins the exact first entry line", () => {
    expect(readLines(out)[1]).toBe(
      '{"key":"00000000","val_acc":50,"test_acc":null,"flops_m":1,"params_m":0.1}',
    );
  });

  it("maps archive metrics onto the entry fields", () => {
    const i = 4321;
    const key = i.toString(3).padStart(8, "0");
    const entry = readLines(out)
      .slice(1)
      .map((l) => JSON.parse(l))
      .find((e) => e.key === key);
    expect(entry.val_acc).toBeCloseTo(acc(i), 10);
    expect(entry.test_acc).toBeNull();
    expect(entry.flops_m).toBeCloseTo((1_000_000 + i * 1000) / 1e6, 10);
    expect(entry.params_m).toBeCloseTo((100_000 + i) / 1e6, 10);
  });

  it("emits the mapping CSV alongside", () => {
    const rows = readLines(defaultMappingPath(out));
    expect(rows[0]).toBe("official,key");
    expect(rows.length).toBe(6562);
    expect(rows[1]).toBe("00000000,00000000");
  });
});

describe("convert channel", () => {
  let out: string;

  beforeAll(() => {
    out = path.join(tmpdir("ingest-channel-"), "channel-bench-resnet.jsonl");
    convert(channelPath, out, manifestFor("channel", channelPath));
  });

  it("converts all 16384 entries with a base_model header", () => {
    const lines = readLines(out);
    expect(lines.length).toBe(16385);
    const header = JSON.parse(lines[0]);
    expect(header.space).toBe("channel");
    expect(header.base_model).toBe("resnet");
    expect(header.count).toBe(16384);
    expect(header.provenance).toContain("base_model=resnet");
  });

  it("emits canonical comma-joined keys", () => {
    const keys = readLines(out)
      .slice(1)
      .map((l) => JSON.parse(l).key as string);
    expect(keys.length).toBe(new Set(keys).size);
    for (const key of keys.slice(0, 50)) {
      expect(key).toMatch(/^[1-9][0-9]*(,[1-9][0-9]*){6}$/);
    }
    expect(keys).toContain("32,32,48,48,96,96,112");
  });

  it("quotes both CSV columns, which contain commas", () => {
    const rows = readLines(defaultMappingPath(out));
    expect(rows.length).toBe(16385);
    const probe = rows.find((r) => r.includes("[32, 32, 48, 48, 96, 96, 112]"));
    expect(probe).toBe('"[32, 32, 48, 48, 96, 96, 112]","32,32,48,48,96,96,112"');
  });

  it("rejects a menu with five widths in one layer", () => {
    const archive = channelArchive() as Record<string, unknown>;
    const victim = "[32, 32, 48, 48, 96, 96, 112]";
    archive["[33, 32, 48, 48, 96, 96, 112]"] = archive[victim];
    delete archive[victim];
    const p = writeArchive(tmpdir("ingest-menu-"), "Results_ResNet.json", archive);
    expect(() =>
      convert(p, path.join(path.dirname(p), "out.jsonl"), manifestFor("channel", p)),
    ).toThrow(/layer 0 offers 5 distinct widths/);
  });

  it("rejects two officials that collapse to one key", () => {
    const archive = channelArchive() as Record<string, unknown>;
    archive["(32, 32, 48, 48, 96, 96, 112)"] = archive["[32, 32, 48, 48, 96, 96, 112]"];
    const p = writeArchive(tmpdir("ingest-dup-"), "Results_ResNet.json", archive);
    expect(() =>
      convert(p, path.join(path.dirname(p), "out.jsonl"), manifestFor("channel", p)),
    ).toThrow(/both map to key/);
  });
});

describe("convert cell", () => {
  let out: string;

  beforeAll(() => {
    out = path.join(tmpdir("ingest-cell-"), "nas-bench-201.jsonl");
    convert(cellPath, out, manifestFor("cell", cellPath));
  });

  it("converts all 15625 entries", () => {
    const lines = readLines(out);
    expect(lines.length).toBe(15626);
    const header = JSON.parse(lines[0]);
    expect(header.space).toBe("cell");
    expect(header.count).toBe(15625);
    expect(header.provenance).toContain("dataset=cifar10 epochs=200");
  });

  it("selects the requested dataset and epoch setting", () => {
    const i = 7777;
    const d = i.toString(5).padStart(6, "0").split("").map(Number);
    // canonical reorder: positions 2 and 3 swap
    const key = [d[0], d[1], d[3], d[2], d[4], d[5]].join("");
    const entry = readLines(out)
      .slice(1)
      .map((l) => JSON.parse(l))
      .find((e) => e.key === key);
    expect(entry.val_acc).toBeCloseTo(acc(i), 10);
    expect(entry.test_acc).toBeCloseTo(acc(i) - 0.5, 10);
  });

  it("honors a different epoch selector", () => {
    const m = manifestFor("cell", cellPath);
    m.epochs = "12";
    const out12 = path.join(tmpdir("ingest-cell12-"), "nas-bench-201.jsonl");
    convert(cellPath, out12, m);
    const first = JSON.parse(readLines(out12)[1]);
    const firstOld = JSON.parse(readLines(out)[1]);
    expect(first.key).toBe(firstOld.key);
    expect(first.val_acc).toBeCloseTo(firstOld.val_acc - 10, 10);
  });
});

describe("abort behavior", () => {
  it("aborts on checksum mismatch without writing anything", () => {
    const m = manifestFor("macro", macroPath);
    m.sha256 = "0".repeat(64);
    const out = path.join(tmpdir("ingest-sha-"), "out.jsonl");
    expect(() => convert(macroPath, out, m)).toThrow(ChecksumMismatch);
    expect(fs.existsSync(out)).toBe(false);
    expect(fs.existsSync(defaultMappingPath(out))).toBe(false);
  });

  it("aborts on cardinality mismatch without writing anything", () => {
    const archive = macroArchive() as Record<string, unknown>;
    delete archive["00000001"];
    const p = writeArchive(tmpdir("ingest-card-"), "nas-bench-macro_cifar10.json", archive);
    const out = path.join(path.dirname(p), "out.jsonl");
    expect(() => convert(p, out, manifestFor("macro", p))).toThrow(CardinalityMismatch);
    expect(() => convert(p, out, manifestFor("macro", p))).toThrow(/6561.*6560/);
    expect(fs.existsSync(out)).toBe(false);
    expect(fs.existsSync(defaultMappingPath(out))).toBe(false);
  });

  it("aborts when a record is missing its accuracy", () => {
    const archive = macroArchive() as Record<string, unknown>;
    archive["00000001"] = { flops: 1, params: 1 };
    const p = writeArchive(tmpdir("ingest-rec-"), "nas-bench-macro_cifar10.json", archive);
    const out = path.join(path.dirname(p), "out.jsonl");
    expect(() => convert(p, out, manifestFor("macro", p))).toThrow(/mean_acc/);
    expect(fs.existsSync(out)).toBe(false);
  });

  it("aborts when the archive root is not an object", () => {
    const d = tmpdir("ingest-root-");
    const p = path.join(d, "archive.json");
    fs.writeFileSync(p, "[]");
    const m: ConversionManifest = {
      archive: "archive.json",
      sha256: fileSha256(p),
      space: "macro",
      converterVersion: CONVERTER_VERSION,
    };
    expect(() => convert(p, path.join(d, "out.jsonl"), m)).toThrow(ArchiveFormatError);
  });

  it("aborts when the cell archive lacks the requested dataset", () => {
    const m = manifestFor("cell", cellPath);
    m.dataset = "ImageNet16-120";
    const out = path.join(tmpdir("ingest-ds-"), "out.jsonl");
    expect(() => convert(cellPath, out, m)).toThrow(/no results for dataset/);
    expect(fs.existsSync(out)).toBe(false);
  });
});

describe("manifest validation", () => {
  it("rejects selector/space mismatches before touching the archive", () => {
    const base = manifestFor("macro", macroPath);
    const out = path.join(tmpdir("ingest-manifest-"), "out.jsonl");

    expect(() =>
      convert(macroPath, out, { ...base, space: "channel" }),
    ).toThrow(/needs baseModel/);
    expect(() =>
      convert(macroPath, out, { ...base, dataset: "cifar10" }),
    ).toThrow(/only apply to space "cell"/);
    expect(() =>
      convert(macroPath, out, { ...base, space: "cell", dataset: "cifar10", epochs: "90" }),
    ).toThrow(/epochs "12" or "200"/);
    expect(() =>
      convert(macroPath, out, { ...base, sha256: "NOT-A-HASH" }),
    ).toThrow(/64 lowercase hex/);
    expect(fs.existsSync(out)).toBe(false);
  });
});

describe("idempotence", () => {
  it("re-running yields byte-identical JSONL and CSV", () => {
    const outA = path.join(tmpdir("ingest-idem-a-"), "macro.jsonl");
    const outB = path.join(tmpdir("ingest-idem-b-"), "macro.jsonl");
    const m = manifestFor("macro", macroPath);
    convert(macroPath, outA, m);
    convert(macroPath, outB, m);
    expect(fs.readFileSync(outA).equals(fs.readFileSync(outB))).toBe(true);
    expect(
      fs.readFileSync(defaultMappingPath(outA)).equals(fs.readFileSync(defaultMappingPath(outB))),
    ).toBe(true);

    const before = fs.readFileSync(outA);
    convert(macroPath, outA, m);
    expect(fs.readFileSync(outA).equals(before)).toBe(true);
  });
});

const havePython =
  spawnSync("python3", ["-c", "import llmnas"], { encoding: "utf-8" }).status === 0;

describe("harness interop", () => {
  it.skipIf(!havePython)("converted output loads in the Python harness", () => {
    const out = path.join(tmpdir("ingest-interop-"), "nas-bench-macro.jsonl");
    convert(macroPath, out, manifestFor("macro", macroPath));
    const script = [
      "import sys",
      "from llmnas import load_benchmark",
      "t = load_benchmark(sys.argv[1])",
      "key, m = t.optimum('val')",
      "print(len(t), key, f'{m.val_acc:.2f}', t.rank_of(m.val_acc))",
    ].join("\n");
    const res = spawnSync("python3", ["-c", script, out], { encoding: "utf-8" });
    expect(res.status, res.stderr).toBe(0);
    // acc(i) = 50 + ((i*7919) % 4300)/100 peaks at 92.99
    const [count, , best, rank] = res.stdout.trim().split(" ");
    expect(count).toBe("6561");
    expect(best).toBe("92.99");
    expect(rank).toBe("1");
  });

  it.skipIf(!havePython)("channel output round-trips with its base model", () => {
    const out = path.join(tmpdir("ingest-interop-ch-"), "channel-bench-resnet.jsonl");
    convert(channelPath, out, manifestFor("channel", channelPath));
    const script = [
      "import sys",
      "from llmnas import load_benchmark",
      "t = load_benchmark(sys.argv[1])",
      "print(len(t), t.space.base_model)",
    ].join("\n");
    const res = spawnSync("python3", ["-c", script, out], { encoding: "utf-8" });
    expect(res.status, res.stderr).toBe(0);
    expect(res.stdout.trim()).toBe("16384 resnet");
  });
});
